#include "bisift/distance.hpp"

#include <bit>
#include <cmath>
#include <string>
#include <vector>

#include "bisift/errors.hpp"
#include "bisift/parallel.hpp"

namespace bisift {

namespace {

void require_same_scheme(const BinaryFingerprint& a, const BinaryFingerprint& b) {
  if (a.scheme != b.scheme) {
    throw SchemeError(std::string("cannot compare ") + to_string(a.scheme) + " and " + to_string(b.scheme) +
                      " fingerprints");
  }
}

// Best and runner-up over [begin, end) in raw metric units (squared for L2).
template <typename Metric>
struct Partial {
  std::size_t index = 0;
  Metric best{};
  Metric second{};
  bool has_best = false;
  bool has_second = false;
};

template <typename Metric, typename Element, typename DistanceFn>
Partial<Metric> scan(const Element& q, std::span<const Element> db, std::size_t begin, std::size_t end,
                     DistanceFn&& dist) {
  Partial<Metric> p;
  if (begin == end) return p;
  p.index = begin;
  p.best = dist(q, db[begin]);
  p.has_best = true;
  for (std::size_t i = begin + 1; i < end; ++i) {
    const Metric d = dist(q, db[i]);
    if (d < p.best) {
      p.second = p.best;
      p.best = d;
      p.index = i;
      p.has_second = true;
    } else if (!p.has_second || d < p.second) {
      p.second = d;
      p.has_second = true;
    }
  }
  return p;
}

// Keeps the two smallest distances overall; among equal best distances the
// lowest index wins because blocks are merged in ascending order.
template <typename Metric>
Partial<Metric> merge(const std::vector<Partial<Metric>>& parts) {
  Partial<Metric> out;
  auto offer_second = [&out](Metric d) {
    if (!out.has_second || d < out.second) {
      out.second = d;
      out.has_second = true;
    }
  };
  for (const auto& p : parts) {
    if (!p.has_best) continue;
    if (!out.has_best) {
      out = p;
      continue;
    }
    if (p.best < out.best) {
      offer_second(out.best);
      out.best = p.best;
      out.index = p.index;
    } else {
      offer_second(p.best);
    }
    if (p.has_second) offer_second(p.second);
  }
  return out;
}

template <typename Metric, typename Element, typename DistanceFn, typename ToDistance>
Neighbor run_scan(const Element& q, std::span<const Element> db, unsigned workers, DistanceFn dist,
                  ToDistance to_distance) {
  if (db.empty()) throw EmptyDatabaseError("nearest neighbour query against an empty database");

  Partial<Metric> result;
  if (workers <= 1 || db.size() < 2 * static_cast<std::size_t>(workers)) {
    result = scan<Metric>(q, db, 0, db.size(), dist);
  } else {
    std::vector<Partial<Metric>> parts(workers);
    parallel_blocks(db.size(), workers, [&](std::size_t begin, std::size_t end, std::size_t block) {
      parts[block] = scan<Metric>(q, db, begin, end, dist);
    });
    result = merge(parts);
  }

  Neighbor n;
  n.index = result.index;
  n.distance = to_distance(result.best);
  n.second_distance = result.has_second ? to_distance(result.second) : kNoSecondNeighbor;
  return n;
}

double sqrt_of(auto squared) { return std::sqrt(static_cast<double>(squared)); }

}  // namespace

const char* to_string(DistanceKind kind) noexcept {
  switch (kind) {
    case DistanceKind::FloatL2: return "float-l2";
    case DistanceKind::IntL2: return "int-l2";
    case DistanceKind::HammingNaive: return "hamming-naive";
    case DistanceKind::HammingLookup: return "hamming-lookup";
  }
  return "unknown";
}

std::optional<DistanceKind> parse_distance_kind(std::string_view name) noexcept {
  for (auto kind : {DistanceKind::FloatL2, DistanceKind::IntL2, DistanceKind::HammingNaive,
                    DistanceKind::HammingLookup}) {
    if (name == to_string(kind)) return kind;
  }
  return std::nullopt;
}

bool is_hamming(DistanceKind kind) noexcept {
  return kind == DistanceKind::HammingNaive || kind == DistanceKind::HammingLookup;
}

double euclidean(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) {
    throw DimensionError("euclidean: dimension mismatch " + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()));
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - b[i];
    sum += d * d;
  }
  return std::sqrt(sum);
}

double euclidean(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  if (a.size() != b.size()) {
    throw DimensionError("euclidean: dimension mismatch " + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()));
  }
  std::uint64_t sum = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const int d = static_cast<int>(a[i]) - static_cast<int>(b[i]);
    sum += static_cast<std::uint64_t>(d * d);
  }
  return std::sqrt(static_cast<double>(sum));
}

float float_l2_squared(const FloatDescriptor& a, const FloatDescriptor& b) noexcept {
  float sum = 0.0f;
  for (std::size_t i = 0; i < kDescriptorDim; ++i) {
    const float d = a[i] - b[i];
    sum += d * d;
  }
  return sum;
}

std::uint32_t int_l2_squared(const IntDescriptor& a, const IntDescriptor& b) noexcept {
  std::uint32_t sum = 0;
  for (std::size_t i = 0; i < kDescriptorDim; ++i) {
    const int d = static_cast<int>(a[i]) - static_cast<int>(b[i]);
    sum += static_cast<std::uint32_t>(d * d);
  }
  return sum;
}

PopcountTable::PopcountTable() {
  for (std::size_t v = 0; v < counts_.size(); ++v) {
    counts_[v] = static_cast<std::uint8_t>(std::popcount(static_cast<std::uint16_t>(v)));
  }
}

const PopcountTable& PopcountTable::instance() {
  static const PopcountTable table;
  return table;
}

int hamming_naive(const BinaryFingerprint& a, const BinaryFingerprint& b) {
  require_same_scheme(a, b);
  return detail::hamming_naive_unchecked(a, b);
}

int hamming_lookup(const BinaryFingerprint& a, const BinaryFingerprint& b) {
  require_same_scheme(a, b);
  return detail::hamming_lookup_unchecked(a, b, PopcountTable::instance());
}

Neighbor nearest_neighbor(const FloatDescriptor& q, std::span<const FloatDescriptor> db, DistanceKind kind,
                          unsigned workers) {
  if (kind != DistanceKind::FloatL2) {
    throw SchemeError(std::string("distance kind ") + to_string(kind) + " does not apply to float descriptors");
  }
  return run_scan<float>(q, db, workers, float_l2_squared, [](float s) { return sqrt_of(s); });
}

Neighbor nearest_neighbor(const IntDescriptor& q, std::span<const IntDescriptor> db, DistanceKind kind,
                          unsigned workers) {
  if (kind != DistanceKind::IntL2) {
    throw SchemeError(std::string("distance kind ") + to_string(kind) + " does not apply to uint8 descriptors");
  }
  return run_scan<std::uint32_t>(q, db, workers, int_l2_squared, [](std::uint32_t s) { return sqrt_of(s); });
}

Neighbor nearest_neighbor(const BinaryFingerprint& q, std::span<const BinaryFingerprint> db, DistanceKind kind,
                          unsigned workers) {
  auto as_double = [](int d) { return static_cast<double>(d); };
  switch (kind) {
    case DistanceKind::HammingNaive:
      return run_scan<int>(q, db, workers,
                           [](const BinaryFingerprint& a, const BinaryFingerprint& b) {
                             if (a.scheme != b.scheme) require_same_scheme(a, b);
                             return detail::hamming_naive_unchecked(a, b);
                           },
                           as_double);
    case DistanceKind::HammingLookup: {
      const PopcountTable& table = PopcountTable::instance();
      return run_scan<int>(q, db, workers,
                           [&table](const BinaryFingerprint& a, const BinaryFingerprint& b) {
                             if (a.scheme != b.scheme) require_same_scheme(a, b);
                             return detail::hamming_lookup_unchecked(a, b, table);
                           },
                           as_double);
    }
    default:
      throw SchemeError(std::string("distance kind ") + to_string(kind) + " does not apply to binary fingerprints");
  }
}

}  // namespace bisift

#include "bisift/vocabulary.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "bisift/errors.hpp"
#include "bisift/parallel.hpp"
#include "byte_io.hpp"

namespace bisift {

namespace {

constexpr std::string_view kMagic = "BVOC";
constexpr std::uint16_t kVersion = 1;

// Squared distance accumulated in double over four interleaved lanes; the
// lane order is fixed so results do not depend on the caller.
double squared_distance(const FloatDescriptor& a, const FloatDescriptor& b) noexcept {
  double lanes[4] = {0.0, 0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < kDescriptorDim; i += 4) {
    for (std::size_t l = 0; l < 4; ++l) {
      const double d = static_cast<double>(a[i + l]) - static_cast<double>(b[i + l]);
      lanes[l] += d * d;
    }
  }
  return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

struct Nearest {
  std::uint32_t index = 0;
  double sq_dist = 0.0;
};

Nearest nearest_centroid(const FloatDescriptor& d, std::span<const FloatDescriptor> centroids) {
  Nearest best{0, squared_distance(d, centroids[0])};
  for (std::uint32_t c = 1; c < centroids.size(); ++c) {
    const double sq = squared_distance(d, centroids[c]);
    if (sq < best.sq_dist) best = {c, sq};
  }
  return best;
}

std::vector<FloatDescriptor> kmeans_plus_plus(std::span<const FloatDescriptor> points, std::size_t k,
                                              std::mt19937_64& rng) {
  std::vector<FloatDescriptor> centroids;
  centroids.reserve(k);
  std::uniform_int_distribution<std::size_t> pick(0, points.size() - 1);
  centroids.push_back(points[pick(rng)]);

  std::vector<double> closest(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) closest[i] = squared_distance(points[i], centroids[0]);

  while (centroids.size() < k) {
    const double total = std::accumulate(closest.begin(), closest.end(), 0.0);
    if (total <= 0.0) {
      throw InsufficientDataError("sample has only " + std::to_string(centroids.size()) +
                                  " distinct points, fewer than K = " + std::to_string(k));
    }
    const double target = std::uniform_real_distribution<double>(0.0, total)(rng);
    std::size_t chosen = points.size();
    double running = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (closest[i] <= 0.0) continue;
      running += closest[i];
      chosen = i;
      if (running > target) break;
    }
    centroids.push_back(points[chosen]);
    for (std::size_t i = 0; i < points.size(); ++i) {
      closest[i] = std::min(closest[i], squared_distance(points[i], centroids.back()));
    }
  }
  return centroids;
}

}  // namespace

std::vector<FloatDescriptor> collect_training_sample(std::span<const DescriptorSet> sets) {
  std::vector<FloatDescriptor> out;
  for (const DescriptorSet& set : sets) {
    if (const auto* rows = std::get_if<std::vector<FloatDescriptor>>(&set.descriptors)) {
      out.insert(out.end(), rows->begin(), rows->end());
    } else if (const auto* ints = std::get_if<std::vector<IntDescriptor>>(&set.descriptors)) {
      for (const IntDescriptor& d : *ints) out.push_back(to_float_descriptor(d));
    } else {
      throw InvalidInputError("cannot train a vocabulary on binary fingerprints ('" + set.image_id + "')");
    }
  }
  return out;
}

Vocabulary train_kmeans(std::span<const FloatDescriptor> sample, const KMeansOptions& options) {
  const std::size_t k = options.k;
  if (k == 0) throw InvalidInputError("vocabulary size K must be at least 1");

  std::mt19937_64 rng(options.seed);
  std::vector<FloatDescriptor> subsampled;
  std::span<const FloatDescriptor> points = sample;
  if (options.sample_cap > 0 && sample.size() > options.sample_cap) {
    subsampled.reserve(options.sample_cap);
    std::sample(sample.begin(), sample.end(), std::back_inserter(subsampled), options.sample_cap, rng);
    points = subsampled;
  }
  if (points.size() < k) {
    throw InsufficientDataError("need at least K = " + std::to_string(k) + " descriptors, got " +
                                std::to_string(points.size()));
  }

  Vocabulary vocab;
  vocab.seed = options.seed;
  vocab.centroids = kmeans_plus_plus(points, k, rng);

  const std::size_t n = points.size();
  std::vector<std::uint32_t> assignment(n, std::numeric_limits<std::uint32_t>::max());
  std::vector<double> sq_dist(n, 0.0);

  // Returns the number of points whose cluster changed.
  auto assign = [&] {
    std::vector<std::size_t> changed(std::max(1u, options.workers), 0);
    parallel_blocks(n, options.workers, [&](std::size_t begin, std::size_t end, std::size_t block) {
      for (std::size_t i = begin; i < end; ++i) {
        const Nearest nearest = nearest_centroid(points[i], vocab.centroids);
        if (nearest.index != assignment[i]) ++changed[block];
        assignment[i] = nearest.index;
        sq_dist[i] = nearest.sq_dist;
      }
    });
    vocab.inertia = std::accumulate(sq_dist.begin(), sq_dist.end(), 0.0);
    vocab.inertia_history.push_back(vocab.inertia);
    return std::accumulate(changed.begin(), changed.end(), std::size_t{0});
  };

  auto update = [&] {
    std::vector<std::array<double, kDescriptorDim>> sums(k);
    std::vector<std::size_t> members(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      auto& sum = sums[assignment[i]];
      for (std::size_t j = 0; j < kDescriptorDim; ++j) sum[j] += points[i][j];
      ++members[assignment[i]];
    }
    std::vector<bool> reseeded(n, false);
    for (std::size_t c = 0; c < k; ++c) {
      if (members[c] > 0) {
        const double inv = 1.0 / static_cast<double>(members[c]);
        for (std::size_t j = 0; j < kDescriptorDim; ++j) {
          vocab.centroids[c][j] = static_cast<float>(sums[c][j] * inv);
        }
        continue;
      }
      std::size_t farthest = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (reseeded[i]) continue;
        if (farthest == n || sq_dist[i] > sq_dist[farthest]) farthest = i;
      }
      reseeded[farthest] = true;
      vocab.centroids[c] = points[farthest];
    }
  };

  assign();
  for (std::uint32_t iter = 1; iter <= options.max_iters; ++iter) {
    update();
    vocab.iterations = iter;
    if (assign() == 0) break;
  }
  return vocab;
}

std::uint32_t quantize(const FloatDescriptor& d, const Vocabulary& vocabulary) {
  if (vocabulary.centroids.empty()) throw InvalidInputError("empty vocabulary");
  return nearest_centroid(d, vocabulary.centroids).index + 1;
}

std::vector<std::uint32_t> word_counts(const DescriptorSet& set, const Vocabulary& vocabulary) {
  std::vector<std::uint32_t> counts(vocabulary.size(), 0);
  std::visit(
      [&](const auto& rows) {
        using Row = typename std::decay_t<decltype(rows)>::value_type;
        if constexpr (std::is_same_v<Row, BinaryFingerprint>) {
          throw InvalidInputError("cannot build a visual-word histogram from binary fingerprints ('" +
                                  set.image_id + "')");
        } else if constexpr (std::is_same_v<Row, IntDescriptor>) {
          for (const Row& row : rows) ++counts[quantize(to_float_descriptor(row), vocabulary) - 1];
        } else {
          for (const Row& row : rows) ++counts[quantize(row, vocabulary) - 1];
        }
      },
      set.descriptors);
  return counts;
}

BovwHistogram build_histogram(const DescriptorSet& set, const Vocabulary& vocabulary) {
  const auto counts = word_counts(set, vocabulary);
  BovwHistogram h;
  h.image_id = set.image_id;
  h.raw_count = set.count();
  h.weights.assign(counts.size(), 0.0f);

  double sq = 0.0;
  for (std::uint32_t c : counts) sq += static_cast<double>(c) * c;
  if (sq == 0.0) return h;
  const double inv = 1.0 / std::sqrt(sq);
  for (std::size_t w = 0; w < counts.size(); ++w) h.weights[w] = static_cast<float>(counts[w] * inv);
  return h;
}

void save_vocabulary(const std::filesystem::path& path, const Vocabulary& vocabulary) {
  if (vocabulary.centroids.empty()) throw InvalidInputError("refusing to save an empty vocabulary");
  detail::ByteWriter w;
  w.text(kMagic);
  w.u16(kVersion);
  w.u32(static_cast<std::uint32_t>(vocabulary.size()));
  w.u32(static_cast<std::uint32_t>(kDescriptorDim));
  for (const FloatDescriptor& c : vocabulary.centroids) {
    for (float v : c) w.f32(v);
  }
  w.u64(vocabulary.seed);
  w.u32(vocabulary.iterations);
  w.write_to(path);
}

Vocabulary load_vocabulary(const std::filesystem::path& path) {
  const auto bytes = detail::read_file_bytes(path);
  detail::ByteReader r(bytes);
  if (r.remaining() < kMagic.size()) throw FormatError("not a vocabulary file: shorter than the magic number");
  const auto magic = r.take(kMagic.size());
  if (!std::equal(magic.begin(), magic.end(), kMagic.begin())) throw FormatError("bad magic: expected 'BVOC'");
  const std::uint16_t version = r.u16();
  if (version != kVersion) throw FormatError("unsupported vocabulary file version " + std::to_string(version));
  const std::uint32_t k = r.u32();
  const std::uint32_t dim = r.u32();
  if (dim != kDescriptorDim) {
    throw DimensionError("vocabulary dimension " + std::to_string(dim) + ", expected 128");
  }
  if (k == 0) throw FormatError("vocabulary declares K = 0");

  r.require(static_cast<std::size_t>(k) * kDescriptorDim * sizeof(float));
  Vocabulary vocab;
  vocab.centroids.resize(k);
  for (auto& c : vocab.centroids) {
    for (float& v : c) v = r.f32();
  }
  vocab.seed = r.u64();
  vocab.iterations = r.u32();
  if (!r.at_end()) {
    throw CorruptionError("trailing " + std::to_string(r.remaining()) + " bytes at byte offset " +
                          std::to_string(r.pos()));
  }
  return vocab;
}

}  // namespace bisift

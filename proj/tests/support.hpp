// Shared test helpers: seeded generators, a scratch directory, and
// deliberately naive reference implementations used as oracles.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include "bisift/descriptor.hpp"
#include "bisift/matching.hpp"
#include "bisift/vocabulary.hpp"

namespace testsupport {

using bisift::BinaryFingerprint;
using bisift::FloatDescriptor;
using bisift::IntDescriptor;

// --- generators --------------------------------------------------------------

inline IntDescriptor random_int_descriptor(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> byte(0, 255);
  IntDescriptor d{};
  for (auto& c : d) c = static_cast<std::uint8_t>(byte(rng));
  return d;
}

inline FloatDescriptor random_float_descriptor(std::mt19937_64& rng) {
  std::uniform_real_distribution<float> unit(0.0f, 1.0f);
  FloatDescriptor d{};
  for (auto& c : d) c = unit(rng);
  return d;
}

// Float descriptor with small integer components, so ties and exact sums occur.
inline FloatDescriptor random_coarse_descriptor(std::mt19937_64& rng, int levels = 4) {
  std::uniform_int_distribution<int> level(0, levels - 1);
  FloatDescriptor d{};
  for (auto& c : d) c = static_cast<float>(level(rng));
  return d;
}

inline BinaryFingerprint random_fingerprint(std::mt19937_64& rng, bisift::Scheme scheme) {
  BinaryFingerprint f;
  f.scheme = scheme;
  f.words = {rng(), rng()};
  if (scheme == bisift::Scheme::Bisift) f.set_bit(127, false);
  return f;
}

inline std::vector<IntDescriptor> random_int_descriptors(std::size_t n, std::mt19937_64& rng) {
  std::vector<IntDescriptor> out(n);
  for (auto& d : out) d = random_int_descriptor(rng);
  return out;
}

inline std::vector<FloatDescriptor> as_float(const std::vector<IntDescriptor>& ints) {
  std::vector<FloatDescriptor> out(ints.size());
  for (std::size_t i = 0; i < ints.size(); ++i) {
    for (std::size_t j = 0; j < bisift::kDescriptorDim; ++j) out[i][j] = static_cast<float>(ints[i][j]);
  }
  return out;
}

// --- scratch directory -------------------------------------------------------

class TempDir {
public:
  TempDir() {
    std::random_device rd;
    const auto base = std::filesystem::temp_directory_path();
    for (;;) {
      path_ = base / ("bisift-test-" + std::to_string(rd()) + std::to_string(rd()));
      if (std::filesystem::create_directory(path_)) break;
    }
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
  std::filesystem::path path_;
};

inline std::string read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_bytes(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

// --- oracles -----------------------------------------------------------------

// Bit list of the whole-vector scheme: one entry per adjacent pair plus the
// zero padding bit.
template <typename Vec>
std::vector<int> bisift_bits_oracle(const Vec& d) {
  std::vector<int> bits;
  for (int i = 1; i <= 127; ++i) bits.push_back(d[i - 1] >= d[i] ? 1 : 0);
  bits.push_back(0);
  return bits;
}

template <typename Vec>
std::vector<int> percell_bits_oracle(const Vec& d) {
  std::vector<int> bits;
  for (int cell = 0; cell < 16; ++cell) {
    for (int j = 0; j < 8; ++j) {
      const int next = (j + 1) % 8;
      bits.push_back(d[cell * 8 + j] >= d[cell * 8 + next] ? 1 : 0);
    }
  }
  return bits;
}

inline std::vector<int> bits_of(const BinaryFingerprint& f) {
  std::vector<int> bits;
  for (int w = 0; w < 2; ++w) {
    for (int b = 0; b < 64; ++b) bits.push_back(static_cast<int>((f.words[w] >> b) & 1U));
  }
  return bits;
}

inline int hamming_oracle(const BinaryFingerprint& a, const BinaryFingerprint& b) {
  const auto x = bits_of(a);
  const auto y = bits_of(b);
  int d = 0;
  for (std::size_t i = 0; i < x.size(); ++i) d += x[i] != y[i];
  return d;
}

inline double l2_oracle(const FloatDescriptor& a, const FloatDescriptor& b) {
  long double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const long double d = static_cast<long double>(a[i]) - b[i];
    s += d * d;
  }
  return std::sqrt(static_cast<double>(s));
}

inline double l2_oracle(const IntDescriptor& a, const IntDescriptor& b) {
  std::int64_t s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const std::int64_t d = static_cast<std::int64_t>(a[i]) - b[i];
    s += d * d;
  }
  return std::sqrt(static_cast<double>(s));
}

inline double distance_oracle(const FloatDescriptor& a, const FloatDescriptor& b) { return l2_oracle(a, b); }
inline double distance_oracle(const IntDescriptor& a, const IntDescriptor& b) { return l2_oracle(a, b); }
inline double distance_oracle(const BinaryFingerprint& a, const BinaryFingerprint& b) { return hamming_oracle(a, b); }

struct ScanOracle {
  std::size_t index = 0;
  double distance = 0.0;
  double second = 0.0;
};

// Computes every distance, then sorts (distance, index) pairs.
template <typename T>
ScanOracle exhaustive_scan(const T& q, const std::vector<T>& db) {
  std::vector<std::pair<double, std::size_t>> all;
  for (std::size_t i = 0; i < db.size(); ++i) all.emplace_back(distance_oracle(q, db[i]), i);
  std::sort(all.begin(), all.end());
  ScanOracle out{all[0].second, all[0].first, INFINITY};
  if (all.size() > 1) out.second = all[1].first;
  return out;
}

// Double loop over every (query, reference) pair.
template <typename T>
bisift::MatchResult double_loop_matcher(const std::vector<T>& q, const std::vector<T>& r, double ratio) {
  bisift::MatchResult result;
  if (q.empty() || r.empty()) return result;
  for (std::size_t i = 0; i < q.size(); ++i) {
    double best = INFINITY, second = INFINITY;
    std::size_t best_j = 0;
    for (std::size_t j = 0; j < r.size(); ++j) {
      const double d = distance_oracle(q[i], r[j]);
      if (d < best) {
        second = best;
        best = d;
        best_j = j;
      } else if (d < second) {
        second = d;
      }
    }
    if (best < second * ratio) {
      result.pairs.push_back({i, best_j, best, second});
      ++result.similarity.match_count;
      result.similarity.total_dist += best;
    }
  }
  return result;
}

// 1-based argmin over centroids, squared distances in long double.
inline std::uint32_t argmin_oracle(const FloatDescriptor& d, const bisift::Vocabulary& v) {
  std::uint32_t best = 0;
  long double best_d = INFINITY;
  for (std::size_t k = 0; k < v.centroids.size(); ++k) {
    long double s = 0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      const long double x = static_cast<long double>(d[i]) - v.centroids[k][i];
      s += x * x;
    }
    if (s < best_d) {
      best_d = s;
      best = static_cast<std::uint32_t>(k + 1);
    }
  }
  return best;
}

// Per-pixel histogram accumulation written directly from the definition:
// replicate-border central differences, 4x4 equal bands over pixel centres,
// 45-degree orientation bins, Gaussian window of sigma 1.5 * 41 / 2.
inline std::array<double, 128> patch_histogram_oracle(const bisift::Patch& p) {
  constexpr int n = 41;
  auto px = [&](int x, int y) {
    x = std::clamp(x, 0, n - 1);
    y = std::clamp(y, 0, n - 1);
    return static_cast<double>(p.pixels[static_cast<std::size_t>(y * n + x)]);
  };
  std::array<double, 128> h{};
  const double sigma = 1.5 * n / 2.0;
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      const double gx = (px(x + 1, y) - px(x - 1, y)) / 2.0;
      const double gy = (px(x, y + 1) - px(x, y - 1)) / 2.0;
      const double mag = std::hypot(gx, gy);
      if (mag == 0.0) continue;
      double deg = std::atan2(gy, gx) * 180.0 / M_PI;
      if (deg < 0) deg += 360.0;
      const int bin = static_cast<int>(deg / 45.0) % 8;
      const int cx = static_cast<int>((x + 0.5) * 4.0 / n);
      const int cy = static_cast<int>((y + 0.5) * 4.0 / n);
      const double r2 = (x - 20.0) * (x - 20.0) + (y - 20.0) * (y - 20.0);
      h[static_cast<std::size_t>((cy * 4 + cx) * 8 + bin)] += mag * std::exp(-r2 / (2 * sigma * sigma));
    }
  }
  return h;
}

}  // namespace testsupport

#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "bisift/descriptor.hpp"

namespace bisift {

enum class DistanceKind { FloatL2, IntL2, HammingNaive, HammingLookup };

const char* to_string(DistanceKind kind) noexcept;
std::optional<DistanceKind> parse_distance_kind(std::string_view name) noexcept;
bool is_hamming(DistanceKind kind) noexcept;

inline constexpr double kNoSecondNeighbor = std::numeric_limits<double>::infinity();

// --- Euclidean ---------------------------------------------------------------

/// Checked Euclidean distance; throws DimensionError on length mismatch.
double euclidean(std::span<const float> a, std::span<const float> b);
double euclidean(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b);

// Unchecked squared kernels used by the scans. The float kernel sums in
// component order in single precision.
float float_l2_squared(const FloatDescriptor& a, const FloatDescriptor& b) noexcept;
std::uint32_t int_l2_squared(const IntDescriptor& a, const IntDescriptor& b) noexcept;

// --- Hamming -----------------------------------------------------------------

/// 65,536-entry table of 16-bit population counts. Built once on first use and
/// immutable afterwards.
class PopcountTable {
public:
  static const PopcountTable& instance();

  std::uint8_t operator[](std::uint16_t v) const noexcept { return counts_[v]; }

private:
  PopcountTable();
  std::array<std::uint8_t, 1 << 16> counts_{};
};

/// Bit-by-bit count of differing positions. Throws SchemeError when the
/// fingerprints use different schemes.
int hamming_naive(const BinaryFingerprint& a, const BinaryFingerprint& b);

/// XOR, then eight 16-bit table lookups. Same result and errors as
/// hamming_naive.
int hamming_lookup(const BinaryFingerprint& a, const BinaryFingerprint& b);

namespace detail {

inline int hamming_naive_unchecked(const BinaryFingerprint& a, const BinaryFingerprint& b) noexcept {
  int d = 0;
  for (std::size_t i = 0; i < kDescriptorDim; ++i) d += a.bit(i) != b.bit(i) ? 1 : 0;
  return d;
}

inline int hamming_lookup_unchecked(const BinaryFingerprint& a, const BinaryFingerprint& b,
                                    const PopcountTable& table) noexcept {
  int d = 0;
  for (std::size_t w = 0; w < 2; ++w) {
    const std::uint64_t x = a.words[w] ^ b.words[w];
    d += table[static_cast<std::uint16_t>(x)] + table[static_cast<std::uint16_t>(x >> 16)] +
         table[static_cast<std::uint16_t>(x >> 32)] + table[static_cast<std::uint16_t>(x >> 48)];
  }
  return d;
}

}  // namespace detail

// --- nearest neighbour -------------------------------------------------------

/// Result of an exhaustive scan. `second_distance` is measured over a
/// different database index than `index` and is kNoSecondNeighbor for a
/// single-element database. Ties resolve to the lowest index.
struct Neighbor {
  std::size_t index = 0;
  double distance = 0.0;
  double second_distance = kNoSecondNeighbor;
};

/// `workers` > 1 partitions the scan into contiguous blocks; the merged result
/// is identical to the single-worker scan.
Neighbor nearest_neighbor(const FloatDescriptor& q, std::span<const FloatDescriptor> db,
                          DistanceKind kind = DistanceKind::FloatL2, unsigned workers = 1);
Neighbor nearest_neighbor(const IntDescriptor& q, std::span<const IntDescriptor> db,
                          DistanceKind kind = DistanceKind::IntL2, unsigned workers = 1);
Neighbor nearest_neighbor(const BinaryFingerprint& q, std::span<const BinaryFingerprint> db,
                          DistanceKind kind = DistanceKind::HammingLookup, unsigned workers = 1);

}  // namespace bisift

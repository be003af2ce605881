#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace bisift {

inline constexpr std::size_t kDescriptorDim = 128;
inline constexpr std::size_t kGridCells = 4;        // per side
inline constexpr std::size_t kOrientationBins = 8;  // per cell

using FloatDescriptor = std::array<float, kDescriptorDim>;
using IntDescriptor = std::array<std::uint8_t, kDescriptorDim>;

enum class Scheme : std::uint8_t { Bisift = 0, Percell = 1 };

/// 128-bit binary fingerprint. Bit i lives in words[i / 64] at position i % 64,
/// which serializes to "bit 0 = least significant bit of byte 0".
struct BinaryFingerprint {
  std::array<std::uint64_t, 2> words{};
  Scheme scheme = Scheme::Bisift;

  bool bit(std::size_t i) const noexcept { return (words[i >> 6] >> (i & 63)) & 1U; }
  void set_bit(std::size_t i, bool value) noexcept {
    const std::uint64_t mask = std::uint64_t{1} << (i & 63);
    if (value) {
      words[i >> 6] |= mask;
    } else {
      words[i >> 6] &= ~mask;
    }
  }
  std::size_t informative_bits() const noexcept { return scheme == Scheme::Bisift ? 127 : 128; }

  friend bool operator==(const BinaryFingerprint&, const BinaryFingerprint&) = default;
};

// On-disk element type tag.
enum class Dtype : std::uint8_t { Float32 = 0, Uint8 = 1, Binary128 = 2 };

const char* to_string(Dtype dtype) noexcept;
const char* to_string(Scheme scheme) noexcept;

/// Normalized grayscale region, row-major. Nominally 41x41 with intensities in
/// [0, 1]; other sizes are representable so callers get a DimensionError
/// instead of undefined behaviour.
struct Patch {
  static constexpr std::size_t kSize = 41;

  std::size_t width = kSize;
  std::size_t height = kSize;
  std::vector<float> pixels = std::vector<float>(kSize * kSize, 0.0f);

  float at(std::size_t x, std::size_t y) const { return pixels[y * width + x]; }
  float& at(std::size_t x, std::size_t y) { return pixels[y * width + x]; }
};

/// All local features of one image in a single representation.
struct DescriptorSet {
  using Storage = std::variant<std::vector<FloatDescriptor>, std::vector<IntDescriptor>,
                               std::vector<BinaryFingerprint>>;

  std::string image_id;
  Storage descriptors;

  std::size_t count() const noexcept;
  Dtype dtype() const noexcept;

  friend bool operator==(const DescriptorSet&, const DescriptorSet&) = default;
};

/// Raw gradient-orientation histograms of a patch: 4x4 cells, 8 bins each,
/// cell-major (index = (cell_y * 4 + cell_x) * 8 + bin). Each pixel votes its
/// Gaussian-weighted gradient magnitude into exactly one cell and one bin.
FloatDescriptor accumulate_patch_histograms(const Patch& patch);

/// SIFT post-processing: L2-normalize, clamp at 0.2, re-normalize. A zero
/// vector is returned unchanged.
FloatDescriptor normalize_sift(const FloatDescriptor& raw);

FloatDescriptor compute_patch_descriptor(const Patch& patch);

/// round(512 * v) clamped to [0, 255].
IntDescriptor to_int_descriptor(const FloatDescriptor& d);

/// Exact value cast of 8-bit components to float.
FloatDescriptor to_float_descriptor(const IntDescriptor& d);

// --- persistence -----------------------------------------------------------

struct DescriptorFile {
  Dtype dtype = Dtype::Float32;
  Scheme scheme = Scheme::Bisift;  // meaningful for Binary128 only
  std::vector<DescriptorSet> sets;
  std::vector<std::uint64_t> offsets;  // byte offset of each image record
};

/// Writes every set in `sets`; all must share one dtype (and one scheme for
/// fingerprints). An empty collection is written with `empty_dtype`.
void save_descriptors(const std::filesystem::path& path, std::span<const DescriptorSet> sets,
                      Dtype empty_dtype = Dtype::Float32);

DescriptorFile read_descriptor_file(const std::filesystem::path& path);
std::vector<DescriptorSet> load_descriptors(const std::filesystem::path& path);

/// Reads the single image record starting at `offset`.
DescriptorSet read_descriptor_set_at(const std::filesystem::path& path, std::uint64_t offset);

/// Reads several records from one file, reading the file once.
std::vector<DescriptorSet> read_descriptor_sets_at(const std::filesystem::path& path,
                                                   std::span<const std::uint64_t> offsets);

/// Imports descriptors produced by an external extractor as whitespace
/// separated text, one descriptor per non-empty line. Every line must carry
/// exactly 128 values.
DescriptorSet import_text_descriptors(const std::filesystem::path& path, std::string image_id);

}  // namespace bisift

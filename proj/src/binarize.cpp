#include "bisift/binarize.hpp"

#include "bisift/errors.hpp"

namespace bisift {

namespace {

template <typename T>
BinaryFingerprint bisift_bits(const T* f) {
  BinaryFingerprint fp;
  fp.scheme = Scheme::Bisift;
  for (std::size_t i = 0; i + 1 < kDescriptorDim; ++i) {
    if (f[i] >= f[i + 1]) fp.words[i >> 6] |= std::uint64_t{1} << (i & 63);
  }
  return fp;
}

template <typename T>
BinaryFingerprint percell_bits(const T* f) {
  BinaryFingerprint fp;
  fp.scheme = Scheme::Percell;
  for (std::size_t cell = 0; cell < kGridCells * kGridCells; ++cell) {
    const T* h = f + cell * kOrientationBins;
    for (std::size_t j = 0; j < kOrientationBins; ++j) {
      const std::size_t bit = cell * kOrientationBins + j;
      if (h[j] >= h[(j + 1) % kOrientationBins]) fp.words[bit >> 6] |= std::uint64_t{1} << (bit & 63);
    }
  }
  return fp;
}

}  // namespace

BinaryFingerprint binarize_bisift(std::span<const float, kDescriptorDim> d) { return bisift_bits(d.data()); }
BinaryFingerprint binarize_bisift(const IntDescriptor& d) { return bisift_bits(d.data()); }
BinaryFingerprint binarize_percell(std::span<const float, kDescriptorDim> d) { return percell_bits(d.data()); }
BinaryFingerprint binarize_percell(const IntDescriptor& d) { return percell_bits(d.data()); }

BinaryFingerprint binarize(const FloatDescriptor& d, Scheme scheme) {
  return scheme == Scheme::Bisift ? binarize_bisift(d) : binarize_percell(d);
}

BinaryFingerprint binarize(const IntDescriptor& d, Scheme scheme) {
  return scheme == Scheme::Bisift ? binarize_bisift(d) : binarize_percell(d);
}

DescriptorSet binarize_set(const DescriptorSet& set, Scheme scheme) {
  if (set.dtype() == Dtype::Binary128) {
    throw InvalidInputError("image '" + set.image_id + "' is already binarized");
  }
  std::vector<BinaryFingerprint> out;
  out.reserve(set.count());
  std::visit(
      [&](const auto& rows) {
        using Row = typename std::decay_t<decltype(rows)>::value_type;
        if constexpr (!std::is_same_v<Row, BinaryFingerprint>) {
          for (const Row& row : rows) out.push_back(binarize(row, scheme));
        }
      },
      set.descriptors);
  return DescriptorSet{set.image_id, std::move(out)};
}

}  // namespace bisift

#pragma once

#include <span>

#include "bisift/descriptor.hpp"

namespace bisift {

/// Whole-vector binarization: bit i is set when component i >= component i+1,
/// for i in [0, 127). Bit 127 is padding and always zero.
BinaryFingerprint binarize_bisift(std::span<const float, kDescriptorDim> d);
BinaryFingerprint binarize_bisift(const IntDescriptor& d);

/// Per-cell binarization: each 8-bin orientation histogram is compared to its
/// circular neighbour (bin 7 against bin 0), giving 8 bits per cell.
BinaryFingerprint binarize_percell(std::span<const float, kDescriptorDim> d);
BinaryFingerprint binarize_percell(const IntDescriptor& d);

BinaryFingerprint binarize(const FloatDescriptor& d, Scheme scheme);
BinaryFingerprint binarize(const IntDescriptor& d, Scheme scheme);

/// Binarizes every descriptor of a float or uint8 set; throws InvalidInputError
/// on a set that is already binary.
DescriptorSet binarize_set(const DescriptorSet& set, Scheme scheme);

}  // namespace bisift

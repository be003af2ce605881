#include "bisift/descriptor.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "bisift/errors.hpp"

namespace bisift {

namespace {

constexpr double kClampThreshold = 0.2;
constexpr double kIntegerScale = 512.0;
constexpr double kWindowFactor = 1.5;

// Central difference with replicate borders.
double gradient_along(const Patch& p, std::size_t x, std::size_t y, bool horizontal) {
  if (horizontal) {
    const std::size_t lo = x == 0 ? 0 : x - 1;
    const std::size_t hi = x + 1 == p.width ? x : x + 1;
    return (static_cast<double>(p.at(hi, y)) - p.at(lo, y)) * 0.5;
  }
  const std::size_t lo = y == 0 ? 0 : y - 1;
  const std::size_t hi = y + 1 == p.height ? y : y + 1;
  return (static_cast<double>(p.at(x, hi)) - p.at(x, lo)) * 0.5;
}

// Pixel centres split into kGridCells equal bands: floor((i + 0.5) * 4 / n).
std::size_t cell_of(std::size_t i, std::size_t n) {
  return std::min((2 * i + 1) * kGridCells / (2 * n), kGridCells - 1);
}

std::size_t orientation_bin(double gx, double gy) {
  double theta = std::atan2(gy, gx);
  if (theta < 0.0) theta += 2.0 * std::numbers::pi;
  auto bin = static_cast<std::size_t>(theta * kOrientationBins / (2.0 * std::numbers::pi));
  return bin >= kOrientationBins ? 0 : bin;
}

}  // namespace

const char* to_string(Dtype dtype) noexcept {
  switch (dtype) {
    case Dtype::Float32: return "float32";
    case Dtype::Uint8: return "uint8";
    case Dtype::Binary128: return "binary128";
  }
  return "unknown";
}

const char* to_string(Scheme scheme) noexcept {
  return scheme == Scheme::Bisift ? "bisift" : "percell";
}

std::size_t DescriptorSet::count() const noexcept {
  return std::visit([](const auto& v) { return v.size(); }, descriptors);
}

Dtype DescriptorSet::dtype() const noexcept {
  return static_cast<Dtype>(descriptors.index());
}

FloatDescriptor accumulate_patch_histograms(const Patch& patch) {
  if (patch.width != Patch::kSize || patch.height != Patch::kSize ||
      patch.pixels.size() != patch.width * patch.height) {
    throw DimensionError("patch must be " + std::to_string(Patch::kSize) + "x" +
                         std::to_string(Patch::kSize) + ", got " + std::to_string(patch.width) +
                         "x" + std::to_string(patch.height));
  }

  const double centre = (static_cast<double>(patch.width) - 1.0) / 2.0;
  const double sigma = kWindowFactor * static_cast<double>(patch.width) / 2.0;
  const double inv_two_sigma_sq = 1.0 / (2.0 * sigma * sigma);

  std::array<double, kDescriptorDim> hist{};
  for (std::size_t y = 0; y < patch.height; ++y) {
    const std::size_t cy = cell_of(y, patch.height);
    const double dy = static_cast<double>(y) - centre;
    for (std::size_t x = 0; x < patch.width; ++x) {
      const double gx = gradient_along(patch, x, y, true);
      const double gy = gradient_along(patch, x, y, false);
      const double magnitude = std::sqrt(gx * gx + gy * gy);
      if (magnitude == 0.0) continue;
      const double dx = static_cast<double>(x) - centre;
      const double weight = std::exp(-(dx * dx + dy * dy) * inv_two_sigma_sq);
      const std::size_t cx = cell_of(x, patch.width);
      hist[(cy * kGridCells + cx) * kOrientationBins + orientation_bin(gx, gy)] +=
          weight * magnitude;
    }
  }

  FloatDescriptor out{};
  std::transform(hist.begin(), hist.end(), out.begin(),
                 [](double v) { return static_cast<float>(v); });
  return out;
}

FloatDescriptor normalize_sift(const FloatDescriptor& raw) {
  std::array<double, kDescriptorDim> v{};
  std::copy(raw.begin(), raw.end(), v.begin());

  auto normalize = [&v] {
    double sq = 0.0;
    for (double c : v) sq += c * c;
    if (sq == 0.0) return false;
    const double inv = 1.0 / std::sqrt(sq);
    for (double& c : v) c *= inv;
    return true;
  };

  if (!normalize()) return raw;
  for (double& c : v) c = std::min(c, kClampThreshold);
  normalize();

  FloatDescriptor out{};
  std::transform(v.begin(), v.end(), out.begin(), [](double c) { return static_cast<float>(c); });
  return out;
}

FloatDescriptor compute_patch_descriptor(const Patch& patch) {
  return normalize_sift(accumulate_patch_histograms(patch));
}

IntDescriptor to_int_descriptor(const FloatDescriptor& d) {
  IntDescriptor out{};
  for (std::size_t i = 0; i < kDescriptorDim; ++i) {
    const double scaled = std::round(static_cast<double>(d[i]) * kIntegerScale);
    out[i] = static_cast<std::uint8_t>(std::clamp(scaled, 0.0, 255.0));
  }
  return out;
}

FloatDescriptor to_float_descriptor(const IntDescriptor& d) {
  FloatDescriptor out{};
  std::copy(d.begin(), d.end(), out.begin());
  return out;
}

}  // namespace bisift

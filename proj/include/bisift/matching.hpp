#pragma once

#include <compare>
#include <cstddef>
#include <vector>

#include "bisift/descriptor.hpp"
#include "bisift/distance.hpp"

namespace bisift {

inline constexpr double kDefaultRatio = 0.8;

struct MatchPair {
  std::size_t query_index = 0;
  std::size_t ref_index = 0;
  double dist = 0.0;
  double second_dist = 0.0;

  friend bool operator==(const MatchPair&, const MatchPair&) = default;
};

struct ImageSimilarity {
  std::size_t match_count = 0;
  double total_dist = 0.0;

  friend bool operator==(const ImageSimilarity&, const ImageSimilarity&) = default;
};

struct MatchResult {
  ImageSimilarity similarity;
  std::vector<MatchPair> pairs;  // in query-index order
};

/// Ratio test: the nearest reference point is accepted when
/// dist < second_dist * ratio (strict, so a zero runner-up always rejects).
bool passes_ratio_test(double dist, double second_dist, double ratio) noexcept;

/// Directional Q -> R matching. For each query descriptor, finds its nearest
/// and second-nearest reference descriptors and keeps the pair if it passes
/// the ratio test. Many query points may match one reference point.
///
/// Empty Q or R yields zero matches. Throws SchemeError when the two sets use
/// different representations or `kind` does not apply to them, and
/// InvalidInputError when ratio is outside (0, 1].
MatchResult match_images(const DescriptorSet& query, const DescriptorSet& reference, DistanceKind kind,
                         double ratio = kDefaultRatio);

/// Ordering key for image similarity: more matches rank higher; on equal
/// counts a smaller total distance ranks higher. Larger keys are better.
struct SimilarityScore {
  std::size_t match_count = 0;
  double negated_total_dist = 0.0;

  friend auto operator<=>(const SimilarityScore&, const SimilarityScore&) = default;
};

SimilarityScore similarity_score(const ImageSimilarity& sim) noexcept;

}  // namespace bisift

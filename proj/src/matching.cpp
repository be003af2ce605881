#include "bisift/matching.hpp"

#include <string>

#include "bisift/errors.hpp"

namespace bisift {

bool passes_ratio_test(double dist, double second_dist, double ratio) noexcept {
  return dist < second_dist * ratio;
}

MatchResult match_images(const DescriptorSet& query, const DescriptorSet& reference, DistanceKind kind,
                         double ratio) {
  if (!(ratio > 0.0 && ratio <= 1.0)) {
    throw InvalidInputError("ratio threshold must lie in (0, 1], got " + std::to_string(ratio));
  }
  if (query.dtype() != reference.dtype()) {
    throw SchemeError("cannot match " + std::string(to_string(query.dtype())) + " descriptors of '" +
                      query.image_id + "' against " + to_string(reference.dtype()) + " descriptors of '" +
                      reference.image_id + "'");
  }

  MatchResult result;
  std::visit(
      [&](const auto& q_rows) {
        using Rows = std::decay_t<decltype(q_rows)>;
        const auto& r_rows = std::get<Rows>(reference.descriptors);
        if (q_rows.empty() || r_rows.empty()) return;
        for (std::size_t qi = 0; qi < q_rows.size(); ++qi) {
          const Neighbor nn = nearest_neighbor(q_rows[qi], std::span(r_rows), kind);
          if (!passes_ratio_test(nn.distance, nn.second_distance, ratio)) continue;
          result.pairs.push_back(MatchPair{qi, nn.index, nn.distance, nn.second_distance});
          ++result.similarity.match_count;
          result.similarity.total_dist += nn.distance;
        }
      },
      query.descriptors);
  return result;
}

SimilarityScore similarity_score(const ImageSimilarity& sim) noexcept {
  return SimilarityScore{sim.match_count, -sim.total_dist};
}

}  // namespace bisift

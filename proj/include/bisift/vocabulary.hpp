#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "bisift/descriptor.hpp"

namespace bisift {

inline constexpr std::size_t kDefaultVocabularySize = 1000;

/// K centroids in descriptor space. Visual words are 1-based: word w is
/// centroids[w - 1].
struct Vocabulary {
  std::vector<FloatDescriptor> centroids;
  std::uint64_t seed = 0;
  std::uint32_t iterations = 0;
  double inertia = 0.0;
  std::vector<double> inertia_history;  // after each assignment step; not persisted

  std::size_t size() const noexcept { return centroids.size(); }
};

struct KMeansOptions {
  std::size_t k = kDefaultVocabularySize;
  std::uint32_t max_iters = 25;
  std::uint64_t seed = 42;
  std::size_t sample_cap = 0;  // 0 = use the whole sample
  unsigned workers = 1;
};

/// Lloyd's algorithm with k-means++ seeding. Stops after max_iters updates or
/// when an assignment step changes nothing. An emptied cluster is re-seeded
/// with the point farthest from its current centroid.
///
/// Throws InsufficientDataError when the sample has fewer than K points (or
/// fewer than K distinct points).
Vocabulary train_kmeans(std::span<const FloatDescriptor> sample, const KMeansOptions& options);

/// Gathers every descriptor of float or uint8 sets as float vectors.
std::vector<FloatDescriptor> collect_training_sample(std::span<const DescriptorSet> sets);

/// Nearest centroid, 1-based, ties to the lowest word id.
std::uint32_t quantize(const FloatDescriptor& d, const Vocabulary& vocabulary);

struct BovwHistogram {
  std::string image_id;
  std::vector<float> weights;  // K components, L2-normalized (all zero when empty)
  std::size_t raw_count = 0;
};

/// Word counts over the whole set, L2-normalized. Binary sets are rejected
/// with InvalidInputError.
BovwHistogram build_histogram(const DescriptorSet& set, const Vocabulary& vocabulary);

/// Unnormalized word counts; components sum to the number of descriptors.
std::vector<std::uint32_t> word_counts(const DescriptorSet& set, const Vocabulary& vocabulary);

void save_vocabulary(const std::filesystem::path& path, const Vocabulary& vocabulary);
Vocabulary load_vocabulary(const std::filesystem::path& path);

}  // namespace bisift

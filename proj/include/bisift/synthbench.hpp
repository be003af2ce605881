#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bisift/descriptor.hpp"
#include "bisift/distance.hpp"
#include "bisift/eval.hpp"

namespace bisift {

// --- synthetic descriptors ---------------------------------------------------

/// The same n random descriptors in the three benchmarked representations:
/// uniform random bytes, their exact float images, and their BiSIFT
/// fingerprints.
struct SynthData {
  std::vector<IntDescriptor> ints;
  std::vector<FloatDescriptor> floats;
  std::vector<BinaryFingerprint> fingerprints;
};

SynthData gen_synth_descriptors(std::size_t n, std::uint64_t seed);

// --- timing harness ----------------------------------------------------------

struct SynthConfig {
  std::vector<std::size_t> db_sizes{1000, 10000, 100000, 500000};
  std::size_t query_count = 10;
  std::uint64_t seed = 42;
  std::vector<DistanceKind> kinds{DistanceKind::FloatL2, DistanceKind::IntL2, DistanceKind::HammingNaive,
                                  DistanceKind::HammingLookup};
  unsigned repetitions = 5;

  /// Throws InvalidInputError unless sizes are non-empty and strictly
  /// increasing, query_count >= 1 and repetitions >= 1.
  void validate() const;
};

struct TimingCell {
  DistanceKind kind = DistanceKind::FloatL2;
  std::size_t db_size = 0;
  double total_seconds = 0.0;      // median repetition
  double seconds_per_query = 0.0;  // total_seconds / query_count
  double throughput = 0.0;         // distance evaluations per second
  std::vector<double> per_query_seconds;  // of the median repetition
  std::vector<double> repetition_totals;
};

struct TimingReport {
  std::vector<TimingCell> cells;
  std::size_t query_count = 0;
  bool hamming_audit_passed = true;  // naive and lookup chose identical neighbours
  bool l2_audit_passed = true;       // int and float L2 chose identical neighbours
  std::string environment_note;

  const TimingCell* find(DistanceKind kind, std::size_t db_size) const;
  /// seconds_per_query(slow) / seconds_per_query(fast) at one rung.
  double gain(DistanceKind slow, DistanceKind fast, std::size_t db_size) const;
};

/// Times nearest_neighbor for every query against every rung of the ladder on
/// a single worker. One untimed warm-up pass per cell, then `repetitions`
/// timed passes; the median pass is reported.
TimingReport run_timing(const SynthConfig& config);

/// Header plus one row per cell: kind, db_size, seconds_per_query,
/// total_seconds, throughput.
std::string format_timing_tsv(const TimingReport& report);

/// Pairwise gain curves: slow_kind, fast_kind, db_size, gain.
std::string format_gain_tsv(const TimingReport& report);

// --- planted copy corpus -----------------------------------------------------

/// Synthetic copy-detection corpus. Consecutive base images are grouped into
/// scenes; an image draws its keypoints around its scene's prototype
/// descriptors, so images of one scene resemble each other without being
/// copies. Each query image gets perturbed copies planted in the database.
struct CorpusConfig {
  std::size_t base_images = 200;
  std::size_t copies_per_query = 5;
  std::size_t queries = 10;
  std::uint64_t seed = 42;

  double noise_sigma = 8.0;        // per-component Gaussian noise on copies, 0-255 scale
  double dropout = 0.3;            // fraction of keypoints removed from a copy
  double distractor_rate = 0.2;    // injected keypoints, relative to the original count
  std::size_t min_keypoints = 60;
  std::size_t max_keypoints = 120;
  std::size_t scene_size = 10;     // base images per scene
  std::size_t prototypes = 32;     // descriptor modes per scene
  double prototype_spread = 7.0;   // per-component deviation of a keypoint from its mode
  double mode_scale = 30.0;        // mean of the exponential mode components; 0 = uniform bytes

  void validate() const;
};

struct PlantedCorpus {
  std::vector<DescriptorSet> database;  // base images then copies, uint8 descriptors
  std::vector<DescriptorSet> queries;   // the query originals (also present in the database)
  GroundTruth truth;                    // one theme per query scene; relevant = its copies
};

PlantedCorpus gen_planted_corpus(const CorpusConfig& config);

}  // namespace bisift

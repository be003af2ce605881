#include "bisift/synthbench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <sstream>

#include "bisift/binarize.hpp"
#include "bisift/errors.hpp"
#include "text_util.hpp"

namespace bisift {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Independent stream per (seed, purpose, item).
std::mt19937_64 derived_rng(std::uint64_t seed, std::uint64_t purpose, std::uint64_t item) {
  return std::mt19937_64(splitmix64(splitmix64(seed ^ (purpose << 56)) + item));
}

IntDescriptor random_bytes(std::mt19937_64& rng) {
  IntDescriptor d{};
  for (std::size_t i = 0; i < kDescriptorDim; i += 8) {
    const std::uint64_t bits = rng();
    for (std::size_t b = 0; b < 8; ++b) d[i + b] = static_cast<std::uint8_t>(bits >> (8 * b));
  }
  return d;
}

std::uint8_t to_byte(double v) { return static_cast<std::uint8_t>(std::clamp(std::round(v), 0.0, 255.0)); }

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

using Clock = std::chrono::steady_clock;

// Runs every query once against db and records per-query wall time.
template <typename Element>
std::vector<double> timed_pass(std::span<const Element> queries, std::span<const Element> db, DistanceKind kind,
                               std::vector<std::size_t>* indices) {
  std::vector<double> seconds(queries.size());
  for (std::size_t q = 0; q < queries.size(); ++q) {
    const auto start = Clock::now();
    const Neighbor nn = nearest_neighbor(queries[q], db, kind, 1);
    const auto stop = Clock::now();
    seconds[q] = std::chrono::duration<double>(stop - start).count();
    if (indices) (*indices)[q] = nn.index;
  }
  return seconds;
}

const char* kEnvironmentNote = "single worker; steady_clock; median of repetitions; warm-up pass excluded";

}  // namespace

SynthData gen_synth_descriptors(std::size_t n, std::uint64_t seed) {
  if (n == 0) throw InvalidInputError("synthetic descriptor count must be at least 1");
  SynthData data;
  data.ints.reserve(n);
  data.floats.reserve(n);
  data.fingerprints.reserve(n);
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    data.ints.push_back(random_bytes(rng));
    data.floats.push_back(to_float_descriptor(data.ints.back()));
    data.fingerprints.push_back(binarize_bisift(data.ints.back()));
  }
  return data;
}

void SynthConfig::validate() const {
  if (db_sizes.empty()) throw InvalidInputError("benchmark ladder is empty");
  if (db_sizes.front() == 0) throw InvalidInputError("database sizes must be positive");
  for (std::size_t i = 1; i < db_sizes.size(); ++i) {
    if (db_sizes[i] <= db_sizes[i - 1]) throw InvalidInputError("database sizes must be strictly increasing");
  }
  if (query_count == 0) throw InvalidInputError("query count must be at least 1");
  if (repetitions == 0) throw InvalidInputError("repetitions must be at least 1");
  if (kinds.empty()) throw InvalidInputError("no distance kinds to benchmark");
}

const TimingCell* TimingReport::find(DistanceKind kind, std::size_t db_size) const {
  for (const TimingCell& c : cells) {
    if (c.kind == kind && c.db_size == db_size) return &c;
  }
  return nullptr;
}

double TimingReport::gain(DistanceKind slow, DistanceKind fast, std::size_t db_size) const {
  const TimingCell* s = find(slow, db_size);
  const TimingCell* f = find(fast, db_size);
  if (!s || !f) throw InvalidInputError("gain requested for a kind or size that was not benchmarked");
  return s->seconds_per_query / f->seconds_per_query;
}

TimingReport run_timing(const SynthConfig& config) {
  config.validate();
  const SynthData db = gen_synth_descriptors(config.db_sizes.back(), config.seed);
  const SynthData queries = gen_synth_descriptors(config.query_count, splitmix64(config.seed + 1));

  TimingReport report;
  report.query_count = config.query_count;
  report.environment_note = kEnvironmentNote;

  for (std::size_t size : config.db_sizes) {
    std::vector<std::vector<std::size_t>> chosen(4);
    for (DistanceKind kind : config.kinds) {
      auto& indices = chosen[static_cast<std::size_t>(kind)];
      indices.assign(config.query_count, 0);

      auto pass = [&](std::vector<std::size_t>* record) {
        switch (kind) {
          case DistanceKind::FloatL2:
            return timed_pass<FloatDescriptor>(queries.floats, std::span(db.floats).first(size), kind, record);
          case DistanceKind::IntL2:
            return timed_pass<IntDescriptor>(queries.ints, std::span(db.ints).first(size), kind, record);
          default:
            return timed_pass<BinaryFingerprint>(queries.fingerprints, std::span(db.fingerprints).first(size), kind,
                                                 record);
        }
      };

      pass(&indices);  // warm-up, also feeds the audit

      std::vector<std::vector<double>> reps;
      TimingCell cell;
      cell.kind = kind;
      cell.db_size = size;
      for (unsigned r = 0; r < config.repetitions; ++r) {
        reps.push_back(pass(nullptr));
        double total = 0.0;
        for (double s : reps.back()) total += s;
        cell.repetition_totals.push_back(total);
      }
      const double median = median_of(cell.repetition_totals);
      // Report the repetition whose total is closest to the median.
      std::size_t pick = 0;
      for (std::size_t r = 1; r < reps.size(); ++r) {
        if (std::abs(cell.repetition_totals[r] - median) < std::abs(cell.repetition_totals[pick] - median)) pick = r;
      }
      cell.per_query_seconds = reps[pick];
      cell.total_seconds = cell.repetition_totals[pick];
      cell.seconds_per_query = cell.total_seconds / static_cast<double>(config.query_count);
      cell.throughput = static_cast<double>(size) * static_cast<double>(config.query_count) / cell.total_seconds;
      report.cells.push_back(std::move(cell));
    }

    auto ran = [&config](DistanceKind k) {
      return std::find(config.kinds.begin(), config.kinds.end(), k) != config.kinds.end();
    };
    auto& c = chosen;
    if (ran(DistanceKind::HammingNaive) && ran(DistanceKind::HammingLookup) &&
        c[static_cast<std::size_t>(DistanceKind::HammingNaive)] != c[static_cast<std::size_t>(DistanceKind::HammingLookup)]) {
      report.hamming_audit_passed = false;
    }
    if (ran(DistanceKind::FloatL2) && ran(DistanceKind::IntL2) &&
        c[static_cast<std::size_t>(DistanceKind::FloatL2)] != c[static_cast<std::size_t>(DistanceKind::IntL2)]) {
      report.l2_audit_passed = false;
    }
  }
  return report;
}

std::string format_timing_tsv(const TimingReport& report) {
  std::ostringstream out;
  out << "kind\tdb_size\tseconds_per_query\ttotal_seconds\tthroughput\n";
  for (const TimingCell& c : report.cells) {
    out << to_string(c.kind) << '\t' << c.db_size << '\t' << detail::format_double(c.seconds_per_query) << '\t'
        << detail::format_double(c.total_seconds) << '\t' << detail::format_double(c.throughput) << '\n';
  }
  return out.str();
}

std::string format_gain_tsv(const TimingReport& report) {
  std::vector<DistanceKind> kinds;
  std::vector<std::size_t> sizes;
  for (const TimingCell& c : report.cells) {
    if (std::find(kinds.begin(), kinds.end(), c.kind) == kinds.end()) kinds.push_back(c.kind);
    if (std::find(sizes.begin(), sizes.end(), c.db_size) == sizes.end()) sizes.push_back(c.db_size);
  }
  std::ostringstream out;
  out << "slow_kind\tfast_kind\tdb_size\tgain\n";
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    for (std::size_t j = 0; j < kinds.size(); ++j) {
      if (i == j) continue;
      for (std::size_t size : sizes) {
        if (!report.find(kinds[i], size) || !report.find(kinds[j], size)) continue;
        out << to_string(kinds[i]) << '\t' << to_string(kinds[j]) << '\t' << size << '\t'
            << detail::format_double(report.gain(kinds[i], kinds[j], size)) << '\n';
      }
    }
  }
  return out.str();
}

void CorpusConfig::validate() const {
  if (base_images == 0 || copies_per_query == 0 || queries == 0) {
    throw InvalidInputError("corpus counts must be at least 1");
  }
  if (queries > base_images) throw InvalidInputError("cannot draw more queries than base images");
  if (noise_sigma < 0.0 || prototype_spread < 0.0) throw InvalidInputError("noise levels must be non-negative");
  if (dropout < 0.0 || dropout > 1.0) throw InvalidInputError("dropout must lie in [0, 1]");
  if (distractor_rate < 0.0) throw InvalidInputError("distractor rate must be non-negative");
  if (min_keypoints > max_keypoints) throw InvalidInputError("min_keypoints exceeds max_keypoints");
  if (prototypes == 0) throw InvalidInputError("need at least one prototype");
  if (scene_size == 0) throw InvalidInputError("scene size must be at least 1");
}

PlantedCorpus gen_planted_corpus(const CorpusConfig& config) {
  config.validate();

  const std::size_t scenes = (config.base_images + config.scene_size - 1) / config.scene_size;
  std::mt19937_64 proto_rng = derived_rng(config.seed, 1, 0);
  std::vector<std::vector<IntDescriptor>> modes(scenes, std::vector<IntDescriptor>(config.prototypes));
  for (auto& scene : modes) {
    for (auto& m : scene) {
      if (config.mode_scale > 0.0) {
        std::exponential_distribution<double> component(1.0 / config.mode_scale);
        for (auto& c : m) c = to_byte(component(proto_rng));
      } else {
        m = random_bytes(proto_rng);
      }
    }
  }

  auto jittered = [&](const IntDescriptor& mode, std::mt19937_64& rng) {
    std::normal_distribution<double> spread(0.0, config.prototype_spread);
    IntDescriptor d{};
    for (std::size_t j = 0; j < kDescriptorDim; ++j) d[j] = to_byte(mode[j] + spread(rng));
    return d;
  };
  auto sample_keypoint = [&](std::size_t image, std::mt19937_64& rng) {
    const auto& scene = modes[image / config.scene_size];
    return jittered(scene[std::uniform_int_distribution<std::size_t>(0, scene.size() - 1)(rng)], rng);
  };

  char id[64];
  PlantedCorpus corpus;
  std::vector<std::vector<IntDescriptor>> base(config.base_images);
  for (std::size_t i = 0; i < config.base_images; ++i) {
    std::mt19937_64 rng = derived_rng(config.seed, 2, i);
    const std::size_t n =
        std::uniform_int_distribution<std::size_t>(config.min_keypoints, config.max_keypoints)(rng);
    // Distinct modes while the scene has enough of them.
    const auto& scene = modes[i / config.scene_size];
    std::vector<std::size_t> order(scene.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    base[i].reserve(n);
    while (base[i].size() < n) {
      std::shuffle(order.begin(), order.end(), rng);
      for (std::size_t k = 0; k < order.size() && base[i].size() < n; ++k) {
        base[i].push_back(jittered(scene[order[k]], rng));
      }
    }
    std::snprintf(id, sizeof id, "img%04zu", i);
    corpus.database.push_back(DescriptorSet{id, base[i]});
  }

  for (std::size_t q = 0; q < config.queries; ++q) {
    corpus.queries.push_back(corpus.database[q]);
    char theme[32];
    std::snprintf(theme, sizeof theme, "scene%03zu", q);

    for (std::size_t c = 0; c < config.copies_per_query; ++c) {
      std::mt19937_64 rng = derived_rng(config.seed, 3, q * config.copies_per_query + c);
      std::bernoulli_distribution drop(config.dropout);
      std::normal_distribution<double> noise(0.0, config.noise_sigma);

      std::vector<IntDescriptor> copy;
      for (const IntDescriptor& d : base[q]) {
        if (drop(rng)) continue;
        IntDescriptor perturbed{};
        for (std::size_t j = 0; j < kDescriptorDim; ++j) {
          perturbed[j] = config.noise_sigma > 0.0 ? to_byte(d[j] + noise(rng)) : d[j];
        }
        copy.push_back(perturbed);
      }
      const auto distractors =
          static_cast<std::size_t>(std::llround(config.distractor_rate * static_cast<double>(base[q].size())));
      for (std::size_t k = 0; k < distractors; ++k) copy.push_back(sample_keypoint(q, rng));

      std::snprintf(id, sizeof id, "img%04zu_copy%zu", q, c);
      corpus.database.push_back(DescriptorSet{id, std::move(copy)});
      corpus.truth.add(theme, corpus.queries.back().image_id, id);
    }
  }
  return corpus;
}

}  // namespace bisift

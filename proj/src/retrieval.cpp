#include "bisift/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "bisift/binarize.hpp"
#include "bisift/errors.hpp"
#include "bisift/parallel.hpp"
#include "text_util.hpp"

namespace bisift {

namespace {

double histogram_distance(const BovwHistogram& a, const BovwHistogram& b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.weights.size(); ++i) {
    const double d = static_cast<double>(a.weights[i]) - b.weights[i];
    sum += d * d;
  }
  return std::sqrt(sum);
}

std::vector<ImageSimilarity> score_candidates(const DescriptorSet& query, const Index& index,
                                              std::span<const std::size_t> positions, double ratio,
                                              DistanceKind kind, unsigned workers) {
  std::vector<ImageSimilarity> sims(positions.size());
  parallel_for(positions.size(), workers, [&](std::size_t i) {
    sims[i] = match_images(query, index.fingerprints(positions[i]), kind, ratio).similarity;
  });
  return sims;
}

}  // namespace

const char* to_string(Representation rep) noexcept {
  switch (rep) {
    case Representation::Bisift: return "bisift";
    case Representation::Percell: return "percell";
    case Representation::Float: return "float";
    case Representation::Int: return "int";
  }
  return "unknown";
}

std::optional<Representation> parse_representation(std::string_view name) noexcept {
  for (auto rep : {Representation::Bisift, Representation::Percell, Representation::Float, Representation::Int}) {
    if (name == to_string(rep)) return rep;
  }
  return std::nullopt;
}

DistanceKind default_kind(Representation rep) noexcept {
  switch (rep) {
    case Representation::Float: return DistanceKind::FloatL2;
    case Representation::Int: return DistanceKind::IntL2;
    default: return DistanceKind::HammingLookup;
  }
}

bool kind_applies(Representation rep, DistanceKind kind) noexcept {
  switch (rep) {
    case Representation::Float: return kind == DistanceKind::FloatL2;
    case Representation::Int: return kind == DistanceKind::IntL2;
    default: return is_hamming(kind);
  }
}

DescriptorSet to_representation(const DescriptorSet& raw, Representation rep) {
  switch (rep) {
    case Representation::Bisift: return binarize_set(raw, Scheme::Bisift);
    case Representation::Percell: return binarize_set(raw, Scheme::Percell);
    case Representation::Float: {
      if (raw.dtype() == Dtype::Float32) return raw;
      if (raw.dtype() == Dtype::Binary128) break;
      std::vector<FloatDescriptor> rows;
      for (const auto& d : std::get<std::vector<IntDescriptor>>(raw.descriptors)) rows.push_back(to_float_descriptor(d));
      return DescriptorSet{raw.image_id, std::move(rows)};
    }
    case Representation::Int: {
      if (raw.dtype() == Dtype::Uint8) return raw;
      if (raw.dtype() == Dtype::Binary128) break;
      std::vector<IntDescriptor> rows;
      for (const auto& d : std::get<std::vector<FloatDescriptor>>(raw.descriptors)) rows.push_back(to_int_descriptor(d));
      return DescriptorSet{raw.image_id, std::move(rows)};
    }
  }
  throw InvalidInputError("image '" + raw.image_id + "' holds binary fingerprints; raw descriptors are required");
}

void RetrievalConfig::validate() const {
  if (top_x < 1) throw InvalidInputError("top-X must be at least 1");
  if (!(ratio > 0.0 && ratio <= 1.0)) {
    throw InvalidInputError("ratio threshold must lie in (0, 1], got " + std::to_string(ratio));
  }
  if (!kind_applies(representation, kind)) {
    throw SchemeError(std::string("distance kind ") + to_string(kind) + " does not apply to representation " +
                      to_string(representation));
  }
}

Index::Index(std::span<const DescriptorSet> raw_images, std::shared_ptr<const Vocabulary> vocabulary,
             Representation representation, unsigned workers)
    : vocabulary_(std::move(vocabulary)), representation_(representation) {
  if (!vocabulary_ || vocabulary_->size() == 0) throw InvalidInputError("index requires a non-empty vocabulary");

  ids_.reserve(raw_images.size());
  for (std::size_t i = 0; i < raw_images.size(); ++i) {
    const std::string& id = raw_images[i].image_id;
    if (!positions_.emplace(id, i).second) throw InvalidInputError("duplicate image id '" + id + "' in index");
    ids_.push_back(id);
  }

  histograms_.resize(raw_images.size());
  fingerprints_.resize(raw_images.size());
  parallel_for(raw_images.size(), workers, [&](std::size_t i) {
    histograms_[i] = build_histogram(raw_images[i], *vocabulary_);
    fingerprints_[i] = to_representation(raw_images[i], representation_);
  });
}

std::optional<std::size_t> Index::find(std::string_view id) const {
  const auto it = positions_.find(std::string(id));
  if (it == positions_.end()) return std::nullopt;
  return it->second;
}

RankList first_stage_rank(const BovwHistogram& query, const Index& index) {
  if (query.weights.size() != index.vocabulary().size()) {
    throw MismatchError("query histogram has " + std::to_string(query.weights.size()) +
                        " words but the index vocabulary has " + std::to_string(index.vocabulary().size()));
  }
  RankList list{query.image_id, {}};
  list.entries.reserve(index.size());
  for (std::size_t i = 0; i < index.size(); ++i) {
    list.entries.push_back(RankEntry{index.id(i), histogram_distance(query, index.histogram(i)), Stage::First});
  }
  std::sort(list.entries.begin(), list.entries.end(), [](const RankEntry& a, const RankEntry& b) {
    if (a.score != b.score) return a.score < b.score;
    return a.image_id < b.image_id;
  });
  return list;
}

RankList rerank_top_x(const RankList& first, const DescriptorSet& query_fingerprints, const Index& index,
                      std::size_t top_x, double ratio, DistanceKind kind, unsigned workers) {
  if (top_x < 1) throw InvalidInputError("top-X must be at least 1");
  const std::size_t block = std::min(top_x, first.entries.size());

  std::vector<std::size_t> positions(block);
  for (std::size_t r = 0; r < block; ++r) {
    const auto pos = index.find(first.entries[r].image_id);
    if (!pos) throw MismatchError("rank list entry '" + first.entries[r].image_id + "' is not in the index");
    positions[r] = *pos;
  }
  const auto sims = score_candidates(query_fingerprints, index, positions, ratio, kind, workers);

  std::vector<std::size_t> order(block);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&sims](std::size_t a, std::size_t b) {
    return similarity_score(sims[a]) > similarity_score(sims[b]);
  });

  RankList out{first.query_id, {}};
  out.entries.reserve(first.entries.size());
  for (std::size_t r : order) {
    out.entries.push_back(
        RankEntry{first.entries[r].image_id, static_cast<double>(sims[r].match_count), Stage::Reranked});
  }
  out.entries.insert(out.entries.end(), first.entries.begin() + static_cast<std::ptrdiff_t>(block),
                     first.entries.end());
  return out;
}

RankList first_stage_query(const DescriptorSet& raw_query, const Index& index) {
  return first_stage_rank(build_histogram(raw_query, index.vocabulary()), index);
}

RankList query(const DescriptorSet& raw_query, const Index& index, const RetrievalConfig& config) {
  config.validate();
  if (config.representation != index.representation()) {
    throw MismatchError(std::string("query representation ") + to_string(config.representation) +
                        " differs from index representation " + to_string(index.representation()));
  }
  const RankList first = first_stage_query(raw_query, index);
  const DescriptorSet fingerprints = to_representation(raw_query, config.representation);
  return rerank_top_x(first, fingerprints, index, config.top_x, config.ratio, config.kind, config.workers);
}

RankList rank_by_matching(const DescriptorSet& query_fingerprints, const Index& index, double ratio,
                          DistanceKind kind, unsigned workers) {
  std::vector<std::size_t> positions(index.size());
  std::iota(positions.begin(), positions.end(), std::size_t{0});
  const auto sims = score_candidates(query_fingerprints, index, positions, ratio, kind, workers);

  std::sort(positions.begin(), positions.end(), [&](std::size_t a, std::size_t b) {
    const auto sa = similarity_score(sims[a]);
    const auto sb = similarity_score(sims[b]);
    if (sa != sb) return sa > sb;
    return index.id(a) < index.id(b);
  });

  RankList out{query_fingerprints.image_id, {}};
  for (std::size_t p : positions) {
    out.entries.push_back(RankEntry{index.id(p), static_cast<double>(sims[p].match_count), Stage::Reranked});
  }
  return out;
}

void write_manifest(const std::filesystem::path& path, std::span<const ManifestEntry> entries) {
  std::ostringstream out;
  for (const ManifestEntry& e : entries) {
    if (e.image_id.find_first_of("\t\n") != std::string::npos) {
      throw InvalidInputError("image id '" + e.image_id + "' contains a tab or newline");
    }
    out << e.image_id << '\t' << e.descriptor_file.generic_string() << '\t' << e.offset << '\n';
  }
  detail::write_text(path, out.str());
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
  auto in = detail::open_text(path);
  std::vector<ManifestEntry> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view text = detail::chomp(line);
    if (text.empty()) continue;
    const auto f = detail::split_tabs(text);
    std::uint64_t offset = 0;
    if (f.size() != 3 || f[0].empty() || f[1].empty() || !detail::parse_number(f[2], offset)) {
      throw FormatError(detail::location(path, line_no) + ": expected image_id<TAB>file<TAB>offset");
    }
    entries.push_back(ManifestEntry{std::string(f[0]), std::filesystem::path(std::string(f[1])), offset});
  }
  return entries;
}

std::vector<ManifestEntry> manifest_for(std::span<const std::filesystem::path> descriptor_files,
                                        const std::filesystem::path& manifest_dir) {
  std::vector<ManifestEntry> entries;
  const auto base = std::filesystem::absolute(manifest_dir.empty() ? "." : manifest_dir);
  for (const auto& file : descriptor_files) {
    const DescriptorFile contents = read_descriptor_file(file);
    if (contents.dtype == Dtype::Binary128) {
      throw InvalidInputError("'" + file.string() + "' holds binary fingerprints; index raw descriptors");
    }
    auto rel = std::filesystem::absolute(file).lexically_normal().lexically_relative(base.lexically_normal());
    if (rel.empty()) rel = std::filesystem::absolute(file);
    for (std::size_t i = 0; i < contents.sets.size(); ++i) {
      entries.push_back(ManifestEntry{contents.sets[i].image_id, rel, contents.offsets[i]});
    }
  }
  return entries;
}

std::vector<DescriptorSet> load_manifest_images(const std::filesystem::path& manifest_path) {
  const auto entries = read_manifest(manifest_path);
  const auto dir = manifest_path.parent_path();

  // Group offsets per file so each file is read once.
  std::map<std::filesystem::path, std::vector<std::size_t>> by_file;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& p = entries[i].descriptor_file;
    by_file[p.is_absolute() ? p : dir / p].push_back(i);
  }

  std::vector<DescriptorSet> images(entries.size());
  for (const auto& [file, members] : by_file) {
    std::vector<std::uint64_t> offsets;
    for (std::size_t i : members) offsets.push_back(entries[i].offset);
    auto sets = read_descriptor_sets_at(file, offsets);
    for (std::size_t j = 0; j < members.size(); ++j) {
      const ManifestEntry& e = entries[members[j]];
      if (sets[j].image_id != e.image_id) {
        throw CorruptionError("manifest entry '" + e.image_id + "' points at record '" + sets[j].image_id +
                              "' in '" + file.string() + "' (offset " + std::to_string(e.offset) + ")");
      }
      images[members[j]] = std::move(sets[j]);
    }
  }
  return images;
}

}  // namespace bisift

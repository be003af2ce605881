#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "bisift/descriptor.hpp"
#include "bisift/distance.hpp"
#include "bisift/matching.hpp"
#include "bisift/rank_list.hpp"
#include "bisift/vocabulary.hpp"

namespace bisift {

inline constexpr std::size_t kDefaultTopX = 30;

/// Descriptor representation used for image-to-image matching.
enum class Representation { Bisift, Percell, Float, Int };

const char* to_string(Representation rep) noexcept;
std::optional<Representation> parse_representation(std::string_view name) noexcept;

/// The distance kind that applies to a representation by default.
DistanceKind default_kind(Representation rep) noexcept;
bool kind_applies(Representation rep, DistanceKind kind) noexcept;

/// Converts a float or uint8 set into the matching representation. uint8 to
/// float is an exact value cast; float to uint8 uses SIFT integerization.
DescriptorSet to_representation(const DescriptorSet& raw, Representation rep);

struct RetrievalConfig {
  std::size_t top_x = kDefaultTopX;
  double ratio = kDefaultRatio;
  Representation representation = Representation::Bisift;
  DistanceKind kind = DistanceKind::HammingLookup;
  unsigned workers = 1;

  /// Throws InvalidInputError / SchemeError on out-of-range or incompatible
  /// settings.
  void validate() const;
};

/// In-memory retrieval index: one BoVW histogram and one matching-
/// representation descriptor set per image. Immutable after construction.
class Index {
public:
  Index(std::span<const DescriptorSet> raw_images, std::shared_ptr<const Vocabulary> vocabulary,
        Representation representation, unsigned workers = 1);

  std::size_t size() const noexcept { return ids_.size(); }
  const std::string& id(std::size_t i) const { return ids_[i]; }
  const BovwHistogram& histogram(std::size_t i) const { return histograms_[i]; }
  const DescriptorSet& fingerprints(std::size_t i) const { return fingerprints_[i]; }
  Representation representation() const noexcept { return representation_; }
  const Vocabulary& vocabulary() const noexcept { return *vocabulary_; }

  std::optional<std::size_t> find(std::string_view id) const;

private:
  std::vector<std::string> ids_;
  std::vector<BovwHistogram> histograms_;
  std::vector<DescriptorSet> fingerprints_;
  std::unordered_map<std::string, std::size_t> positions_;
  std::shared_ptr<const Vocabulary> vocabulary_;
  Representation representation_;
};

/// Scores every indexed image by Euclidean distance between L2-normalized
/// histograms, ascending; equal distances order by image id.
RankList first_stage_rank(const BovwHistogram& query, const Index& index);

/// Re-scores the top min(X, |first|) entries by image-to-image matching and
/// reorders that block by similarity (match count desc, total distance asc,
/// then first-stage rank). The remaining entries follow unchanged.
RankList rerank_top_x(const RankList& first, const DescriptorSet& query_fingerprints, const Index& index,
                      std::size_t top_x, double ratio, DistanceKind kind, unsigned workers = 1);

/// Histogram, first stage, then re-ranking of the top X.
RankList query(const DescriptorSet& raw_query, const Index& index, const RetrievalConfig& config);

/// First stage only, for a raw query set.
RankList first_stage_query(const DescriptorSet& raw_query, const Index& index);

/// Image-to-image matching against every indexed image, no BoVW stage. Ranks
/// by similarity; equal similarity orders by image id.
RankList rank_by_matching(const DescriptorSet& query_fingerprints, const Index& index, double ratio,
                          DistanceKind kind, unsigned workers = 1);

// --- persistence -------------------------------------------------------------

struct ManifestEntry {
  std::string image_id;
  std::filesystem::path descriptor_file;
  std::uint64_t offset = 0;

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

/// Text manifest, one line per image: image_id<TAB>descriptor-file<TAB>offset.
/// Relative descriptor paths are resolved against the manifest's directory.
void write_manifest(const std::filesystem::path& path, std::span<const ManifestEntry> entries);
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);

/// Manifest entries for every image of the given descriptor files, with paths
/// stored relative to `manifest_dir`.
std::vector<ManifestEntry> manifest_for(std::span<const std::filesystem::path> descriptor_files,
                                        const std::filesystem::path& manifest_dir);

/// Loads the raw descriptor records listed in a manifest, in manifest order.
std::vector<DescriptorSet> load_manifest_images(const std::filesystem::path& manifest_path);

}  // namespace bisift

#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace bisift {

enum class Stage { First, Reranked };

const char* to_string(Stage stage) noexcept;
std::optional<Stage> parse_stage(std::string_view name) noexcept;

struct RankEntry {
  std::string image_id;
  double score = 0.0;  // histogram distance (First) or match count (Reranked)
  Stage stage = Stage::First;

  friend bool operator==(const RankEntry&, const RankEntry&) = default;
};

struct RankList {
  std::string query_id;
  std::vector<RankEntry> entries;

  friend bool operator==(const RankList&, const RankList&) = default;
};

/// TSV, one row per entry: query_id, rank (1-based), image_id, score, stage.
/// Scores use the shortest representation that round-trips exactly.
void write_rank_lists(const std::filesystem::path& path, std::span<const RankList> lists);
std::string format_rank_lists(std::span<const RankList> lists);

/// Rows of one query must be contiguous with ranks 1, 2, ... in order.
std::vector<RankList> read_rank_lists(const std::filesystem::path& path);

}  // namespace bisift

#include "bisift/rank_list.hpp"

#include <cmath>
#include <sstream>

#include "bisift/errors.hpp"
#include "text_util.hpp"

namespace bisift {

const char* to_string(Stage stage) noexcept { return stage == Stage::First ? "FIRST" : "RERANKED"; }

std::optional<Stage> parse_stage(std::string_view name) noexcept {
  if (name == "FIRST") return Stage::First;
  if (name == "RERANKED") return Stage::Reranked;
  return std::nullopt;
}

std::string format_rank_lists(std::span<const RankList> lists) {
  std::ostringstream out;
  for (const RankList& list : lists) {
    for (std::size_t r = 0; r < list.entries.size(); ++r) {
      const RankEntry& e = list.entries[r];
      out << list.query_id << '\t' << (r + 1) << '\t' << e.image_id << '\t' << detail::format_double(e.score)
          << '\t' << to_string(e.stage) << '\n';
    }
  }
  return out.str();
}

void write_rank_lists(const std::filesystem::path& path, std::span<const RankList> lists) {
  detail::write_text(path, format_rank_lists(lists));
}

std::vector<RankList> read_rank_lists(const std::filesystem::path& path) {
  auto in = detail::open_text(path);
  std::vector<RankList> lists;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view text = detail::chomp(line);
    if (text.empty()) continue;
    const auto f = detail::split_tabs(text);
    if (f.size() != 5) {
      throw FormatError(detail::location(path, line_no) + ": expected 5 tab-separated fields, got " +
                        std::to_string(f.size()));
    }
    std::size_t rank = 0;
    double score = 0.0;
    if (!detail::parse_number(f[1], rank) || rank == 0) {
      throw FormatError(detail::location(path, line_no) + ": bad rank '" + std::string(f[1]) + "'");
    }
    if (!detail::parse_number(f[3], score) || std::isnan(score)) {
      throw FormatError(detail::location(path, line_no) + ": bad score '" + std::string(f[3]) + "'");
    }
    const auto stage = parse_stage(f[4]);
    if (!stage) throw FormatError(detail::location(path, line_no) + ": bad stage '" + std::string(f[4]) + "'");

    const bool continues = !lists.empty() && lists.back().query_id == f[0];
    if (!continues) {
      if (rank != 1) {
        throw FormatError(detail::location(path, line_no) + ": rank list for '" + std::string(f[0]) +
                          "' does not start at rank 1");
      }
      lists.push_back(RankList{std::string(f[0]), {}});
    } else if (rank != lists.back().entries.size() + 1) {
      throw FormatError(detail::location(path, line_no) + ": rank " + std::to_string(rank) + " out of sequence");
    }
    lists.back().entries.push_back(RankEntry{std::string(f[2]), score, *stage});
  }
  return lists;
}

}  // namespace bisift

#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "bisift/rank_list.hpp"

namespace bisift {

using IdSet = std::set<std::string>;

/// Themed ground truth. Every query belongs to exactly one theme and has a
/// non-empty relevant set.
class GroundTruth {
public:
  struct Query {
    std::string theme;
    std::string query_id;
    IdSet relevant;
  };

  /// Adds one relevant id; creates the query (and theme) on first sight.
  /// Throws InvalidInputError if the query was already filed under another
  /// theme.
  void add(const std::string& theme, const std::string& query_id, const std::string& relevant_id);

  const std::vector<Query>& queries() const noexcept { return queries_; }
  std::vector<std::string> themes() const;  // in order of first appearance
  const Query* find(const std::string& query_id) const;

private:
  std::vector<Query> queries_;
  std::map<std::string, std::size_t> by_id_;
};

/// Lines `theme<TAB>query_id<TAB>relevant_id`.
GroundTruth load_ground_truth(const std::filesystem::path& path);
void save_ground_truth(const std::filesystem::path& path, const GroundTruth& truth);

// The query's own id is removed from both the list and the relevant set before
// any metric is computed.

/// |top-k ∩ relevant| / k.
double precision_at(const RankList& list, const IdSet& relevant, std::size_t k);

/// |top-k ∩ relevant| / |relevant|. Throws UndefinedRecallError when the
/// relevant set is empty.
double recall_at(const RankList& list, const IdSet& relevant, std::size_t k);

/// Mean of precision at each relevant hit's rank, divided over |relevant| so
/// unretrieved items count as zero.
double average_precision(const RankList& list, const IdSet& relevant);

/// Per-theme mean of query APs, then the unweighted mean over themes. Throws
/// IncompleteResultsError if a ground-truth query has no AP.
double mean_average_precision(const std::map<std::string, double>& ap_by_query, const GroundTruth& truth);

/// Plain mean over all ground-truth queries.
double flat_mean_average_precision(const std::map<std::string, double>& ap_by_query, const GroundTruth& truth);

struct QueryMetrics {
  std::string theme;
  std::string query_id;
  double average_precision = 0.0;
  std::vector<double> precision;  // per cutoff
  std::vector<double> recall;     // per cutoff
};

struct MetricReport {
  std::vector<std::size_t> cutoffs;
  std::vector<QueryMetrics> queries;
  std::map<std::string, double> theme_map;  // mean AP per theme
  double map = 0.0;       // two-level (headline)
  double flat_map = 0.0;  // per-query mean, for comparison
  std::vector<double> mean_precision;
  std::vector<double> mean_recall;
};

/// Rank lists for queries outside the ground truth are ignored; a ground-truth
/// query without a rank list raises IncompleteResultsError.
MetricReport evaluate(std::span<const RankList> lists, const GroundTruth& truth, std::span<const std::size_t> cutoffs);

std::string format_report_tsv(const MetricReport& report);
std::string format_report_table(const MetricReport& report);

}  // namespace bisift

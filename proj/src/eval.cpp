#include "bisift/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "bisift/errors.hpp"
#include "text_util.hpp"

namespace bisift {

namespace {

// Relevant set with the query itself removed.
IdSet relevant_without_query(const RankList& list, const IdSet& relevant) {
  IdSet out = relevant;
  out.erase(list.query_id);
  return out;
}

// Ids of the list in order, the query itself skipped.
std::vector<const std::string*> retrieved(const RankList& list) {
  std::vector<const std::string*> ids;
  ids.reserve(list.entries.size());
  for (const RankEntry& e : list.entries) {
    if (e.image_id != list.query_id) ids.push_back(&e.image_id);
  }
  return ids;
}

std::size_t hits_in_top(const RankList& list, const IdSet& relevant, std::size_t k) {
  const auto ids = retrieved(list);
  const std::size_t n = std::min(k, ids.size());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < n; ++i) hits += relevant.count(*ids[i]);
  return hits;
}

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

void GroundTruth::add(const std::string& theme, const std::string& query_id, const std::string& relevant_id) {
  auto it = by_id_.find(query_id);
  if (it == by_id_.end()) {
    it = by_id_.emplace(query_id, queries_.size()).first;
    queries_.push_back(Query{theme, query_id, {}});
  } else if (queries_[it->second].theme != theme) {
    throw InvalidInputError("query '" + query_id + "' appears under themes '" + queries_[it->second].theme +
                            "' and '" + theme + "'");
  }
  queries_[it->second].relevant.insert(relevant_id);
}

std::vector<std::string> GroundTruth::themes() const {
  std::vector<std::string> out;
  for (const Query& q : queries_) {
    if (std::find(out.begin(), out.end(), q.theme) == out.end()) out.push_back(q.theme);
  }
  return out;
}

const GroundTruth::Query* GroundTruth::find(const std::string& query_id) const {
  const auto it = by_id_.find(query_id);
  return it == by_id_.end() ? nullptr : &queries_[it->second];
}

GroundTruth load_ground_truth(const std::filesystem::path& path) {
  auto in = detail::open_text(path);
  GroundTruth truth;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view text = detail::chomp(line);
    if (text.empty()) continue;
    const auto f = detail::split_tabs(text);
    if (f.size() != 3 || f[0].empty() || f[1].empty() || f[2].empty()) {
      throw FormatError(detail::location(path, line_no) + ": expected theme<TAB>query_id<TAB>relevant_id");
    }
    truth.add(std::string(f[0]), std::string(f[1]), std::string(f[2]));
  }
  return truth;
}

void save_ground_truth(const std::filesystem::path& path, const GroundTruth& truth) {
  std::ostringstream out;
  for (const auto& q : truth.queries()) {
    for (const auto& r : q.relevant) out << q.theme << '\t' << q.query_id << '\t' << r << '\n';
  }
  detail::write_text(path, out.str());
}

double precision_at(const RankList& list, const IdSet& relevant, std::size_t k) {
  if (k == 0) throw InvalidInputError("precision cutoff must be at least 1");
  return static_cast<double>(hits_in_top(list, relevant_without_query(list, relevant), k)) /
         static_cast<double>(k);
}

double recall_at(const RankList& list, const IdSet& relevant, std::size_t k) {
  if (k == 0) throw InvalidInputError("recall cutoff must be at least 1");
  const IdSet rel = relevant_without_query(list, relevant);
  if (rel.empty()) throw UndefinedRecallError("recall undefined for query '" + list.query_id + "': no relevant images");
  return static_cast<double>(hits_in_top(list, rel, k)) / static_cast<double>(rel.size());
}

double average_precision(const RankList& list, const IdSet& relevant) {
  const IdSet rel = relevant_without_query(list, relevant);
  if (rel.empty()) {
    throw UndefinedRecallError("average precision undefined for query '" + list.query_id + "': no relevant images");
  }
  const auto ids = retrieved(list);
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (!rel.count(*ids[r])) continue;
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(r + 1);
  }
  return sum / static_cast<double>(rel.size());
}

double mean_average_precision(const std::map<std::string, double>& ap_by_query, const GroundTruth& truth) {
  std::map<std::string, std::pair<double, std::size_t>> per_theme;
  for (const auto& q : truth.queries()) {
    const auto it = ap_by_query.find(q.query_id);
    if (it == ap_by_query.end()) throw IncompleteResultsError("no results for query '" + q.query_id + "'");
    auto& [sum, n] = per_theme[q.theme];
    sum += it->second;
    ++n;
  }
  if (per_theme.empty()) return 0.0;
  double total = 0.0;
  for (const auto& [theme, acc] : per_theme) total += acc.first / static_cast<double>(acc.second);
  return total / static_cast<double>(per_theme.size());
}

double flat_mean_average_precision(const std::map<std::string, double>& ap_by_query, const GroundTruth& truth) {
  if (truth.queries().empty()) return 0.0;
  double total = 0.0;
  for (const auto& q : truth.queries()) {
    const auto it = ap_by_query.find(q.query_id);
    if (it == ap_by_query.end()) throw IncompleteResultsError("no results for query '" + q.query_id + "'");
    total += it->second;
  }
  return total / static_cast<double>(truth.queries().size());
}

MetricReport evaluate(std::span<const RankList> lists, const GroundTruth& truth, std::span<const std::size_t> cutoffs) {
  MetricReport report;
  report.cutoffs.assign(cutoffs.begin(), cutoffs.end());
  report.mean_precision.assign(cutoffs.size(), 0.0);
  report.mean_recall.assign(cutoffs.size(), 0.0);

  std::map<std::string, const RankList*> by_query;
  for (const RankList& list : lists) by_query.emplace(list.query_id, &list);

  std::map<std::string, double> ap_by_query;
  for (const auto& q : truth.queries()) {
    const auto it = by_query.find(q.query_id);
    if (it == by_query.end()) throw IncompleteResultsError("no rank list for query '" + q.query_id + "'");
    const RankList& list = *it->second;

    QueryMetrics m{q.theme, q.query_id, average_precision(list, q.relevant), {}, {}};
    for (std::size_t c = 0; c < cutoffs.size(); ++c) {
      m.precision.push_back(precision_at(list, q.relevant, cutoffs[c]));
      m.recall.push_back(recall_at(list, q.relevant, cutoffs[c]));
      report.mean_precision[c] += m.precision.back();
      report.mean_recall[c] += m.recall.back();
    }
    ap_by_query[q.query_id] = m.average_precision;
    report.queries.push_back(std::move(m));
  }

  if (!report.queries.empty()) {
    const auto n = static_cast<double>(report.queries.size());
    for (auto& v : report.mean_precision) v /= n;
    for (auto& v : report.mean_recall) v /= n;
  }
  std::map<std::string, std::pair<double, std::size_t>> per_theme;
  for (const auto& m : report.queries) {
    per_theme[m.theme].first += m.average_precision;
    ++per_theme[m.theme].second;
  }
  for (const auto& [theme, acc] : per_theme) report.theme_map[theme] = acc.first / static_cast<double>(acc.second);
  report.map = mean_average_precision(ap_by_query, truth);
  report.flat_map = flat_mean_average_precision(ap_by_query, truth);
  return report;
}

std::string format_report_tsv(const MetricReport& report) {
  std::ostringstream out;
  out << "scope\tid\tmetric\tvalue\n";
  out << "overall\t-\tmAP_two_level\t" << fixed(report.map) << '\n';
  out << "overall\t-\tmAP_flat\t" << fixed(report.flat_map) << '\n';
  for (std::size_t c = 0; c < report.cutoffs.size(); ++c) {
    out << "overall\t-\tP@" << report.cutoffs[c] << '\t' << fixed(report.mean_precision[c]) << '\n';
    out << "overall\t-\tR@" << report.cutoffs[c] << '\t' << fixed(report.mean_recall[c]) << '\n';
  }
  for (const auto& [theme, ap] : report.theme_map) out << "theme\t" << theme << "\tmAP\t" << fixed(ap) << '\n';
  for (const auto& q : report.queries) {
    out << "query\t" << q.query_id << "\tAP\t" << fixed(q.average_precision) << '\n';
    for (std::size_t c = 0; c < report.cutoffs.size(); ++c) {
      out << "query\t" << q.query_id << "\tP@" << report.cutoffs[c] << '\t' << fixed(q.precision[c]) << '\n';
      out << "query\t" << q.query_id << "\tR@" << report.cutoffs[c] << '\t' << fixed(q.recall[c]) << '\n';
    }
  }
  return out.str();
}

std::string format_report_table(const MetricReport& report) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-24s %-16s %8s\n", "query", "theme", "AP");
  out << line;
  for (const auto& q : report.queries) {
    std::snprintf(line, sizeof line, "%-24s %-16s %8.4f\n", q.query_id.c_str(), q.theme.c_str(), q.average_precision);
    out << line;
  }
  out << '\n';
  for (std::size_t c = 0; c < report.cutoffs.size(); ++c) {
    std::snprintf(line, sizeof line, "P@%-4zu %.4f   R@%-4zu %.4f\n", report.cutoffs[c], report.mean_precision[c],
                  report.cutoffs[c], report.mean_recall[c]);
    out << line;
  }
  std::snprintf(line, sizeof line, "mAP (per theme, then over themes): %.4f\nmAP (flat over queries):          %.4f\n",
                report.map, report.flat_map);
  out << line;
  return out.str();
}

}  // namespace bisift

#include <doctest.h>

#include <algorithm>
#include <random>

#include "bisift/errors.hpp"
#include "bisift/eval.hpp"
#include "support.hpp"

using namespace bisift;
using namespace testsupport;

namespace {

RankList list_of(const std::string& query, std::initializer_list<const char*> ids) {
  RankList l{query, {}};
  for (const char* id : ids) l.entries.push_back({id, 0.0, Stage::First});
  return l;
}

}  // namespace

TEST_CASE("precision fixtures") {
  const RankList l = list_of("q", {"a", "x", "b", "c", "y"});
  CHECK(precision_at(l, {"a", "b", "c"}, 4) == 0.75);
  CHECK(precision_at(l, {"z"}, 3) == 0.0);
  CHECK(precision_at(l, {"a", "x"}, 2) == 1.0);
  CHECK_THROWS_AS(precision_at(l, {"a"}, 0), InvalidInputError);
}

TEST_CASE("recall fixtures") {
  const RankList l = list_of("q", {"a", "x", "b", "c", "y"});
  CHECK(recall_at(l, {"a", "b", "c", "d", "e"}, 5) == doctest::Approx(0.6));
  CHECK(recall_at(l, {"a", "y"}, 10) == 1.0);
  CHECK(recall_at(l, {"z"}, 5) == 0.0);
  CHECK_THROWS_AS(recall_at(l, {}, 5), UndefinedRecallError);
}

TEST_CASE("average precision fixtures") {
  CHECK(average_precision(list_of("q", {"a", "x"}), {"a"}) == 1.0);
  CHECK(average_precision(list_of("q", {"a", "x", "b"}), {"a", "b"}) == doctest::Approx(5.0 / 6.0));
  CHECK(average_precision(list_of("q", {"x", "y"}), {"a"}) == 0.0);
  // Unretrieved relevant items count as zero.
  CHECK(average_precision(list_of("q", {"a"}), {"a", "b"}) == 0.5);
  CHECK_THROWS_AS(average_precision(list_of("q", {"a"}), {}), UndefinedRecallError);
}

TEST_CASE("the query itself is ignored") {
  const RankList l = list_of("q", {"q", "a", "x", "b"});
  CHECK(average_precision(l, {"a", "b", "q"}) == doctest::Approx(5.0 / 6.0));
  CHECK(precision_at(l, {"a", "b"}, 2) == 0.5);
  CHECK(recall_at(l, {"q", "a"}, 1) == 1.0);
  CHECK_THROWS_AS(recall_at(l, {"q"}, 1), UndefinedRecallError);
}

TEST_CASE("mean average precision fixtures") {
  GroundTruth gt;
  gt.add("A", "q1", "r");
  gt.add("A", "q2", "r");
  gt.add("B", "q3", "r");
  const std::map<std::string, double> aps{{"q1", 1.0}, {"q2", 0.0}, {"q3", 0.5}};
  CHECK(mean_average_precision(aps, gt) == 0.5);
  CHECK(flat_mean_average_precision(aps, gt) == 0.5);

  GroundTruth single;
  single.add("T", "q", "r");
  CHECK(mean_average_precision({{"q", 0.5}}, single) == 0.5);

  const std::map<std::string, double> uneven{{"q1", 1.0}, {"q2", 1.0}, {"q3", 0.0}};
  CHECK(mean_average_precision(uneven, gt) == 0.5);
  CHECK(flat_mean_average_precision(uneven, gt) == doctest::Approx(2.0 / 3.0));

  const std::map<std::string, double> same{{"q1", 0.3}, {"q2", 0.3}, {"q3", 0.3}};
  CHECK(mean_average_precision(same, gt) == doctest::Approx(0.3));

  CHECK_THROWS_AS(mean_average_precision({{"q1", 1.0}}, gt), IncompleteResultsError);
}

TEST_CASE("ground truth rejects a query under two themes") {
  GroundTruth gt;
  gt.add("A", "q", "r1");
  gt.add("A", "q", "r2");
  CHECK(gt.find("q")->relevant.size() == 2);
  CHECK_THROWS_AS(gt.add("B", "q", "r3"), InvalidInputError);
  CHECK(gt.themes() == std::vector<std::string>{"A"});
}

TEST_CASE("ground truth files") {
  TempDir dir;
  GroundTruth gt;
  gt.add("scene1", "q1", "a");
  gt.add("scene1", "q1", "b");
  gt.add("scene2", "q2", "c");
  save_ground_truth(dir / "gt.tsv", gt);
  const GroundTruth back = load_ground_truth(dir / "gt.tsv");
  REQUIRE(back.queries().size() == 2);
  CHECK(back.find("q1")->relevant == IdSet{"a", "b"});
  CHECK(back.find("q2")->theme == "scene2");

  write_bytes(dir / "bad.tsv", "scene\tq\n");
  CHECK_THROWS_AS(load_ground_truth(dir / "bad.tsv"), FormatError);
}

TEST_CASE("metric properties on random lists") {
  std::mt19937_64 rng(71);
  std::vector<std::string> pool;
  for (int i = 0; i < 30; ++i) pool.push_back("i" + std::to_string(i));
  for (int t = 0; t < 200; ++t) {
    std::shuffle(pool.begin(), pool.end(), rng);
    RankList l{"q", {}};
    for (const auto& id : pool) l.entries.push_back({id, 0.0, Stage::First});
    IdSet rel;
    for (int k = 0; k < 1 + static_cast<int>(rng() % 6); ++k) rel.insert(pool[rng() % pool.size()]);
    const std::size_t k = 1 + rng() % 30;

    // Precision and recall depend only on the top-k set.
    RankList permuted = l;
    std::shuffle(permuted.entries.begin(), permuted.entries.begin() + static_cast<std::ptrdiff_t>(k), rng);
    std::shuffle(permuted.entries.begin() + static_cast<std::ptrdiff_t>(k), permuted.entries.end(), rng);
    REQUIRE(precision_at(l, rel, k) == precision_at(permuted, rel, k));
    REQUIRE(recall_at(l, rel, k) == recall_at(permuted, rel, k));

    const double ap = average_precision(l, rel);
    REQUIRE(ap >= 0.0);
    REQUIRE(ap <= 1.0);

    // Moving a relevant item one place earlier never lowers AP.
    for (std::size_t r = 1; r < l.entries.size(); ++r) {
      if (rel.count(l.entries[r].image_id) && !rel.count(l.entries[r - 1].image_id)) {
        RankList better = l;
        std::swap(better.entries[r], better.entries[r - 1]);
        REQUIRE(average_precision(better, rel) >= ap);
        break;
      }
    }

    // Reordering non-relevant items after the last hit leaves AP unchanged.
    std::size_t last = 0;
    for (std::size_t r = 0; r < l.entries.size(); ++r) {
      if (rel.count(l.entries[r].image_id)) last = r;
    }
    RankList tail = l;
    std::shuffle(tail.entries.begin() + static_cast<std::ptrdiff_t>(last) + 1, tail.entries.end(), rng);
    REQUIRE(average_precision(tail, rel) == ap);
  }
}

TEST_CASE("evaluate builds the full report") {
  GroundTruth gt;
  gt.add("A", "q1", "a");
  gt.add("A", "q1", "b");
  gt.add("B", "q2", "c");
  const std::vector<RankList> lists{list_of("q1", {"q1", "a", "x", "b"}), list_of("q2", {"x", "y", "c"}),
                                    list_of("extra", {"a"})};
  const std::vector<std::size_t> cutoffs{1, 3};
  const MetricReport r = evaluate(lists, gt, cutoffs);
  REQUIRE(r.queries.size() == 2);
  CHECK(r.queries[0].average_precision == doctest::Approx(5.0 / 6.0));
  CHECK(r.queries[1].average_precision == doctest::Approx(1.0 / 3.0));
  CHECK(r.map == doctest::Approx((5.0 / 6.0 + 1.0 / 3.0) / 2));
  CHECK(r.theme_map.at("A") == doctest::Approx(5.0 / 6.0));
  CHECK(r.mean_precision[0] == doctest::Approx(0.5));
  CHECK(r.mean_recall[1] == doctest::Approx((1.0 + 1.0) / 2));

  const std::string tsv = format_report_tsv(r);
  CHECK(tsv.rfind("scope\tid\tmetric\tvalue\n", 0) == 0);
  CHECK(tsv.find("overall\t-\tmAP_two_level\t0.583333\n") != std::string::npos);
  CHECK(tsv.find("query\tq2\tR@3\t1.000000\n") != std::string::npos);
  CHECK(format_report_table(r).find("mAP") != std::string::npos);

  const std::vector<RankList> missing{lists[0]};
  CHECK_THROWS_AS(evaluate(missing, gt, cutoffs), IncompleteResultsError);
}

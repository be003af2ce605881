#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "bisift/errors.hpp"
#include "bisift/retrieval.hpp"
#include "bisift/synthbench.hpp"
#include "support.hpp"

using namespace bisift;
using namespace testsupport;

namespace {

std::shared_ptr<const Vocabulary> small_vocabulary(std::span<const DescriptorSet> sets, std::size_t k,
                                                   std::uint64_t seed = 1) {
  const auto sample = collect_training_sample(sets);
  return std::make_shared<const Vocabulary>(train_kmeans(sample, {.k = k, .max_iters = 10, .seed = seed}));
}

std::vector<DescriptorSet> random_images(std::size_t n, std::mt19937_64& rng) {
  std::vector<DescriptorSet> out;
  for (std::size_t i = 0; i < n; ++i) {
    char id[16];
    std::snprintf(id, sizeof id, "im%03zu", i);
    out.push_back({id, random_int_descriptors(5 + rng() % 20, rng)});
  }
  return out;
}

std::vector<std::string> ids_of(const RankList& list) {
  std::vector<std::string> out;
  for (const auto& e : list.entries) out.push_back(e.image_id);
  return out;
}

double histogram_distance_oracle(const BovwHistogram& a, const BovwHistogram& b) {
  long double s = 0;
  for (std::size_t i = 0; i < a.weights.size(); ++i) {
    const long double d = static_cast<long double>(a.weights[i]) - b.weights[i];
    s += d * d;
  }
  return static_cast<double>(std::sqrt(s));
}

}  // namespace

TEST_CASE("representation names and conversions") {
  for (Representation r : {Representation::Bisift, Representation::Percell, Representation::Float,
                           Representation::Int}) {
    CHECK(parse_representation(to_string(r)) == r);
    CHECK(kind_applies(r, default_kind(r)));
  }
  CHECK_FALSE(parse_representation("orb").has_value());
  CHECK_FALSE(kind_applies(Representation::Float, DistanceKind::IntL2));
  CHECK(kind_applies(Representation::Percell, DistanceKind::HammingNaive));

  std::mt19937_64 rng(61);
  const DescriptorSet raw{"a", random_int_descriptors(3, rng)};
  const DescriptorSet f = to_representation(raw, Representation::Float);
  CHECK(f.dtype() == Dtype::Float32);
  CHECK(to_representation(f, Representation::Int).dtype() == Dtype::Uint8);
  CHECK(to_representation(raw, Representation::Int) == raw);
  const DescriptorSet b = to_representation(raw, Representation::Bisift);
  CHECK(b.dtype() == Dtype::Binary128);
  CHECK_THROWS_AS(to_representation(b, Representation::Float), InvalidInputError);
}

TEST_CASE("retrieval config validation") {
  RetrievalConfig c;
  CHECK_NOTHROW(c.validate());
  c.top_x = 0;
  CHECK_THROWS_AS(c.validate(), InvalidInputError);
  c = {};
  c.ratio = 0.0;
  CHECK_THROWS_AS(c.validate(), InvalidInputError);
  c = {};
  c.kind = DistanceKind::FloatL2;
  CHECK_THROWS_AS(c.validate(), SchemeError);
}

TEST_CASE("index construction") {
  std::mt19937_64 rng(62);
  auto images = random_images(6, rng);
  const auto vocab = small_vocabulary(images, 8);
  const Index index(images, vocab, Representation::Bisift);
  CHECK(index.size() == 6);
  CHECK(index.find("im003") == 3u);
  CHECK_FALSE(index.find("nope").has_value());
  CHECK(index.fingerprints(2).dtype() == Dtype::Binary128);
  CHECK(index.histogram(2).weights.size() == 8);

  images[4].image_id = images[1].image_id;
  CHECK_THROWS_AS(Index(images, vocab, Representation::Bisift), InvalidInputError);
  CHECK_THROWS_AS(Index(images, nullptr, Representation::Bisift), InvalidInputError);
}

TEST_CASE("first stage orders by histogram distance, ties by id") {
  std::mt19937_64 rng(63);
  const auto images = random_images(50, rng);
  const auto vocab = small_vocabulary(images, 16);
  const Index index(images, vocab, Representation::Float);

  for (int q = 0; q < 10; ++q) {
    const DescriptorSet query{"q", random_int_descriptors(12, rng)};
    const BovwHistogram h = build_histogram(query, *vocab);
    const RankList list = first_stage_rank(h, index);
    REQUIRE(list.entries.size() == 50);

    std::vector<std::pair<double, std::string>> oracle;
    for (std::size_t i = 0; i < index.size(); ++i) {
      oracle.emplace_back(histogram_distance_oracle(h, index.histogram(i)), index.id(i));
    }
    std::sort(oracle.begin(), oracle.end());
    for (std::size_t r = 0; r < oracle.size(); ++r) {
      REQUIRE(list.entries[r].score == doctest::Approx(oracle[r].first).epsilon(1e-9));
      REQUIRE(list.entries[r].stage == Stage::First);
      if (r + 1 < oracle.size() && oracle[r + 1].first - oracle[r].first > 1e-9) {
        REQUIRE(list.entries[r].image_id == oracle[r].second);
      }
    }
  }

  SUBCASE("identical histogram ranks first at distance zero") {
    const RankList list = first_stage_rank(index.histogram(17), index);
    CHECK(list.entries[0].score == 0.0);
    CHECK(index.histogram(*index.find(list.entries[0].image_id)).weights == index.histogram(17).weights);
  }
  SUBCASE("exact ties fall back to id order") {
    std::vector<DescriptorSet> twins{images[3], images[3], images[3]};
    twins[0].image_id = "c";
    twins[1].image_id = "a";
    twins[2].image_id = "b";
    const Index tied(twins, vocab, Representation::Float);
    CHECK(ids_of(first_stage_rank(build_histogram(images[9], *vocab), tied)) ==
          std::vector<std::string>{"a", "b", "c"});
  }
  SUBCASE("single image index") {
    const std::vector<DescriptorSet> one{images[0]};
    const Index solo(one, vocab, Representation::Float);
    CHECK(first_stage_rank(index.histogram(5), solo).entries.size() == 1);
  }
  SUBCASE("vocabulary size mismatch") {
    BovwHistogram wrong = index.histogram(0);
    wrong.weights.resize(9);
    CHECK_THROWS_AS(first_stage_rank(wrong, index), MismatchError);
  }
}

TEST_CASE("re-ranking reorders only the top block") {
  std::mt19937_64 rng(64);
  auto images = random_images(40, rng);
  const auto vocab = small_vocabulary(images, 12);
  const Index index(images, vocab, Representation::Bisift);
  const DescriptorSet& q = images[7];
  const DescriptorSet q_fp = to_representation(q, Representation::Bisift);

  // A first stage in which the exact duplicate sits at rank 6.
  RankList first{q.image_id, {}};
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (i != 7) first.entries.push_back({index.id(i), static_cast<double>(first.entries.size()), Stage::First});
  }
  first.entries.insert(first.entries.begin() + 5, RankEntry{"im007", 99.0, Stage::First});

  SUBCASE("duplicate promoted to rank one") {
    const RankList out = rerank_top_x(first, q_fp, index, 10, 0.8, DistanceKind::HammingLookup);
    CHECK(out.entries[0].image_id == "im007");
    CHECK(out.entries[0].score == static_cast<double>(q.count()));
  }
  SUBCASE("permutation with untouched tail and stable ties") {
    for (std::size_t x : {1u, 3u, 10u, 30u, 100u}) {
      const RankList out = rerank_top_x(first, q_fp, index, x, 0.8, DistanceKind::HammingLookup);
      auto a = ids_of(out), b = ids_of(first);
      REQUIRE(a.size() == b.size());
      const std::size_t block = std::min<std::size_t>(x, b.size());
      REQUIRE(std::equal(a.begin() + block, a.end(), b.begin() + block));
      for (std::size_t r = 0; r < out.entries.size(); ++r) {
        REQUIRE(out.entries[r].stage == (r < block ? Stage::Reranked : Stage::First));
      }
      std::sort(a.begin(), a.end());
      std::sort(b.begin(), b.end());
      REQUIRE(a == b);
      // Match counts never increase down the block.
      for (std::size_t r = 1; r < block; ++r) {
        REQUIRE(out.entries[r - 1].score >= out.entries[r].score);
      }
    }
  }
  SUBCASE("X = 1 keeps the order") {
    const RankList out = rerank_top_x(first, q_fp, index, 1, 0.8, DistanceKind::HammingLookup);
    CHECK(ids_of(out) == ids_of(first));
    CHECK(out.entries[0].stage == Stage::Reranked);
    CHECK(out.entries[1].stage == Stage::First);
  }
  SUBCASE("scores match the matcher and worker count does not matter") {
    const RankList one = rerank_top_x(first, q_fp, index, 15, 0.8, DistanceKind::HammingNaive, 1);
    const RankList many = rerank_top_x(first, q_fp, index, 15, 0.8, DistanceKind::HammingNaive, 4);
    CHECK(one == many);
    for (std::size_t r = 0; r < 15; ++r) {
      const auto pos = *index.find(one.entries[r].image_id);
      const auto m = match_images(q_fp, index.fingerprints(pos), DistanceKind::HammingLookup, 0.8);
      REQUIRE(one.entries[r].score == static_cast<double>(m.similarity.match_count));
    }
  }
  SUBCASE("unknown candidate") {
    RankList bad = first;
    bad.entries[2].image_id = "ghost";
    CHECK_THROWS_AS(rerank_top_x(bad, q_fp, index, 5, 0.8, DistanceKind::HammingLookup), MismatchError);
    CHECK_THROWS_AS(rerank_top_x(first, q_fp, index, 0, 0.8, DistanceKind::HammingLookup), InvalidInputError);
  }
}

TEST_CASE("query composes both stages") {
  std::mt19937_64 rng(65);
  const auto images = random_images(30, rng);
  const auto vocab = small_vocabulary(images, 10);

  SUBCASE("indexed image comes back first") {
    for (Representation rep : {Representation::Bisift, Representation::Percell, Representation::Float,
                               Representation::Int}) {
      const Index index(images, vocab, rep);
      RetrievalConfig config;
      config.representation = rep;
      config.kind = default_kind(rep);
      const RankList out = query(images[11], index, config);
      CHECK(out.entries[0].image_id == "im011");
      CHECK(out.entries.size() == 30);
    }
  }
  SUBCASE("empty query keeps the first-stage block order") {
    const Index index(images, vocab, Representation::Bisift);
    const DescriptorSet empty{"empty", std::vector<IntDescriptor>{}};
    const RankList first = first_stage_query(empty, index);
    const RankList out = query(empty, index, RetrievalConfig{});
    CHECK(ids_of(out) == ids_of(first));
    for (const auto& e : out.entries) {
      if (e.stage == Stage::Reranked) CHECK(e.score == 0.0);
    }
  }
  SUBCASE("representation must match the index") {
    const Index index(images, vocab, Representation::Bisift);
    RetrievalConfig config;
    config.representation = Representation::Float;
    config.kind = DistanceKind::FloatL2;
    CHECK_THROWS_AS(query(images[0], index, config), MismatchError);
  }
}

TEST_CASE("toy corpus: three transformed copies reach the top five") {
  CorpusConfig cfg;
  cfg.base_images = 17;
  cfg.copies_per_query = 3;
  cfg.queries = 1;
  cfg.seed = 5;
  const PlantedCorpus corpus = gen_planted_corpus(cfg);
  REQUIRE(corpus.database.size() == 20);
  const auto vocab = small_vocabulary(corpus.database, 64);
  const Index index(corpus.database, vocab, Representation::Bisift);
  const Index float_index(corpus.database, vocab, Representation::Float);

  const RankList out = query(corpus.queries[0], index, RetrievalConfig{});
  const auto& relevant = corpus.truth.queries()[0].relevant;
  const auto top = ids_of(out);
  for (const auto& id : relevant) CHECK(std::find(top.begin(), top.begin() + 5, id) != top.begin() + 5);

  // Exhaustive raw-descriptor matching agrees on the copies.
  const RankList oracle = rank_by_matching(to_representation(corpus.queries[0], Representation::Float), float_index,
                                           kDefaultRatio, DistanceKind::FloatL2);
  const auto oracle_top = ids_of(oracle);
  for (const auto& id : relevant) {
    CHECK(std::find(oracle_top.begin(), oracle_top.begin() + 5, id) != oracle_top.begin() + 5);
  }
}

TEST_CASE("full matching ranks by similarity then id") {
  std::mt19937_64 rng(66);
  const auto images = random_images(25, rng);
  const auto vocab = small_vocabulary(images, 6);
  const Index index(images, vocab, Representation::Int);
  const DescriptorSet q = images[4];
  const RankList list = rank_by_matching(q, index, 0.8, DistanceKind::IntL2, 2);
  REQUIRE(list.entries.size() == 25);
  CHECK(list.entries[0].image_id == "im004");
  std::vector<std::pair<SimilarityScore, std::string>> oracle;
  for (std::size_t i = 0; i < index.size(); ++i) {
    oracle.emplace_back(similarity_score(match_images(q, index.fingerprints(i), DistanceKind::IntL2, 0.8).similarity),
                        index.id(i));
  }
  std::sort(oracle.begin(), oracle.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  for (std::size_t r = 0; r < oracle.size(); ++r) CHECK(list.entries[r].image_id == oracle[r].second);
}

TEST_CASE("manifests") {
  TempDir dir;
  std::mt19937_64 rng(67);
  const auto images = random_images(5, rng);
  std::filesystem::create_directory(dir / "data");
  save_descriptors(dir / "data/a.bsft", std::span(images).first(3));
  save_descriptors(dir / "data/b.bsft", std::span(images).subspan(3));
  const std::vector<std::filesystem::path> files{dir / "data/a.bsft", dir / "data/b.bsft"};

  const auto entries = manifest_for(files, dir.path());
  REQUIRE(entries.size() == 5);
  CHECK(entries[4].descriptor_file == std::filesystem::path("data/b.bsft"));
  write_manifest(dir / "m.tsv", entries);
  CHECK(read_manifest(dir / "m.tsv") == entries);
  CHECK(load_manifest_images(dir / "m.tsv") == images);

  SUBCASE("reordered manifest loads in manifest order") {
    std::vector<ManifestEntry> shuffled{entries[4], entries[0], entries[2]};
    write_manifest(dir / "s.tsv", shuffled);
    const auto loaded = load_manifest_images(dir / "s.tsv");
    CHECK(loaded[0] == images[4]);
    CHECK(loaded[1] == images[0]);
  }
  SUBCASE("wrong id at an offset") {
    auto bad = entries;
    bad[1].image_id = "other";
    write_manifest(dir / "bad.tsv", bad);
    CHECK_THROWS_AS(load_manifest_images(dir / "bad.tsv"), CorruptionError);
  }
  SUBCASE("offset past the end") {
    auto bad = entries;
    bad[1].offset = 1u << 30;
    write_manifest(dir / "bad.tsv", bad);
    CHECK_THROWS_AS(load_manifest_images(dir / "bad.tsv"), CorruptionError);
  }
  SUBCASE("malformed line") {
    write_bytes(dir / "bad.tsv", "img\tfile\n");
    CHECK_THROWS_AS(read_manifest(dir / "bad.tsv"), FormatError);
  }
  SUBCASE("binary files are not indexable") {
    save_descriptors(dir / "bin.bsft", std::vector<DescriptorSet>{to_representation(images[0], Representation::Bisift)});
    const std::vector<std::filesystem::path> bin{dir / "bin.bsft"};
    CHECK_THROWS_AS(manifest_for(bin, dir.path()), InvalidInputError);
  }
}

TEST_CASE("rank-list files round-trip exactly") {
  TempDir dir;
  std::mt19937_64 rng(68);
  std::uniform_real_distribution<double> score(0.0, 2.0);
  std::vector<RankList> lists;
  for (int q = 0; q < 3; ++q) {
    RankList l{"query" + std::to_string(q), {}};
    for (int r = 0; r < 8; ++r) {
      l.entries.push_back({"img" + std::to_string(r), score(rng), r < 3 ? Stage::Reranked : Stage::First});
    }
    lists.push_back(l);
  }
  lists.push_back({"unranked", {}});
  write_rank_lists(dir / "r.tsv", lists);
  const auto back = read_rank_lists(dir / "r.tsv");
  lists.pop_back();  // a query without entries has no rows
  CHECK(back == lists);
  write_rank_lists(dir / "r2.tsv", back);
  CHECK(read_bytes(dir / "r.tsv") == read_bytes(dir / "r2.tsv"));

  const std::string good = read_bytes(dir / "r.tsv");
  auto reject = [&](const std::string& text) {
    write_bytes(dir / "bad.tsv", text);
    CHECK_THROWS_AS(read_rank_lists(dir / "bad.tsv"), FormatError);
  };
  reject("q\t1\timg\t0.5\n");
  reject("q\t2\timg\t0.5\tFIRST\n");
  reject("q\t1\timg\tabc\tFIRST\n");
  reject("q\t1\timg\t0.5\tLATER\n");
  reject("q\t1\ta\t0.5\tFIRST\nq\t1\tb\t0.5\tFIRST\n");
  reject("q\t1\ta\t0.5\tFIRST\np\t1\tb\t0.5\tFIRST\nq\t2\tc\t0.5\tFIRST\n");
}

// Command-line front end: every subcommand reads and writes files only.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "bisift/binarize.hpp"
#include "bisift/descriptor.hpp"
#include "bisift/errors.hpp"
#include "bisift/eval.hpp"
#include "bisift/retrieval.hpp"
#include "bisift/synthbench.hpp"
#include "bisift/vocabulary.hpp"

namespace fs = std::filesystem;
using namespace bisift;

namespace {

void require_input(const fs::path& p) {
  if (!fs::is_regular_file(p)) throw IoError("input file '" + p.string() + "' does not exist");
}

void require_output(const fs::path& p) {
  const fs::path dir = p.parent_path();
  if (!dir.empty() && !fs::is_directory(dir)) {
    throw IoError("output directory '" + dir.string() + "' does not exist");
  }
}

void write_file(const fs::path& p, const std::string& text) {
  std::FILE* f = std::fopen(p.string().c_str(), "wb");
  if (!f) throw IoError("cannot open '" + p.string() + "' for writing");
  const bool ok = std::fwrite(text.data(), 1, text.size(), f) == text.size();
  if (std::fclose(f) != 0 || !ok) throw IoError("write failed for '" + p.string() + "'");
}

struct RetrievalOptions {
  fs::path manifest;
  fs::path vocab;
  fs::path queries;
  fs::path out;
  std::size_t top_x = kDefaultTopX;
  double ratio = kDefaultRatio;
  std::string kind = "hamming-lookup";
  std::string representation;  // empty: derived from kind
  unsigned workers = 1;
};

void add_retrieval_options(CLI::App* cmd, RetrievalOptions& o) {
  cmd->add_option("--index", o.manifest, "Index manifest")->required();
  cmd->add_option("--vocab", o.vocab, "Vocabulary file")->required();
  cmd->add_option("--queries", o.queries, "Query descriptor file (float32 or uint8)")->required();
  cmd->add_option("--out", o.out, "Rank-list TSV to write")->required();
  cmd->add_option("--top-x", o.top_x, "Candidates re-ranked per query")->capture_default_str();
  cmd->add_option("--ratio", o.ratio, "Ratio-test threshold S in (0, 1]")->capture_default_str();
  cmd->add_option("--kind", o.kind, "float-l2 | int-l2 | hamming-naive | hamming-lookup")->capture_default_str();
  cmd->add_option("--representation", o.representation, "bisift | percell | float | int (default: from --kind)");
  cmd->add_option("--workers", o.workers, "Worker threads")->capture_default_str();
}

RetrievalConfig make_config(const RetrievalOptions& o) {
  RetrievalConfig config;
  const auto kind = parse_distance_kind(o.kind);
  if (!kind) throw InvalidInputError("unknown distance kind '" + o.kind + "'");
  config.kind = *kind;
  if (o.representation.empty()) {
    config.representation = *kind == DistanceKind::FloatL2 ? Representation::Float
                            : *kind == DistanceKind::IntL2 ? Representation::Int
                                                           : Representation::Bisift;
  } else {
    const auto rep = parse_representation(o.representation);
    if (!rep) throw InvalidInputError("unknown representation '" + o.representation + "'");
    config.representation = *rep;
  }
  config.top_x = o.top_x;
  config.ratio = o.ratio;
  config.workers = o.workers;
  config.validate();
  return config;
}

Index load_index(const RetrievalOptions& o, const RetrievalConfig& config) {
  auto vocab = std::make_shared<const Vocabulary>(load_vocabulary(o.vocab));
  const auto images = load_manifest_images(o.manifest);
  return Index(images, std::move(vocab), config.representation, config.workers);
}

std::vector<std::size_t> parse_list(const std::string& text) {
  std::vector<std::size_t> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = std::min(text.find(',', start), text.size());
    const std::string item = text.substr(start, comma - start);
    try {
      std::size_t used = 0;
      const unsigned long long v = std::stoull(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      out.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw InvalidInputError("not a non-negative integer list item: '" + item + "'");
    }
    start = comma + 1;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Binary SIFT fingerprints for image copy retrieval"};
  app.require_subcommand(1);

  // binarize
  fs::path bin_in, bin_out;
  std::string bin_scheme = "bisift";
  auto* binarize_cmd = app.add_subcommand("binarize", "Binarize a float32/uint8 descriptor file");
  binarize_cmd->add_option("--in", bin_in, "Input descriptor file")->required();
  binarize_cmd->add_option("--out", bin_out, "Output binary128 descriptor file")->required();
  binarize_cmd->add_option("--scheme", bin_scheme, "bisift | percell")->capture_default_str();

  // train-vocab
  std::vector<fs::path> tv_in;
  fs::path tv_out;
  KMeansOptions kmeans;
  auto* train_cmd = app.add_subcommand("train-vocab", "Learn a visual vocabulary with k-means");
  train_cmd->add_option("--in", tv_in, "Descriptor file(s)")->required();
  train_cmd->add_option("--out", tv_out, "Vocabulary file to write")->required();
  train_cmd->add_option("--k", kmeans.k, "Vocabulary size")->capture_default_str();
  train_cmd->add_option("--seed", kmeans.seed, "Random seed")->capture_default_str();
  train_cmd->add_option("--max-iters", kmeans.max_iters, "Lloyd iterations")->capture_default_str();
  kmeans.sample_cap = 100000;
  train_cmd->add_option("--sample-cap", kmeans.sample_cap, "Subsample above this many descriptors (0 = all)")
      ->capture_default_str();
  train_cmd->add_option("--workers", kmeans.workers, "Worker threads")->capture_default_str();

  // index
  std::vector<fs::path> idx_in;
  fs::path idx_out;
  auto* index_cmd = app.add_subcommand("index", "Write an index manifest for raw descriptor files");
  index_cmd->add_option("--descriptors", idx_in, "Raw descriptor file(s)")->required();
  index_cmd->add_option("--out", idx_out, "Manifest to write")->required();

  // query
  RetrievalOptions q_opts;
  bool first_stage_only = false;
  auto* query_cmd = app.add_subcommand("query", "BoVW ranking plus top-X re-ranking");
  add_retrieval_options(query_cmd, q_opts);
  query_cmd->add_flag("--first-stage-only", first_stage_only, "Skip re-ranking");

  // rerank
  RetrievalOptions r_opts;
  fs::path r_first;
  auto* rerank_cmd = app.add_subcommand("rerank", "Re-rank an existing first-stage rank list");
  add_retrieval_options(rerank_cmd, r_opts);
  rerank_cmd->add_option("--ranklist", r_first, "First-stage rank-list TSV")->required();

  // eval
  fs::path ev_gt, ev_rl, ev_out, ev_table;
  std::string ev_cutoffs = "1,5,10";
  auto* eval_cmd = app.add_subcommand("eval", "Precision, recall and mAP of rank lists");
  eval_cmd->add_option("--gt", ev_gt, "Ground-truth file")->required();
  eval_cmd->add_option("--ranklist", ev_rl, "Rank-list TSV")->required();
  eval_cmd->add_option("--out", ev_out, "Metric report TSV to write")->required();
  eval_cmd->add_option("--table", ev_table, "Also write the human-readable table here");
  eval_cmd->add_option("--cutoffs", ev_cutoffs, "Comma-separated cutoffs")->capture_default_str();

  // bench
  SynthConfig bench;
  std::string bench_sizes = "1000,10000,100000,500000";
  std::string bench_kinds = "float-l2,int-l2,hamming-naive,hamming-lookup";
  fs::path bench_out, bench_gain;
  auto* bench_cmd = app.add_subcommand("bench", "Time nearest-neighbour search on synthetic descriptors");
  bench_cmd->add_option("--sizes", bench_sizes, "Strictly increasing database sizes")->capture_default_str();
  bench_cmd->add_option("--queries", bench.query_count, "Queries per cell")->capture_default_str();
  bench_cmd->add_option("--kinds", bench_kinds, "Distance kinds")->capture_default_str();
  bench_cmd->add_option("--reps", bench.repetitions, "Timed repetitions per cell")->capture_default_str();
  bench_cmd->add_option("--seed", bench.seed, "Random seed")->capture_default_str();
  bench_cmd->add_option("--out", bench_out, "Timing TSV to write")->required();
  bench_cmd->add_option("--gain-out", bench_gain, "Pairwise gain TSV to write");

  // gen-synth
  std::size_t gs_n = 1000;
  std::uint64_t gs_seed = 42;
  std::string gs_prefix;
  auto* synth_cmd = app.add_subcommand("gen-synth", "Generate uniform random descriptors in three representations");
  synth_cmd->add_option("--n", gs_n, "Descriptor count")->capture_default_str();
  synth_cmd->add_option("--seed", gs_seed, "Random seed")->capture_default_str();
  synth_cmd->add_option("--out-prefix", gs_prefix, "Writes <prefix>.float.bsft, .uint8.bsft, .binary.bsft")
      ->required();

  // gen-corpus
  CorpusConfig corpus_cfg;
  fs::path gc_db, gc_queries, gc_gt;
  auto* corpus_cmd = app.add_subcommand("gen-corpus", "Generate a planted-copy retrieval corpus");
  corpus_cmd->add_option("--base", corpus_cfg.base_images, "Base images")->capture_default_str();
  corpus_cmd->add_option("--copies", corpus_cfg.copies_per_query, "Copies per query")->capture_default_str();
  corpus_cmd->add_option("--queries", corpus_cfg.queries, "Query scenes")->capture_default_str();
  corpus_cmd->add_option("--seed", corpus_cfg.seed, "Random seed")->capture_default_str();
  corpus_cmd->add_option("--noise", corpus_cfg.noise_sigma, "Copy noise sigma (0-255 scale)")->capture_default_str();
  corpus_cmd->add_option("--dropout", corpus_cfg.dropout, "Copy keypoint dropout")->capture_default_str();
  corpus_cmd->add_option("--distractors", corpus_cfg.distractor_rate, "Injected keypoint rate")
      ->capture_default_str();
  corpus_cmd->add_option("--scene-size", corpus_cfg.scene_size, "Base images per scene")->capture_default_str();
  corpus_cmd->add_option("--prototypes", corpus_cfg.prototypes, "Descriptor modes per scene")->capture_default_str();
  corpus_cmd->add_option("--spread", corpus_cfg.prototype_spread, "Keypoint deviation from its mode")
      ->capture_default_str();
  corpus_cmd->add_option("--mode-scale", corpus_cfg.mode_scale, "Mean mode component (0 = uniform bytes)")
      ->capture_default_str();
  corpus_cmd->add_option("--min-keypoints", corpus_cfg.min_keypoints, "Fewest keypoints per base image")
      ->capture_default_str();
  corpus_cmd->add_option("--max-keypoints", corpus_cfg.max_keypoints, "Most keypoints per base image")
      ->capture_default_str();
  corpus_cmd->add_option("--out-db", gc_db, "Database descriptor file")->required();
  corpus_cmd->add_option("--out-queries", gc_queries, "Query descriptor file")->required();
  corpus_cmd->add_option("--out-gt", gc_gt, "Ground-truth file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "bisift: error: " << e.what() << '\n';
    return e.get_exit_code() == 0 ? 2 : e.get_exit_code();
  }

  try {
    if (binarize_cmd->parsed()) {
      require_input(bin_in);
      require_output(bin_out);
      Scheme scheme;
      if (bin_scheme == "bisift") {
        scheme = Scheme::Bisift;
      } else if (bin_scheme == "percell") {
        scheme = Scheme::Percell;
      } else {
        throw InvalidInputError("unknown scheme '" + bin_scheme + "'");
      }
      const DescriptorFile file = read_descriptor_file(bin_in);
      if (file.dtype == Dtype::Binary128) throw InvalidInputError("'" + bin_in.string() + "' is already binary");
      std::vector<DescriptorSet> out;
      out.reserve(file.sets.size());
      for (const auto& set : file.sets) out.push_back(binarize_set(set, scheme));
      save_descriptors(bin_out, out, Dtype::Binary128);
    } else if (train_cmd->parsed()) {
      for (const auto& p : tv_in) require_input(p);
      require_output(tv_out);
      std::vector<DescriptorSet> sets;
      for (const auto& p : tv_in) {
        auto loaded = load_descriptors(p);
        sets.insert(sets.end(), std::make_move_iterator(loaded.begin()), std::make_move_iterator(loaded.end()));
      }
      const auto sample = collect_training_sample(sets);
      save_vocabulary(tv_out, train_kmeans(sample, kmeans));
    } else if (index_cmd->parsed()) {
      for (const auto& p : idx_in) require_input(p);
      require_output(idx_out);
      const auto entries = manifest_for(idx_in, idx_out.parent_path());
      std::vector<std::string> seen;
      for (const auto& e : entries) seen.push_back(e.image_id);
      std::sort(seen.begin(), seen.end());
      if (auto dup = std::adjacent_find(seen.begin(), seen.end()); dup != seen.end()) {
        throw InvalidInputError("duplicate image id '" + *dup + "' across indexed files");
      }
      write_manifest(idx_out, entries);
    } else if (query_cmd->parsed() || rerank_cmd->parsed()) {
      const bool is_query = query_cmd->parsed();
      const RetrievalOptions& o = is_query ? q_opts : r_opts;
      require_input(o.manifest);
      require_input(o.vocab);
      require_input(o.queries);
      if (!is_query) require_input(r_first);
      require_output(o.out);
      const RetrievalConfig config = make_config(o);
      const Index index = load_index(o, config);
      const auto queries = load_descriptors(o.queries);

      std::vector<RankList> results;
      if (is_query) {
        for (const auto& q : queries) {
          results.push_back(first_stage_only ? first_stage_query(q, index) : query(q, index, config));
        }
      } else {
        const auto firsts = read_rank_lists(r_first);
        for (const auto& first : firsts) {
          const auto it = std::find_if(queries.begin(), queries.end(),
                                       [&first](const DescriptorSet& q) { return q.image_id == first.query_id; });
          if (it == queries.end()) {
            throw MismatchError("rank list query '" + first.query_id + "' is missing from the query file");
          }
          results.push_back(rerank_top_x(first, to_representation(*it, config.representation), index, config.top_x,
                                         config.ratio, config.kind, config.workers));
        }
      }
      write_rank_lists(o.out, results);
    } else if (eval_cmd->parsed()) {
      require_input(ev_gt);
      require_input(ev_rl);
      require_output(ev_out);
      if (!ev_table.empty()) require_output(ev_table);
      const auto cutoffs = parse_list(ev_cutoffs);
      for (std::size_t c : cutoffs) {
        if (c == 0) throw InvalidInputError("cutoffs must be at least 1");
      }
      const auto report = evaluate(read_rank_lists(ev_rl), load_ground_truth(ev_gt), cutoffs);
      write_file(ev_out, format_report_tsv(report));
      const std::string table = format_report_table(report);
      if (!ev_table.empty()) write_file(ev_table, table);
      std::cout << table;
    } else if (bench_cmd->parsed()) {
      require_output(bench_out);
      if (!bench_gain.empty()) require_output(bench_gain);
      bench.db_sizes = parse_list(bench_sizes);
      bench.kinds.clear();
      std::size_t start = 0;
      while (start <= bench_kinds.size()) {
        const std::size_t comma = std::min(bench_kinds.find(',', start), bench_kinds.size());
        const std::string name = bench_kinds.substr(start, comma - start);
        const auto kind = parse_distance_kind(name);
        if (!kind) throw InvalidInputError("unknown distance kind '" + name + "'");
        bench.kinds.push_back(*kind);
        start = comma + 1;
      }
      const TimingReport report = run_timing(bench);
      if (!report.hamming_audit_passed || !report.l2_audit_passed) {
        throw Error("correctness audit failed: kernels disagreed on a nearest neighbour");
      }
      write_file(bench_out, format_timing_tsv(report));
      if (!bench_gain.empty()) write_file(bench_gain, format_gain_tsv(report));
    } else if (synth_cmd->parsed()) {
      require_output(fs::path(gs_prefix + ".float.bsft"));
      const SynthData data = gen_synth_descriptors(gs_n, gs_seed);
      const std::vector<DescriptorSet> floats{DescriptorSet{"synth", data.floats}};
      const std::vector<DescriptorSet> ints{DescriptorSet{"synth", data.ints}};
      const std::vector<DescriptorSet> bins{DescriptorSet{"synth", data.fingerprints}};
      save_descriptors(gs_prefix + ".float.bsft", floats);
      save_descriptors(gs_prefix + ".uint8.bsft", ints);
      save_descriptors(gs_prefix + ".binary.bsft", bins);
    } else if (corpus_cmd->parsed()) {
      require_output(gc_db);
      require_output(gc_queries);
      require_output(gc_gt);
      const PlantedCorpus corpus = gen_planted_corpus(corpus_cfg);
      save_descriptors(gc_db, corpus.database, Dtype::Uint8);
      save_descriptors(gc_queries, corpus.queries, Dtype::Uint8);
      save_ground_truth(gc_gt, corpus.truth);
    }
  } catch (const std::exception& e) {
    std::cerr << "bisift: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

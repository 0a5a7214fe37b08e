#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "tagcf/attributes.hpp"
#include "tagcf/chat_client.hpp"
#include "tagcf/checkpoint.hpp"
#include "tagcf/clock.hpp"
#include "tagcf/config.hpp"
#include "tagcf/dataset.hpp"
#include "tagcf/equivalence.hpp"
#include "tagcf/error.hpp"
#include "tagcf/experiments.hpp"
#include "tagcf/extraction.hpp"
#include "tagcf/graph.hpp"
#include "tagcf/manifest.hpp"
#include "tagcf/metrics.hpp"
#include "tagcf/model.hpp"
#include "tagcf/paths.hpp"
#include "tagcf/synthetic.hpp"
#include "tagcf/training.hpp"

namespace {

namespace fs = std::filesystem;

struct GlobalArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_root = "runs";
  unsigned threads = 1;
};

tagcf::AppConfig load_config(const GlobalArgs& g) {
  tagcf::AppConfig cfg;
  if (!g.config_path.empty()) cfg = tagcf::load_app_config(g.config_path);
  cfg.validate();
  if (g.seed.has_value()) {
    cfg.train.seed = *g.seed;
    cfg.synthetic.seed = *g.seed;
    cfg.experiment.seeds = {*g.seed};
  }
  return cfg;
}

// Run directory, lock, and manifest for one invocation. The manifest lands
// on disk whether the body succeeds or throws.
class RunContext {
 public:
  RunContext(const GlobalArgs& g, const tagcf::AppConfig& cfg, std::string command)
      : dir_(tagcf::allocate_run_dir(g.out_root)), lock_(dir_) {
    manifest_.command = std::move(command);
    manifest_.threads = g.threads;
    manifest_.seed = cfg.train.seed;
    manifest_.config_snapshot = tagcf::render_app_config(cfg);
    if (!g.config_path.empty()) manifest_.add_input("config", g.config_path);
    std::printf("run directory: %s\n", dir_.string().c_str());
  }

  const fs::path& dir() const { return dir_; }
  tagcf::RunManifest& manifest() { return manifest_; }

  void add_input(const std::string& path) { manifest_.add_input(path, path); }
  void add_output(const std::string& name) { manifest_.add_output(name, dir_ / name); }

  int run(const std::function<void()>& body) {
    try {
      body();
      manifest_.status = "ok";
      write_manifest();
      return 0;
    } catch (const std::exception& e) {
      manifest_.status = "error";
      manifest_.error = e.what();
      write_manifest();
      std::fprintf(stderr, "error: %s\n", e.what());
      return 1;
    }
  }

 private:
  void write_manifest() {
    manifest_.finished_at = tagcf::iso8601_utc_now();
    manifest_.write(dir_ / "manifest.json");
  }

  fs::path dir_;
  tagcf::DirLock lock_;
  tagcf::RunManifest manifest_;
};

// Inputs shared by the modeling subcommands, either re-derived from raw
// files or loaded from a previous `build` run directory.
struct DataArgs {
  std::string build_dir;
  std::string interactions;
  std::string attributes;
  std::string split;
  std::uint32_t kcore = 0;
  bool kcore_set = false;
  bool no_ff = false;
  std::string oracle = "jaccard";
  std::string nli_url;
};

void add_data_flags(CLI::App* cmd, DataArgs& d, bool with_build_dir) {
  if (with_build_dir)
    cmd->add_option("--build-dir", d.build_dir, "run directory of a previous build");
  cmd->add_option("--interactions", d.interactions, "interaction TSV (user, item[, ts])");
  cmd->add_option("--attributes", d.attributes, "extracted attribute JSONL");
  cmd->add_option("--split", d.split, "split manifest TSV; derived from the seed if absent");
  cmd->add_option("--kcore", d.kcore, "k-core filter threshold (0 = off)")
      ->check(CLI::NonNegativeNumber)
      ->each([&d](const std::string&) { d.kcore_set = true; });
  cmd->add_flag("--no-ff", d.no_ff, "skip attribute filtering and fusion");
  cmd->add_option("--oracle", d.oracle, "equivalence oracle: jaccard, exact, or nli")
      ->check(CLI::IsMember({"jaccard", "exact", "nli"}));
  cmd->add_option("--nli-url", d.nli_url, "entailment service base URL for --oracle nli");
}

std::unique_ptr<tagcf::EquivalenceOracle> make_oracle(const DataArgs& d,
                                                      const tagcf::AppConfig& cfg) {
  if (d.oracle == "exact") return std::make_unique<tagcf::ExactMatchOracle>();
  if (d.oracle == "nli") {
    tagcf::NliOracleConfig nli;
    if (!d.nli_url.empty()) nli.base_url = d.nli_url;
    return std::make_unique<tagcf::RemoteNliOracle>(nli);
  }
  return std::make_unique<tagcf::TokenJaccardOracle>(cfg.pipeline.jaccard_threshold);
}

struct DataBundle {
  tagcf::InteractionDataset ds;
  tagcf::SplitDataset split;
  std::vector<tagcf::AttrEdge> ua;
  std::vector<tagcf::AttrEdge> ia;
  std::uint32_t n_attrs = 0;
  std::vector<std::string> attr_labels;  // vocabulary id -> canonical string
  std::vector<tagcf::RawAttributeRecord> records;      // raw mode only
  std::optional<tagcf::PipelineResult> pipeline;       // raw mode, with attributes
  bool has_attributes = false;
};

DataBundle load_bundle(const DataArgs& d, const tagcf::AppConfig& cfg) {
  DataBundle b;
  if (!d.build_dir.empty()) {
    if (!d.interactions.empty() || !d.attributes.empty() || !d.split.empty())
      throw tagcf::ConfigError("--build-dir replaces --interactions/--attributes/--split");
    const fs::path dir = d.build_dir;
    b.ds = tagcf::load_interactions(dir / "interactions.tsv");
    b.split = tagcf::load_split_manifest(dir / "split.tsv", b.ds);
    if (fs::exists(dir / "vocabulary.tsv")) {
      b.attr_labels = tagcf::load_vocabulary_labels(dir / "vocabulary.tsv");
      b.n_attrs = static_cast<std::uint32_t>(b.attr_labels.size());
      b.ua = tagcf::load_edges_tsv(dir / "ua_edges.tsv", b.ds.user_index);
      b.ia = tagcf::load_edges_tsv(dir / "ia_edges.tsv", b.ds.item_index);
      b.has_attributes = true;
    }
    return b;
  }

  if (d.interactions.empty())
    throw tagcf::ConfigError("either --build-dir or --interactions is required");
  b.ds = tagcf::load_interactions(d.interactions);
  const std::uint32_t kcore = d.kcore_set ? d.kcore : cfg.kcore;
  if (kcore > 0) b.ds = tagcf::kcore_filter(b.ds, kcore);
  b.split = d.split.empty() ? tagcf::split_dataset(b.ds, cfg.train.seed)
                            : tagcf::load_split_manifest(d.split, b.ds);

  if (!d.attributes.empty()) {
    auto file = tagcf::load_attribute_records(d.attributes, b.ds);
    if (file.skipped_unknown_ids > 0)
      std::printf("attributes: skipped %llu records with unknown ids\n",
                  static_cast<unsigned long long>(file.skipped_unknown_ids));
    // Held-out interactions must not contribute attribute edges.
    b.records = tagcf::restrict_records(file.records, b.split.train);
    tagcf::PipelineConfig pcfg = cfg.pipeline;
    pcfg.no_ff = pcfg.no_ff || d.no_ff;
    const auto oracle = make_oracle(d, cfg);
    b.pipeline = tagcf::run_attribute_pipeline(b.records, pcfg, oracle.get());
    b.ua = b.pipeline->edges.ua;
    b.ia = b.pipeline->edges.ia;
    b.n_attrs = b.pipeline->vocab.size();
    b.attr_labels.resize(b.n_attrs);
    for (std::uint32_t id = 0; id < b.n_attrs; ++id)
      b.attr_labels[id] = b.pipeline->vocab.attrs[b.pipeline->fusion.rep(id)];
    b.has_attributes = true;
  }
  return b;
}

tagcf::TripartiteGraph build_graph(const DataBundle& b) {
  return tagcf::build_tripartite(b.ds.n_users(), b.ds.n_items(), b.n_attrs,
                                 b.split.train, b.ua, b.ia);
}

// Persist everything eval/analyze need so the run directory doubles as a
// build directory.
void write_build_artifacts(RunContext& ctx, const DataBundle& b) {
  tagcf::write_interactions(ctx.dir() / "interactions.tsv", b.ds);
  ctx.add_output("interactions.tsv");
  tagcf::write_split_manifest(ctx.dir() / "split.tsv", b.ds, b.split);
  ctx.add_output("split.tsv");
  if (b.pipeline.has_value()) {
    tagcf::write_vocabulary_tsv(ctx.dir() / "vocabulary.tsv", b.pipeline->vocab,
                                b.pipeline->fusion);
    ctx.add_output("vocabulary.tsv");
    tagcf::write_edges_tsv(ctx.dir() / "ua_edges.tsv", b.ua, b.ds.user_ids);
    ctx.add_output("ua_edges.tsv");
    tagcf::write_edges_tsv(ctx.dir() / "ia_edges.tsv", b.ia, b.ds.item_ids);
    ctx.add_output("ia_edges.tsv");
  }
}

void write_graph_summary(RunContext& ctx, const DataBundle& b,
                         const tagcf::TripartiteGraph& g,
                         std::uint64_t skipped_unknown_ids) {
  nlohmann::json j;
  j["n_users"] = g.n_users;
  j["n_items"] = g.n_items;
  j["n_attrs_vocabulary"] = b.n_attrs;
  j["n_attrs_graph"] = g.n_attrs;
  j["n_interactions_train"] = b.split.train.size();
  j["n_interactions_val"] = b.split.val.size();
  j["n_interactions_test"] = b.split.test.size();
  j["edges_uai"] = g.relation(tagcf::Relation::UAI).nnz() / 2;
  j["edges_ua"] = g.relation(tagcf::Relation::UA).nnz() / 2;
  j["edges_ia"] = g.relation(tagcf::Relation::IA).nnz() / 2;
  j["skipped_unknown_ids"] = skipped_unknown_ids;
  std::ofstream out(ctx.dir() / "graph_summary.json");
  if (!out) throw tagcf::IoError("cannot write graph_summary.json");
  out << j.dump(2) << "\n";
  ctx.add_output("graph_summary.json");
}

void add_record_inputs(RunContext& ctx, const DataArgs& d) {
  if (!d.build_dir.empty()) {
    const fs::path dir = d.build_dir;
    ctx.manifest().add_input("interactions", dir / "interactions.tsv");
    ctx.manifest().add_input("split", dir / "split.tsv");
    if (fs::exists(dir / "vocabulary.tsv")) {
      ctx.manifest().add_input("vocabulary", dir / "vocabulary.tsv");
      ctx.manifest().add_input("ua_edges", dir / "ua_edges.tsv");
      ctx.manifest().add_input("ia_edges", dir / "ia_edges.tsv");
    }
    return;
  }
  if (!d.interactions.empty()) ctx.add_input(d.interactions);
  if (!d.attributes.empty()) ctx.add_input(d.attributes);
  if (!d.split.empty()) ctx.add_input(d.split);
}

tagcf::MetricFn threaded_validation_metric(const tagcf::TripartiteGraph& g,
                                           const tagcf::SplitDataset& split,
                                           const std::string& metric_name,
                                           unsigned threads) {
  const tagcf::MetricSpec spec = tagcf::MetricSpec::parse(metric_name);
  return [&g, &split, spec, threads](const tagcf::Model& m) {
    tagcf::EvalOptions opt;
    opt.k_set = {spec.k};
    opt.n_threads = threads;
    opt.keep_per_user = false;
    const auto report =
        tagcf::full_rank_evaluate(m, g, split, tagcf::EvalSplit::Validation, opt);
    return spec.kind == tagcf::MetricSpec::Kind::Recall ? report.recall.at(spec.k)
                                                        : report.ndcg.at(spec.k);
  };
}

int cmd_gen_synthetic(const GlobalArgs& g) {
  const tagcf::AppConfig cfg = load_config(g);
  RunContext ctx(g, cfg, "gen-synthetic");
  ctx.manifest().seed = cfg.synthetic.seed;
  return ctx.run([&] {
    const tagcf::SyntheticData data = tagcf::generate_synthetic(cfg.synthetic);
    tagcf::write_synthetic_files(data, ctx.dir());
    for (const char* name :
         {"interactions.tsv", "split.tsv", "topics.tsv", "reviews.jsonl", "items.jsonl"})
      ctx.add_output(name);
    std::printf("generated %u users, %u items, %zu interactions, %u topics\n",
                data.dataset.n_users(), data.dataset.n_items(),
                data.dataset.interactions.size(), cfg.synthetic.n_topics);
  });
}

struct ExtractArgs {
  std::string interactions;
  std::string reviews;
  std::string template_path;
  bool mock = false;
};

int cmd_extract(const GlobalArgs& g, const ExtractArgs& a) {
  const tagcf::AppConfig cfg = load_config(g);
  RunContext ctx(g, cfg, "extract");
  return ctx.run([&] {
    ctx.add_input(a.interactions);
    ctx.add_input(a.reviews);
    const tagcf::InteractionDataset ds = tagcf::load_interactions(a.interactions);
    auto requests = tagcf::load_extraction_requests(a.reviews, ds);
    if (requests.skipped_unknown_ids > 0)
      std::printf("reviews: skipped %llu rows with unknown ids\n",
                  static_cast<unsigned long long>(requests.skipped_unknown_ids));

    const fs::path log_path = ctx.dir() / "extraction_log.jsonl";
    tagcf::CorpusExtractionResult result;
    if (a.mock) {
      result = tagcf::extract_corpus_mock(requests.requests, cfg.train.seed, log_path);
    } else {
      tagcf::PromptTemplate tmpl = a.template_path.empty()
                                       ? tagcf::PromptTemplate::default_template()
                                       : tagcf::PromptTemplate::from_json_file(a.template_path);
      if (!a.template_path.empty()) ctx.add_input(a.template_path);
      result = tagcf::extract_corpus(cfg.client, tmpl, requests.requests, log_path);
    }
    tagcf::write_attribute_records(ctx.dir() / "attributes.jsonl", result.records, ds);
    ctx.add_output("attributes.jsonl");
    ctx.add_output("extraction_log.jsonl");

    const auto& led = result.ledger;
    std::printf("extraction: %llu inputs, %llu ok, %llu parse failures, "
                "%llu transport failures, %llu requests, %llu prompt tokens, "
                "%llu completion tokens\n",
                static_cast<unsigned long long>(led.inputs),
                static_cast<unsigned long long>(led.successes),
                static_cast<unsigned long long>(led.parse_failures),
                static_cast<unsigned long long>(led.transport_failures),
                static_cast<unsigned long long>(led.requests_sent),
                static_cast<unsigned long long>(led.prompt_tokens),
                static_cast<unsigned long long>(led.completion_tokens));
  });
}

int cmd_build(const GlobalArgs& g, const DataArgs& d) {
  const tagcf::AppConfig cfg = load_config(g);
  RunContext ctx(g, cfg, "build");
  return ctx.run([&] {
    if (d.interactions.empty())
      throw tagcf::ConfigError("build requires --interactions");
    add_record_inputs(ctx, d);
    DataBundle b = load_bundle(d, cfg);
    const tagcf::TripartiteGraph graph = build_graph(b);
    write_build_artifacts(ctx, b);
    std::uint64_t skipped = 0;
    if (!d.attributes.empty()) {
      // Re-derive the skip count for the summary; load_bundle already
      // reported it to stdout.
      skipped = tagcf::load_attribute_records(d.attributes, b.ds).skipped_unknown_ids;
    }
    write_graph_summary(ctx, b, graph, skipped);
    std::printf("graph: %u users, %u items, %u attribute nodes, %llu train edges\n",
                graph.n_users, graph.n_items, graph.n_attrs,
                static_cast<unsigned long long>(graph.ui.nnz()));
  });
}

struct TrainArgs {
  DataArgs data;
  bool no_argc = false;
};

int cmd_train(const GlobalArgs& g, const TrainArgs& a) {
  const tagcf::AppConfig cfg = load_config(g);
  RunContext ctx(g, cfg, "train");
  return ctx.run([&] {
    add_record_inputs(ctx, a.data);
    DataBundle b = load_bundle(a.data, cfg);
    const tagcf::TripartiteGraph graph = build_graph(b);

    tagcf::ModelConfig mcfg = cfg.model;
    if (a.no_argc) mcfg.ablation = tagcf::Ablation::NoArgc;
    else if (a.data.no_ff || cfg.pipeline.no_ff) mcfg.ablation = tagcf::Ablation::NoFf;

    const tagcf::MetricFn metric =
        threaded_validation_metric(graph, b.split, cfg.train.eval_metric, g.threads);
    const tagcf::TrainResult result = tagcf::train(graph, b.split, mcfg, cfg.train, metric);

    tagcf::save_checkpoint(ctx.dir() / "model.ckpt", result.best);
    ctx.add_output("model.ckpt");
    tagcf::write_training_log(ctx.dir() / "training_log.csv", result.log);
    ctx.add_output("training_log.csv");
    if (a.data.build_dir.empty()) write_build_artifacts(ctx, b);

    std::printf("training: %s\n", result.stop_reason.c_str());
    std::printf("best %s = %.6f at epoch %u%s\n", cfg.train.eval_metric.c_str(),
                result.best_metric, result.best_epoch,
                result.diverged ? " (diverged afterwards)" : "");
  });
}

struct EvalArgs {
  DataArgs data;
  std::string checkpoint;
  std::string split_name = "test";
};

int cmd_eval(const GlobalArgs& g, const EvalArgs& a) {
  const tagcf::AppConfig cfg = load_config(g);
  RunContext ctx(g, cfg, "eval");
  return ctx.run([&] {
    ctx.add_input(a.checkpoint);
    add_record_inputs(ctx, a.data);
    DataBundle b = load_bundle(a.data, cfg);
    const tagcf::TripartiteGraph graph = build_graph(b);
    const tagcf::Model model = tagcf::load_checkpoint(a.checkpoint);
    if (model.emb.users.rows != graph.n_users || model.emb.items.rows != graph.n_items ||
        model.emb.attrs.rows != graph.n_attrs)
      throw tagcf::ConfigError(
          "checkpoint shape (" + std::to_string(model.emb.users.rows) + " users, " +
          std::to_string(model.emb.items.rows) + " items, " +
          std::to_string(model.emb.attrs.rows) + " attrs) does not match the graph (" +
          std::to_string(graph.n_users) + ", " + std::to_string(graph.n_items) + ", " +
          std::to_string(graph.n_attrs) + ")");

    tagcf::EvalOptions opt;
    opt.k_set = cfg.eval_k;
    opt.n_threads = g.threads;
    opt.keep_per_user = false;
    const auto split_kind =
        a.split_name == "val" ? tagcf::EvalSplit::Validation : tagcf::EvalSplit::Test;
    const tagcf::MetricReport report =
        tagcf::full_rank_evaluate(model, graph, b.split, split_kind, opt);
    tagcf::write_metrics_csv(ctx.dir() / "metrics.csv", report);
    ctx.add_output("metrics.csv");
    for (const auto& [k, v] : report.recall) std::printf("recall@%u = %.6f\n", k, v);
    for (const auto& [k, v] : report.ndcg) std::printf("ndcg@%u = %.6f\n", k, v);
    std::printf("evaluated %u users on the %s split\n", report.n_users,
                a.split_name.c_str());
  });
}

int cmd_analyze_paths(const GlobalArgs& g, const DataArgs& d) {
  const tagcf::AppConfig cfg = load_config(g);
  RunContext ctx(g, cfg, "analyze-paths");
  return ctx.run([&] {
    add_record_inputs(ctx, d);
    DataBundle b = load_bundle(d, cfg);
    const tagcf::TripartiteGraph graph = build_graph(b);
    const tagcf::PathStats stats = tagcf::path_overlap_analysis(graph, b.split.test);
    tagcf::write_path_stats_csv(ctx.dir() / "path_stats.csv", stats);
    ctx.add_output("path_stats.csv");

    const auto examples = tagcf::sample_paths(graph, b.split.test, 50);
    std::ofstream out(ctx.dir() / "sample_paths.txt");
    if (!out) throw tagcf::IoError("cannot write sample_paths.txt");
    for (const auto& ex : examples) {
      const std::uint32_t vocab_id = graph.attr_ids[ex.attr];
      const std::string label = vocab_id < b.attr_labels.size()
                                    ? b.attr_labels[vocab_id]
                                    : std::to_string(vocab_id);
      out << b.ds.user_ids[ex.user] << " --[" << label << "]--> "
          << b.ds.item_ids[ex.item] << (ex.in_test ? "  (test interaction)" : "") << "\n";
    }
    ctx.add_output("sample_paths.txt");

    std::printf("paths: %llu total, %llu connected pairs, overlap %.4f (alt %.6g)\n",
                static_cast<unsigned long long>(stats.total_2hop_paths),
                static_cast<unsigned long long>(stats.connected_pairs),
                stats.overlap_ratio, stats.overlap_ratio_alt);
  });
}

struct SweepArgs {
  DataArgs data;
  std::string kind;
  std::string grid;
  std::string items;  // metadata JSONL for cold-start attribute edges
};

std::vector<double> parse_double_grid(const std::string& text) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    const std::string tok =
        text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    if (tok.empty()) throw tagcf::ConfigError("empty entry in --grid");
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw tagcf::ConfigError("cannot parse --grid entry '" + tok + "'");
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

int cmd_sweep(const GlobalArgs& g, const SweepArgs& a) {
  const tagcf::AppConfig cfg = load_config(g);
  RunContext ctx(g, cfg, "sweep");
  return ctx.run([&] {
    if (!a.data.build_dir.empty())
      throw tagcf::ConfigError("sweep re-runs the pipeline per point; give raw inputs, "
                               "not --build-dir");
    add_record_inputs(ctx, a.data);
    DataBundle b = load_bundle(a.data, cfg);
    if (!b.has_attributes)
      throw tagcf::ConfigError("sweep requires --attributes to build the tagcf model");

    tagcf::SweepInputs in;
    in.n_users = b.ds.n_users();
    in.n_items = b.ds.n_items();
    in.split = &b.split;
    in.records = b.records;
    in.pipeline = cfg.pipeline;
    in.pipeline.no_ff = in.pipeline.no_ff || a.data.no_ff;
    in.model = cfg.model;
    in.train = cfg.train;
    const auto oracle = make_oracle(a.data, cfg);
    in.oracle = oracle.get();

    std::vector<tagcf::SweepRow> rows;
    if (a.kind == "sparsity") {
      const std::vector<double> grid =
          a.grid.empty() ? cfg.experiment.s_grid : parse_double_grid(a.grid);
      rows = tagcf::sparsity_sweep(in, grid, cfg.experiment.seeds);
    } else if (a.kind == "cold") {
      if (a.items.empty()) throw tagcf::ConfigError("--kind cold requires --items");
      ctx.add_input(a.items);
      const auto metadata = tagcf::load_item_metadata(a.items, b.ds);
      const std::uint64_t seed = cfg.train.seed;
      const auto& ds = b.ds;
      const tagcf::MetadataAttrFn cold_attrs = [&metadata, &ds,
                                                seed](std::uint32_t item) {
        tagcf::ExtractionRequest req;
        req.item = item;
        req.item_id = ds.item_ids[item];
        req.metadata = metadata[item];
        return tagcf::mock_extract(req, seed);
      };
      const std::vector<double> grid =
          a.grid.empty() ? cfg.experiment.c_grid : parse_double_grid(a.grid);
      rows = tagcf::cold_start_sweep(in, grid, cfg.experiment.seeds, cold_attrs);
    } else if (a.kind == "layers") {
      std::vector<std::uint32_t> grid = cfg.experiment.layer_grid;
      if (!a.grid.empty()) {
        grid.clear();
        for (const double v : parse_double_grid(a.grid)) {
          if (v < 1 || v > 8 || v != static_cast<std::uint32_t>(v))
            throw tagcf::ConfigError("layer grid entries must be integers in [1, 8]");
          grid.push_back(static_cast<std::uint32_t>(v));
        }
      }
      rows = tagcf::layer_sweep(in, grid, cfg.experiment.seeds);
      const auto summary = tagcf::summarize_layer_sweep(rows);
      tagcf::write_layer_improvement_csv(ctx.dir() / "layer_improvement.csv", summary);
      ctx.add_output("layer_improvement.csv");
    } else {
      throw tagcf::ConfigError("--kind must be sparsity, cold, or layers");
    }

    tagcf::write_sweep_csv(ctx.dir() / "sweep.csv", rows);
    ctx.add_output("sweep.csv");
    std::printf("sweep: %zu result rows\n", rows.size());
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tripartite user-attribute-item graph collaborative filtering"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalArgs g;
  app.add_option("--config", g.config_path, "TOML configuration file");
  std::uint64_t seed_value = 0;
  auto* seed_opt = app.add_option("--seed", seed_value, "override every configured seed");
  app.add_option("--out", g.out_root, "root directory for run outputs");
  app.add_option("--threads", g.threads, "worker threads for evaluation")
      ->check(CLI::PositiveNumber);

  auto* gen = app.add_subcommand("gen-synthetic", "generate the planted-topic dataset");

  ExtractArgs extract_args;
  auto* extract = app.add_subcommand("extract", "extract attributes from reviews");
  extract->add_option("--interactions", extract_args.interactions)->required();
  extract->add_option("--reviews", extract_args.reviews)->required();
  extract->add_option("--template", extract_args.template_path, "prompt template JSON");
  extract->add_flag("--mock", extract_args.mock, "deterministic offline extractor");

  DataArgs build_args;
  auto* build = app.add_subcommand("build", "build vocabulary, edges, and graph artifacts");
  add_data_flags(build, build_args, false);

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "train a model");
  add_data_flags(train, train_args.data, true);
  train->add_flag("--no-argc", train_args.no_argc, "ablate relation gating");

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  add_data_flags(eval, eval_args.data, true);
  eval->add_option("--checkpoint", eval_args.checkpoint)->required();
  eval->add_option("--split-name", eval_args.split_name, "val or test")
      ->check(CLI::IsMember({"val", "test"}));

  DataArgs analyze_args;
  auto* analyze = app.add_subcommand("analyze-paths", "2-hop path statistics");
  add_data_flags(analyze, analyze_args, true);

  SweepArgs sweep_args;
  auto* sweep = app.add_subcommand("sweep", "sparsity / cold-start / layer sweeps");
  add_data_flags(sweep, sweep_args.data, false);
  sweep->add_option("--kind", sweep_args.kind)->required();
  sweep->add_option("--grid", sweep_args.grid, "comma-separated sweep values");
  sweep->add_option("--items", sweep_args.items, "item metadata JSONL (cold sweep)");

  CLI11_PARSE(app, argc, argv);
  if (seed_opt->count() > 0) g.seed = seed_value;

  try {
    if (gen->parsed()) return cmd_gen_synthetic(g);
    if (extract->parsed()) return cmd_extract(g, extract_args);
    if (build->parsed()) return cmd_build(g, build_args);
    if (train->parsed()) return cmd_train(g, train_args);
    if (eval->parsed()) return cmd_eval(g, eval_args);
    if (analyze->parsed()) return cmd_analyze_paths(g, analyze_args);
    if (sweep->parsed()) return cmd_sweep(g, sweep_args);
  } catch (const std::exception& e) {
    // Errors before a run directory exists (config parsing, allocation).
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}

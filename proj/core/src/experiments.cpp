#include "tagcf/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <unordered_set>

#include "tagcf/error.hpp"
#include "tagcf/rng.hpp"

namespace tagcf {

void PipelineConfig::validate() const {
  if (tau_min < 1) throw ConfigError("tau_min must be >= 1");
  if (tau_min > tau_max) throw ConfigError("tau_min must not exceed tau_max");
  if (!(jaccard_threshold >= 0.0 && jaccard_threshold <= 1.0))
    throw ConfigError("jaccard_threshold must lie in [0, 1]");
}

PipelineResult run_attribute_pipeline(std::span<const RawAttributeRecord> records,
                                      const PipelineConfig& cfg,
                                      const EquivalenceOracle* oracle) {
  cfg.validate();
  const auto counts = count_frequencies(records);
  PipelineResult out;
  if (cfg.no_ff) {
    out.vocab = frequency_filter(counts, 1, std::numeric_limits<std::uint32_t>::max());
    out.fusion = FusionClusterMap::identity(out.vocab.size());
  } else {
    out.vocab = frequency_filter(counts, cfg.tau_min, cfg.tau_max);
    const TokenJaccardOracle fallback(cfg.jaccard_threshold);
    out.fusion = greedy_semantic_fusion(out.vocab, oracle != nullptr ? *oracle : fallback);
  }
  out.edges = reassign_edges(records, out.vocab, out.fusion);
  return out;
}

void ExperimentConfig::validate() const {
  for (const double s : s_grid)
    if (!(s > 0.0 && s <= 1.0)) throw ConfigError("sparsity ratios must lie in (0, 1]");
  for (const double c : c_grid)
    if (!(c > 0.0 && c <= 1.0)) throw ConfigError("cold-start ratios must lie in (0, 1]");
  if (layer_grid.empty()) throw ConfigError("layer_grid must be non-empty");
  for (const std::uint32_t k : layer_grid)
    if (k < 1 || k > 8) throw ConfigError("layer_grid values must lie in [1, 8]");
  if (seeds.empty()) throw ConfigError("seeds must be non-empty");
}

SplitDataset sparsify_train(const SplitDataset& split, double s, std::uint64_t seed) {
  if (!(s > 0.0 && s <= 1.0)) throw ConfigError("sparsity ratio must lie in (0, 1]");
  const std::size_t keep =
      static_cast<std::size_t>(s * static_cast<double>(split.train.size()));
  std::vector<std::uint32_t> idx(split.train.size());
  std::iota(idx.begin(), idx.end(), 0u);
  Rng rng = Rng(seed).child(0x5350415253454C45ULL);
  rng.shuffle(idx);
  idx.resize(keep);
  std::sort(idx.begin(), idx.end());

  SplitDataset out = split;
  out.train.clear();
  out.train.reserve(keep);
  for (const std::uint32_t i : idx) out.train.push_back(split.train[i]);
  return out;
}

std::vector<bool> sample_cold_items(std::uint32_t n_items, double c, std::uint64_t seed) {
  if (!(c > 0.0 && c <= 1.0)) throw ConfigError("cold-start ratio must lie in (0, 1]");
  const std::size_t n_cold = static_cast<std::size_t>(c * static_cast<double>(n_items));
  std::vector<std::uint32_t> idx(n_items);
  std::iota(idx.begin(), idx.end(), 0u);
  Rng rng = Rng(seed).child(0x434F4C444954454DULL);
  rng.shuffle(idx);
  std::vector<bool> cold(n_items, false);
  for (std::size_t t = 0; t < n_cold; ++t) cold[idx[t]] = true;
  return cold;
}

SplitDataset remove_cold_train(const SplitDataset& split, const std::vector<bool>& cold) {
  SplitDataset out = split;
  out.train.clear();
  for (const auto& it : split.train) {
    if (it.item >= cold.size())
      throw StructureError("train interaction references an item outside the cold mask");
    if (!cold[it.item]) out.train.push_back(it);
  }
  return out;
}

namespace {

std::uint64_t pair_key(std::uint32_t user, std::uint32_t item) {
  return (static_cast<std::uint64_t>(user) << 32) | item;
}

SweepRow make_row(std::string sweep_param, std::uint64_t seed, std::string model,
                  const MetricReport& report) {
  SweepRow row;
  row.sweep_param = std::move(sweep_param);
  row.seed = seed;
  row.model = std::move(model);
  row.recall20 = report.recall.at(20);
  row.ndcg20 = report.ndcg.at(20);
  return row;
}

// One tagcf + baseline pair on the same split. The baseline is the same
// propagation engine with no attribute nodes and the gates ablated away,
// i.e. plain user-item graph convolution.
void run_pair(const SweepInputs& in, const SplitDataset& split,
              const PipelineResult& pipeline, std::span<const AttrEdge> extra_ia,
              const std::string& sweep_param, std::uint64_t seed,
              const std::vector<bool>* item_filter, std::vector<SweepRow>& rows) {
  TrainConfig tcfg = in.train;
  tcfg.seed = seed;

  std::vector<AttrEdge> ia = pipeline.edges.ia;
  ia.insert(ia.end(), extra_ia.begin(), extra_ia.end());
  const TripartiteGraph tagcf_graph =
      build_tripartite(in.n_users, in.n_items, pipeline.vocab.size(), split.train,
                       pipeline.edges.ua, ia);
  const auto tagcf_out =
      train_and_evaluate(tagcf_graph, split, in.model, tcfg, {20}, item_filter);
  rows.push_back(make_row(sweep_param, seed, "tagcf", tagcf_out.test_report));

  ModelConfig base_cfg = in.model;
  base_cfg.ablation = Ablation::NoArgc;
  const TripartiteGraph base_graph =
      build_tripartite(in.n_users, in.n_items, 0, split.train, {}, {});
  const auto base_out =
      train_and_evaluate(base_graph, split, base_cfg, tcfg, {20}, item_filter);
  rows.push_back(make_row(sweep_param, seed, "baseline", base_out.test_report));
}

void check_inputs(const SweepInputs& in) {
  if (in.split == nullptr) throw ConfigError("sweep inputs need a split dataset");
  if (in.n_users == 0 || in.n_items == 0)
    throw ConfigError("sweep inputs need positive user and item counts");
  in.pipeline.validate();
  in.model.validate();
  in.train.validate();
}

std::string format_ratio(const char* name, double value) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%s=%.10g", name, value);
  return buf;
}

}  // namespace

std::vector<RawAttributeRecord> restrict_records(std::span<const RawAttributeRecord> records,
                                                 std::span<const Interaction> train) {
  std::unordered_set<std::uint64_t> keep;
  keep.reserve(train.size() * 2);
  for (const auto& [u, i] : train) keep.insert(pair_key(u, i));
  std::vector<RawAttributeRecord> out;
  for (const auto& rec : records)
    if (keep.count(pair_key(rec.user, rec.item)) > 0) out.push_back(rec);
  return out;
}

std::vector<SweepRow> sparsity_sweep(const SweepInputs& in, std::span<const double> s_grid,
                                     std::span<const std::uint64_t> seeds) {
  check_inputs(in);
  std::vector<SweepRow> rows;
  for (const double s : s_grid)
    for (const std::uint64_t seed : seeds) {
      const SplitDataset pruned = sparsify_train(*in.split, s, seed);
      const auto records = restrict_records(in.records, pruned.train);
      const PipelineResult pipeline =
          run_attribute_pipeline(records, in.pipeline, in.oracle);
      run_pair(in, pruned, pipeline, {}, format_ratio("s", s), seed, nullptr, rows);
    }
  return rows;
}

std::vector<SweepRow> cold_start_sweep(const SweepInputs& in, std::span<const double> c_grid,
                                       std::span<const std::uint64_t> seeds,
                                       const MetadataAttrFn& cold_attrs) {
  check_inputs(in);
  if (!cold_attrs) throw ConfigError("cold-start sweep needs a metadata attribute source");
  std::vector<SweepRow> rows;
  for (const double c : c_grid)
    for (const std::uint64_t seed : seeds) {
      const std::vector<bool> cold = sample_cold_items(in.n_items, c, seed);
      const SplitDataset pruned = remove_cold_train(*in.split, cold);
      const auto records = restrict_records(in.records, pruned.train);
      const PipelineResult pipeline =
          run_attribute_pipeline(records, in.pipeline, in.oracle);

      // Cold items connect to the graph only through vocabulary attributes
      // found in their metadata; unknown attributes have no trained node.
      std::vector<AttrEdge> extra_ia;
      for (std::uint32_t i = 0; i < in.n_items; ++i) {
        if (!cold[i]) continue;
        for (const std::string& raw : cold_attrs(i)) {
          const auto id = pipeline.vocab.find(normalize_attribute(raw));
          if (id.has_value()) extra_ia.push_back({i, pipeline.fusion.rep(*id)});
        }
      }
      run_pair(in, pruned, pipeline, extra_ia, format_ratio("c", c), seed, &cold, rows);
    }
  return rows;
}

std::vector<SweepRow> layer_sweep(const SweepInputs& in,
                                  std::span<const std::uint32_t> layer_grid,
                                  std::span<const std::uint64_t> seeds) {
  check_inputs(in);
  const auto records = restrict_records(in.records, in.split->train);
  const PipelineResult pipeline = run_attribute_pipeline(records, in.pipeline, in.oracle);
  std::vector<SweepRow> rows;
  for (const std::uint32_t k : layer_grid)
    for (const std::uint64_t seed : seeds) {
      SweepInputs point = in;
      point.model.K = k;
      run_pair(point, *in.split, pipeline, {}, "K=" + std::to_string(k), seed, nullptr,
               rows);
    }
  return rows;
}

void write_sweep_csv(const std::filesystem::path& path, std::span<const SweepRow> rows) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write sweep csv: " + path.string());
  out << "sweep_param,seed,model,recall@20,ndcg@20\n";
  char buf[192];
  for (const auto& row : rows) {
    std::snprintf(buf, sizeof buf, "%s,%llu,%s,%.10g,%.10g\n", row.sweep_param.c_str(),
                  static_cast<unsigned long long>(row.seed), row.model.c_str(),
                  row.recall20, row.ndcg20);
    out << buf;
  }
  if (!out) throw IoError("write failure on " + path.string());
}

std::vector<LayerImprovementRow> summarize_layer_sweep(std::span<const SweepRow> rows) {
  struct Acc {
    double recall[2] = {0, 0}, ndcg[2] = {0, 0};  // [tagcf, baseline]
    std::uint32_t n[2] = {0, 0};
  };
  std::vector<std::pair<std::uint32_t, Acc>> grid;  // preserves first-seen K order
  for (const auto& row : rows) {
    if (row.sweep_param.rfind("K=", 0) != 0)
      throw StructureError("layer summary expects sweep_param of the form K=<layers>");
    const std::uint32_t k =
        static_cast<std::uint32_t>(std::stoul(row.sweep_param.substr(2)));
    auto it = std::find_if(grid.begin(), grid.end(),
                           [k](const auto& e) { return e.first == k; });
    if (it == grid.end()) {
      grid.push_back({k, Acc{}});
      it = std::prev(grid.end());
    }
    const int slot = row.model == "tagcf" ? 0 : 1;
    it->second.recall[slot] += row.recall20;
    it->second.ndcg[slot] += row.ndcg20;
    ++it->second.n[slot];
  }

  const auto improvement = [](double t, double b) {
    if (b > 0.0) return (t - b) / b;
    return t > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  };
  std::vector<LayerImprovementRow> out;
  for (const auto& [k, acc] : grid) {
    if (acc.n[0] == 0 || acc.n[1] == 0)
      throw StructureError("layer summary needs both models at K=" + std::to_string(k));
    LayerImprovementRow row;
    row.k = k;
    row.tagcf_recall20 = acc.recall[0] / acc.n[0];
    row.baseline_recall20 = acc.recall[1] / acc.n[1];
    row.tagcf_ndcg20 = acc.ndcg[0] / acc.n[0];
    row.baseline_ndcg20 = acc.ndcg[1] / acc.n[1];
    row.improvement_recall20 = improvement(row.tagcf_recall20, row.baseline_recall20);
    row.improvement_ndcg20 = improvement(row.tagcf_ndcg20, row.baseline_ndcg20);
    out.push_back(row);
  }
  return out;
}

void write_layer_improvement_csv(const std::filesystem::path& path,
                                 std::span<const LayerImprovementRow> rows) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write layer improvement csv: " + path.string());
  out << "K,tagcf_recall@20,baseline_recall@20,improvement_recall@20,"
         "tagcf_ndcg@20,baseline_ndcg@20,improvement_ndcg@20\n";
  char buf[256];
  for (const auto& row : rows) {
    std::snprintf(buf, sizeof buf, "%u,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g\n", row.k,
                  row.tagcf_recall20, row.baseline_recall20, row.improvement_recall20,
                  row.tagcf_ndcg20, row.baseline_ndcg20, row.improvement_ndcg20);
    out << buf;
  }
  if (!out) throw IoError("write failure on " + path.string());
}

TrainEvalOutcome train_and_evaluate(const TripartiteGraph& g, const SplitDataset& split,
                                    const ModelConfig& model_cfg, const TrainConfig& train_cfg,
                                    std::vector<std::uint32_t> k_set,
                                    const std::vector<bool>* item_filter) {
  TrainEvalOutcome out;
  out.training = train(g, split, model_cfg, train_cfg);
  EvalOptions options;
  options.k_set = std::move(k_set);
  options.item_filter = item_filter;
  options.keep_per_user = false;
  out.test_report = full_rank_evaluate(out.training.best, g, split, EvalSplit::Test, options);
  return out;
}

}  // namespace tagcf

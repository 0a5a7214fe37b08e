#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "tagcf/attributes.hpp"
#include "tagcf/dataset.hpp"
#include "tagcf/equivalence.hpp"
#include "tagcf/graph.hpp"
#include "tagcf/metrics.hpp"
#include "tagcf/model.hpp"
#include "tagcf/training.hpp"

namespace tagcf {

struct PipelineConfig {
  std::uint32_t tau_min = 2;
  std::uint32_t tau_max = 1000000;
  bool no_ff = false;  // keep every raw attribute: no filtering, no fusion
  double jaccard_threshold = 0.5;
  void validate() const;
};

struct PipelineResult {
  AttributeVocabulary vocab;
  FusionClusterMap fusion;
  EdgeSets edges;
};

// normalize -> count -> frequency filter -> greedy fusion -> edge reassignment.
// With no_ff the vocabulary keeps every attribute and fusion is the identity.
// A null oracle selects token-overlap equivalence at cfg.jaccard_threshold.
PipelineResult run_attribute_pipeline(std::span<const RawAttributeRecord> records,
                                      const PipelineConfig& cfg,
                                      const EquivalenceOracle* oracle = nullptr);

// Records whose (user, item) pair appears in `train`. The graph may only see
// attributes extracted from training interactions, so every pipeline run is
// preceded by this restriction.
std::vector<RawAttributeRecord> restrict_records(std::span<const RawAttributeRecord> records,
                                                 std::span<const Interaction> train);

struct ExperimentConfig {
  std::vector<double> s_grid{0.25, 0.5, 0.75, 1.0};
  std::vector<double> c_grid{0.1};
  std::vector<std::uint32_t> layer_grid{1, 2, 3, 4, 5, 6};
  std::vector<std::uint64_t> seeds{1, 2, 3};
  void validate() const;
};

// One trained-and-evaluated configuration; metrics are test-split values
// (restricted to cold items in the cold-start sweep).
struct SweepRow {
  std::string sweep_param;  // "s=0.5", "c=0.1", "K=3"
  std::uint64_t seed = 0;
  std::string model;  // "tagcf" or "baseline"
  double recall20 = 0.0;
  double ndcg20 = 0.0;
};

// Inputs shared by every sweep point. records must be keyed by train-split
// (user, item) pairs; points that prune the train split re-run the attribute
// pipeline on the records whose pair survived.
struct SweepInputs {
  std::uint32_t n_users = 0;
  std::uint32_t n_items = 0;
  const SplitDataset* split = nullptr;
  std::span<const RawAttributeRecord> records;
  PipelineConfig pipeline;
  ModelConfig model;
  TrainConfig train;
  const EquivalenceOracle* oracle = nullptr;
};

// Keeps floor(s * |train|) interactions, chosen uniformly at the given seed
// but emitted in their original order so s = 1 reproduces the input split.
SplitDataset sparsify_train(const SplitDataset& split, double s, std::uint64_t seed);

// Flags floor(c * n_items) items chosen uniformly at the given seed.
std::vector<bool> sample_cold_items(std::uint32_t n_items, double c, std::uint64_t seed);

// Drops every train interaction whose item is flagged; val and test stay intact.
SplitDataset remove_cold_train(const SplitDataset& split, const std::vector<bool>& cold);

// Raw attribute strings extracted from an item's metadata alone, used to give
// cold items their only graph edges.
using MetadataAttrFn = std::function<std::vector<std::string>(std::uint32_t item)>;

std::vector<SweepRow> sparsity_sweep(const SweepInputs& in, std::span<const double> s_grid,
                                     std::span<const std::uint64_t> seeds);

// Cold items lose their train interactions for both models; the tagcf model
// additionally receives item-attribute edges for cold items via cold_attrs
// (attributes missing from the trained vocabulary are dropped). Reported
// metrics count only cold items as relevant.
std::vector<SweepRow> cold_start_sweep(const SweepInputs& in, std::span<const double> c_grid,
                                       std::span<const std::uint64_t> seeds,
                                       const MetadataAttrFn& cold_attrs);

std::vector<SweepRow> layer_sweep(const SweepInputs& in,
                                  std::span<const std::uint32_t> layer_grid,
                                  std::span<const std::uint64_t> seeds);

// Rows `sweep_param,seed,model,recall@20,ndcg@20` in emission order.
void write_sweep_csv(const std::filesystem::path& path, std::span<const SweepRow> rows);

struct LayerImprovementRow {
  std::uint32_t k = 0;
  double tagcf_recall20 = 0.0;
  double baseline_recall20 = 0.0;
  double improvement_recall20 = 0.0;  // (tagcf - baseline) / baseline
  double tagcf_ndcg20 = 0.0;
  double baseline_ndcg20 = 0.0;
  double improvement_ndcg20 = 0.0;
};

// Seed-averaged per-K summary of layer_sweep rows.
std::vector<LayerImprovementRow> summarize_layer_sweep(std::span<const SweepRow> rows);

void write_layer_improvement_csv(const std::filesystem::path& path,
                                 std::span<const LayerImprovementRow> rows);

// Trains on split.train and reports test metrics at the requested cutoffs.
// A null item_filter evaluates over all items.
struct TrainEvalOutcome {
  TrainResult training;
  MetricReport test_report;
};

TrainEvalOutcome train_and_evaluate(const TripartiteGraph& g, const SplitDataset& split,
                                    const ModelConfig& model_cfg, const TrainConfig& train_cfg,
                                    std::vector<std::uint32_t> k_set = {5, 20},
                                    const std::vector<bool>* item_filter = nullptr);

}  // namespace tagcf

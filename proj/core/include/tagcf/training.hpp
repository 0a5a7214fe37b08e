#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "tagcf/dataset.hpp"
#include "tagcf/graph.hpp"
#include "tagcf/model.hpp"
#include "tagcf/rng.hpp"

namespace tagcf {

struct TrainConfig {
  double learning_rate = 1e-3;
  double lambda = 1e-4;  // L2 coefficient
  std::uint32_t batch_size = 2048;
  std::uint32_t max_epochs = 500;
  std::uint32_t patience = 5;
  std::string eval_metric = "recall@20";
  std::uint64_t seed = 42;

  void validate() const;
};

// "recall@20" / "ndcg@5" style metric selector.
struct MetricSpec {
  enum class Kind { Recall, Ndcg } kind = Kind::Recall;
  std::uint32_t k = 20;

  static MetricSpec parse(const std::string& text);
  std::string to_string() const;
};

struct BprTriple {
  std::uint32_t user = 0;
  std::uint32_t pos = 0;
  std::uint32_t neg = 0;
};
using BprBatch = std::vector<BprTriple>;

// Per-user training positives with O(log) membership checks.
struct TrainPositives {
  std::vector<std::vector<std::uint32_t>> by_user;  // sorted item lists
  std::uint32_t n_items = 0;

  static TrainPositives build(std::span<const Interaction> train, std::uint32_t n_users,
                              std::uint32_t n_items);
  bool contains(std::uint32_t user, std::uint32_t item) const;
};

// One negative per positive by uniform rejection sampling over all items.
// A user interacting with every item cannot be sampled and is an error.
BprBatch sample_negatives(const TrainPositives& positives,
                          std::span<const Interaction> batch_positives, Rng& rng);

// BPR loss over the batch plus L2 on the batch's layer-0 ego embeddings and
// (for gated ablations) the gate parameters:
//   loss = sum -log sigmoid(y_ui - y_uj) + lambda * (sum ||e||^2 + ||theta||^2).
// Accumulates exact gradients of that expression into `grads` (through the
// whole propagation stack via backward). Returns the loss.
double bpr_loss(const TripartiteGraph& g, const Model& m, const LayerState& state,
                std::span<const BprTriple> batch, double lambda, Gradients& grads);

// Adaptive moment estimation over the flattened model parameters.
struct OptimizerState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t step = 0;
  std::vector<double> m;  // first moments, flattened
  std::vector<double> v;  // second moments, flattened

  static OptimizerState init(const Model& model);
};

void adam_step(Model& model, const Gradients& grads, OptimizerState& opt,
               double learning_rate);

struct EpochLog {
  std::uint32_t epoch = 0;
  double loss = 0.0;
  double val_metric = 0.0;
  double elapsed_seconds = 0.0;
};

struct TrainResult {
  Model best;                 // highest validation metric seen
  double best_metric = 0.0;
  std::uint32_t best_epoch = 0;
  std::vector<EpochLog> log;
  bool diverged = false;
  std::string stop_reason;
};

// Validation metric for an intermediate model; the default evaluates
// eval_metric by full ranking on the validation split.
using MetricFn = std::function<double(const Model&)>;

// BPR training loop: shuffle positives, batch, sample negatives, forward,
// backward, Adam; evaluate after each epoch; early-stop after `patience`
// non-improving epochs. Divergence (non-finite loss) aborts the loop and
// keeps the best model seen so far.
TrainResult train(const TripartiteGraph& g, const SplitDataset& split,
                  const ModelConfig& model_cfg, const TrainConfig& train_cfg,
                  const MetricFn& metric = {});

// Training log CSV: epoch,loss,val_metric,elapsed_seconds.
void write_training_log(const std::filesystem::path& path, std::span<const EpochLog> log);

}  // namespace tagcf

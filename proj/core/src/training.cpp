#include "tagcf/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>

#include "tagcf/error.hpp"
#include "tagcf/metrics.hpp"

namespace tagcf {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be non-negative");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
  if (patience < 1) throw ConfigError("patience must be >= 1");
  MetricSpec::parse(eval_metric);
}

MetricSpec MetricSpec::parse(const std::string& text) {
  const std::size_t at = text.find('@');
  if (at == std::string::npos)
    throw ConfigError("eval_metric must look like recall@20 or ndcg@5, got '" + text + "'");
  const std::string name = text.substr(0, at);
  MetricSpec spec;
  if (name == "recall") spec.kind = Kind::Recall;
  else if (name == "ndcg") spec.kind = Kind::Ndcg;
  else throw ConfigError("eval_metric name must be recall or ndcg, got '" + name + "'");
  try {
    std::size_t used = 0;
    const std::string digits = text.substr(at + 1);
    const unsigned long k = std::stoul(digits, &used);
    if (used != digits.size() || k == 0 || k > UINT32_MAX) throw std::invalid_argument(digits);
    spec.k = static_cast<std::uint32_t>(k);
  } catch (const std::exception&) {
    throw ConfigError("eval_metric K must be a positive integer, got '" + text + "'");
  }
  return spec;
}

std::string MetricSpec::to_string() const {
  return (kind == Kind::Recall ? std::string("recall@") : std::string("ndcg@")) +
         std::to_string(k);
}

TrainPositives TrainPositives::build(std::span<const Interaction> train,
                                     std::uint32_t n_users, std::uint32_t n_items) {
  TrainPositives p;
  p.n_items = n_items;
  p.by_user = interactions_by_user(train, n_users);
  for (const auto& items : p.by_user)
    for (const std::uint32_t i : items)
      if (i >= n_items)
        throw StructureError("train interaction references item index " + std::to_string(i) +
                             " but there are only " + std::to_string(n_items) + " items");
  return p;
}

bool TrainPositives::contains(std::uint32_t user, std::uint32_t item) const {
  const auto& items = by_user[user];
  return std::binary_search(items.begin(), items.end(), item);
}

BprBatch sample_negatives(const TrainPositives& positives,
                          std::span<const Interaction> batch_positives, Rng& rng) {
  BprBatch batch;
  batch.reserve(batch_positives.size());
  for (const auto& [u, i] : batch_positives) {
    if (positives.by_user[u].size() >= positives.n_items)
      throw StructureError("user index " + std::to_string(u) +
                           " interacted with every item; negative sampling is impossible");
    std::uint32_t j = 0;
    do {
      j = static_cast<std::uint32_t>(rng.uniform_below(positives.n_items));
    } while (positives.contains(u, j));
    batch.push_back({u, i, j});
  }
  return batch;
}

namespace {

double squared_norm(const double* v, std::size_t n) { return dot(v, v, n); }

// log(1 + exp(-t)) without overflow.
double softplus_neg(double t) {
  if (t > 0.0) return std::log1p(std::exp(-t));
  return -t + std::log1p(std::exp(t));
}

}  // namespace

double bpr_loss(const TripartiteGraph& g, const Model& m, const LayerState& state,
                std::span<const BprTriple> batch, double lambda, Gradients& grads) {
  if (state.final.rows != g.n_nodes() || state.final.cols != m.config.d)
    throw StateError("bpr_loss requires the forward state for this graph and model");

  const std::uint32_t d = m.config.d;
  const Matrix& fin = state.final;
  Matrix final_grad(fin.rows, fin.cols);

  double loss = 0.0;
  for (std::size_t idx = 0; idx < batch.size(); ++idx) {
    const auto& [u, i, j] = batch[idx];
    if (u >= g.n_users || i >= g.n_items || j >= g.n_items)
      throw StructureError("BPR triple " + std::to_string(idx) + " is out of range");
    const double* fu = fin.row(u);
    const double* fi = fin.row(g.item_node(i));
    const double* fj = fin.row(g.item_node(j));
    const double diff = dot(fu, fi, d) - dot(fu, fj, d);
    loss += softplus_neg(diff);
    if (!std::isfinite(loss))
      throw NumericError("BPR loss became non-finite at batch triple " + std::to_string(idx));

    // d/ddiff of -log sigmoid(diff) is -sigmoid(-diff).
    const double s = 1.0 / (1.0 + std::exp(diff));
    double* gu = final_grad.row(u);
    double* gi = final_grad.row(g.item_node(i));
    double* gj = final_grad.row(g.item_node(j));
    for (std::uint32_t t = 0; t < d; ++t) {
      gu[t] += -s * (fi[t] - fj[t]);
      gi[t] += -s * fu[t];
      gj[t] += s * fu[t];
    }

    // L2 on the triple's layer-0 ego embeddings.
    const double* eu = m.emb.users.row(u);
    const double* ei = m.emb.items.row(i);
    const double* ej = m.emb.items.row(j);
    loss += lambda * (squared_norm(eu, d) + squared_norm(ei, d) + squared_norm(ej, d));
    double* geu = grads.emb.users.row(u);
    double* gei = grads.emb.items.row(i);
    double* gej = grads.emb.items.row(j);
    for (std::uint32_t t = 0; t < d; ++t) {
      geu[t] += 2.0 * lambda * eu[t];
      gei[t] += 2.0 * lambda * ei[t];
      gej[t] += 2.0 * lambda * ej[t];
    }
  }

  // L2 on gate parameters, once per call; the no_argc ablation has no gates
  // in its forward graph so they are neither penalized nor updated.
  if (m.config.ablation != Ablation::NoArgc) {
    for (int r = 0; r < 3; ++r) {
      const RelationGate& gate = m.gates.rel[r];
      RelationGate& ggate = grads.gates.rel[r];
      loss += lambda * (squared_norm(gate.w1.data.data(), gate.w1.data.size()) +
                        squared_norm(gate.b1.data(), gate.b1.size()) +
                        squared_norm(gate.w2.data(), gate.w2.size()) + gate.b2 * gate.b2);
      for (std::size_t t = 0; t < gate.w1.data.size(); ++t)
        ggate.w1.data[t] += 2.0 * lambda * gate.w1.data[t];
      for (std::size_t t = 0; t < gate.b1.size(); ++t)
        ggate.b1[t] += 2.0 * lambda * gate.b1[t];
      for (std::size_t t = 0; t < gate.w2.size(); ++t)
        ggate.w2[t] += 2.0 * lambda * gate.w2[t];
      ggate.b2 += 2.0 * lambda * gate.b2;
    }
  }

  if (!std::isfinite(loss)) throw NumericError("BPR loss is non-finite");
  backward(g, m, state, final_grad, grads);
  return loss;
}

namespace {

// Flattened views over model parameters and their gradients, in a fixed
// order so the optimizer state lines up across steps.
struct ParamView {
  double* param;
  const double* grad;
  std::size_t size;
};

std::vector<ParamView> param_views(Model& model, const Gradients& grads) {
  std::vector<ParamView> views;
  views.push_back({model.emb.users.data.data(), grads.emb.users.data.data(),
                   model.emb.users.data.size()});
  views.push_back({model.emb.items.data.data(), grads.emb.items.data.data(),
                   model.emb.items.data.size()});
  views.push_back({model.emb.attrs.data.data(), grads.emb.attrs.data.data(),
                   model.emb.attrs.data.size()});
  for (int r = 0; r < 3; ++r) {
    RelationGate& g = model.gates.rel[r];
    const RelationGate& gg = grads.gates.rel[r];
    views.push_back({g.w1.data.data(), gg.w1.data.data(), g.w1.data.size()});
    views.push_back({g.b1.data(), gg.b1.data(), g.b1.size()});
    views.push_back({g.w2.data(), gg.w2.data(), g.w2.size()});
    views.push_back({&g.b2, &gg.b2, 1});
  }
  return views;
}

std::size_t total_param_count(const Model& model) {
  std::size_t n = model.emb.users.data.size() + model.emb.items.data.size() +
                  model.emb.attrs.data.size();
  for (const auto& gate : model.gates.rel)
    n += gate.w1.data.size() + gate.b1.size() + gate.w2.size() + 1;
  return n;
}

}  // namespace

OptimizerState OptimizerState::init(const Model& model) {
  OptimizerState opt;
  const std::size_t n = total_param_count(model);
  opt.m.assign(n, 0.0);
  opt.v.assign(n, 0.0);
  return opt;
}

void adam_step(Model& model, const Gradients& grads, OptimizerState& opt,
               double learning_rate) {
  const auto views = param_views(model, grads);
  std::size_t offset = 0;
  for (const auto& view : views) offset += view.size;
  if (offset != opt.m.size())
    throw StateError("optimizer state does not match the model's parameter count");

  ++opt.step;
  const double bias1 = 1.0 - std::pow(opt.beta1, static_cast<double>(opt.step));
  const double bias2 = 1.0 - std::pow(opt.beta2, static_cast<double>(opt.step));

  offset = 0;
  for (const auto& view : views) {
    for (std::size_t t = 0; t < view.size; ++t) {
      const double g = view.grad[t];
      double& m1 = opt.m[offset + t];
      double& m2 = opt.v[offset + t];
      m1 = opt.beta1 * m1 + (1.0 - opt.beta1) * g;
      m2 = opt.beta2 * m2 + (1.0 - opt.beta2) * g * g;
      const double mhat = m1 / bias1;
      const double vhat = m2 / bias2;
      view.param[t] -= learning_rate * mhat / (std::sqrt(vhat) + opt.eps);
    }
    offset += view.size;
  }
}

TrainResult train(const TripartiteGraph& g, const SplitDataset& split,
                  const ModelConfig& model_cfg, const TrainConfig& train_cfg,
                  const MetricFn& metric) {
  model_cfg.validate();
  train_cfg.validate();
  if (split.train.empty()) throw StructureError("training requires a non-empty train split");

  const MetricSpec spec = MetricSpec::parse(train_cfg.eval_metric);
  MetricFn eval_fn = metric;
  if (!eval_fn) {
    eval_fn = [&g, &split, spec](const Model& model) {
      const MetricReport report =
          full_rank_evaluate(model, g, split, EvalSplit::Validation, {spec.k});
      return spec.kind == MetricSpec::Kind::Recall ? report.recall.at(spec.k)
                                                   : report.ndcg.at(spec.k);
    };
  }

  const TrainPositives positives =
      TrainPositives::build(split.train, g.n_users, g.n_items);

  TrainResult result;
  Model model = init_model(g.n_users, g.n_items, g.n_attrs, model_cfg, train_cfg.seed);
  OptimizerState opt = OptimizerState::init(model);
  result.best = model;
  result.best_metric = -std::numeric_limits<double>::infinity();
  result.best_epoch = 0;

  std::vector<Interaction> order(split.train.begin(), split.train.end());
  const Rng root(train_cfg.seed);
  std::uint32_t non_improving = 0;
  const auto t0 = std::chrono::steady_clock::now();

  for (std::uint32_t epoch = 1; epoch <= train_cfg.max_epochs; ++epoch) {
    Rng epoch_rng = root.child(0x45504F43ULL + epoch);
    epoch_rng.shuffle(order);

    double epoch_loss = 0.0;
    bool epoch_diverged = false;
    for (std::size_t start = 0; start < order.size(); start += train_cfg.batch_size) {
      const std::size_t len = std::min<std::size_t>(train_cfg.batch_size, order.size() - start);
      const std::span<const Interaction> chunk(order.data() + start, len);
      const BprBatch batch = sample_negatives(positives, chunk, epoch_rng);

      try {
        const LayerState state = forward(g, model);
        Gradients grads = zero_gradients(model);
        epoch_loss += bpr_loss(g, model, state, batch, train_cfg.lambda, grads);
        adam_step(model, grads, opt, train_cfg.learning_rate);
      } catch (const NumericError&) {
        epoch_diverged = true;
        break;
      }
    }

    if (epoch_diverged) {
      result.diverged = true;
      result.stop_reason = "diverged at epoch " + std::to_string(epoch) +
                           "; best checkpoint from epoch " + std::to_string(result.best_epoch) +
                           " retained";
      break;
    }

    double val_metric = 0.0;
    try {
      val_metric = eval_fn(model);
    } catch (const NumericError&) {
      result.diverged = true;
      result.stop_reason = "diverged during evaluation at epoch " + std::to_string(epoch) +
                           "; best checkpoint from epoch " + std::to_string(result.best_epoch) +
                           " retained";
      break;
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.log.push_back({epoch, epoch_loss, val_metric, elapsed});

    if (val_metric > result.best_metric) {
      result.best_metric = val_metric;
      result.best_epoch = epoch;
      result.best = model;
      non_improving = 0;
    } else if (++non_improving >= train_cfg.patience) {
      result.stop_reason = "early stop after " + std::to_string(train_cfg.patience) +
                           " non-improving epochs (best epoch " +
                           std::to_string(result.best_epoch) + ")";
      break;
    }
  }
  if (result.stop_reason.empty())
    result.stop_reason = "reached max_epochs (best epoch " +
                         std::to_string(result.best_epoch) + ")";
  return result;
}

void write_training_log(const std::filesystem::path& path, std::span<const EpochLog> log) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write training log: " + path.string());
  out << "epoch,loss,val_metric,elapsed_seconds\n";
  char buf[160];
  for (const auto& row : log) {
    std::snprintf(buf, sizeof buf, "%u,%.10g,%.10g,%.3f\n", row.epoch, row.loss,
                  row.val_metric, row.elapsed_seconds);
    out << buf;
  }
  if (!out) throw IoError("write failure on " + path.string());
}

}  // namespace tagcf

#include "tagcf/model.hpp"

#include <cmath>
#include <string>

#include "tagcf/error.hpp"
#include "tagcf/rng.hpp"

namespace tagcf {

namespace {

void fill_normal(Matrix& m, Rng& rng, double stddev) {
  for (double& x : m.data) x = rng.normal(0.0, stddev);
}

void fill_normal(std::vector<double>& v, Rng& rng, double stddev) {
  for (double& x : v) x = rng.normal(0.0, stddev);
}

double leaky_relu(double t, double slope) { return t >= 0.0 ? t : slope * t; }
double leaky_relu_grad(double t, double slope) { return t >= 0.0 ? 1.0 : slope; }

void check_finite(const Matrix& m, const std::string& what) {
  for (const double x : m.data)
    if (!std::isfinite(x)) throw NumericError(what + " contains non-finite values");
}

}  // namespace

EmbeddingTable init_embeddings(std::uint32_t n_users, std::uint32_t n_items,
                               std::uint32_t n_attrs, std::uint32_t d,
                               std::uint64_t seed, double init_scale) {
  if (d < 1) throw ConfigError("embedding dimension must be >= 1");
  if (init_scale < 0.0) throw ConfigError("init_scale must be non-negative");
  EmbeddingTable t;
  t.users = Matrix(n_users, d);
  t.items = Matrix(n_items, d);
  t.attrs = Matrix(n_attrs, d);
  Rng rng(seed);
  fill_normal(t.users, rng, init_scale);
  fill_normal(t.items, rng, init_scale);
  fill_normal(t.attrs, rng, init_scale);
  return t;
}

const char* gate_mode_name(GateMode m) {
  return m == GateMode::Raw ? "raw" : "softmax";
}

const char* ablation_name(Ablation a) {
  switch (a) {
    case Ablation::Full: return "full";
    case Ablation::NoArgc: return "no_argc";
    case Ablation::NoFf: return "no_ff";
  }
  return "?";
}

GateMode parse_gate_mode(const std::string& s) {
  if (s == "raw") return GateMode::Raw;
  if (s == "softmax") return GateMode::Softmax;
  throw ConfigError("gate_mode must be raw|softmax, got '" + s + "'");
}

Ablation parse_ablation(const std::string& s) {
  if (s == "full") return Ablation::Full;
  if (s == "no_argc") return Ablation::NoArgc;
  if (s == "no_ff") return Ablation::NoFf;
  throw ConfigError("ablation must be full|no_argc|no_ff, got '" + s + "'");
}

GateParameters GateParameters::constant(std::uint32_t d, std::uint32_t h, double c) {
  GateParameters p;
  p.hidden = h;
  for (auto& gate : p.rel) {
    gate.w1 = Matrix(h, 2 * static_cast<std::size_t>(d));
    gate.b1.assign(h, 0.0);
    gate.w2.assign(h, 0.0);
    gate.b2 = c;
  }
  return p;
}

GateParameters init_gates(std::uint32_t d, std::uint32_t h, std::uint64_t seed,
                          double init_scale) {
  GateParameters p = GateParameters::constant(d, h, 1.0 / 3.0);
  Rng rng(seed);
  for (auto& gate : p.rel) {
    fill_normal(gate.w1, rng, init_scale);
    fill_normal(gate.w2, rng, init_scale);
  }
  return p;
}

void ModelConfig::validate() const {
  if (K < 1) throw ConfigError("K (layer count) must be >= 1");
  if (d < 1) throw ConfigError("d (embedding dimension) must be >= 1");
  if (h < 1) throw ConfigError("h (gate hidden width) must be >= 1");
  if (!std::isfinite(leaky_slope)) throw ConfigError("leaky_slope must be finite");
  if (!(init_scale >= 0.0) || !std::isfinite(init_scale))
    throw ConfigError("init_scale must be a non-negative finite value");
}

Model init_model(std::uint32_t n_users, std::uint32_t n_items, std::uint32_t n_attrs,
                 const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  Model m;
  m.config = config;
  m.emb = init_embeddings(n_users, n_items, n_attrs, config.d, seed, config.init_scale);
  m.gates = init_gates(config.d, config.h, Rng(seed).child(1).seed(), config.init_scale);
  return m;
}

void relation_aggregate(const TripartiteGraph& g, Relation r, const Matrix& x, Matrix& out) {
  const std::uint32_t n = g.n_nodes();
  if (x.rows != n)
    throw StructureError("aggregation input has " + std::to_string(x.rows) +
                         " rows but the graph has " + std::to_string(n) + " nodes");
  if (!out.same_shape(x)) out = Matrix(x.rows, x.cols);
  out.zero();

  const CsrMatrix& adj = g.relation(r);
  const auto& deg = g.degrees(r);
  const std::size_t d = x.cols;
  for (std::uint32_t v = 0; v < n; ++v) {
    double* dst = out.row(v);
    const double dv = static_cast<double>(deg[v]);
    for (const std::uint32_t w : adj.row(v)) {
      const double coeff = 1.0 / std::sqrt(dv * static_cast<double>(deg[w]));
      const double* src = x.row(w);
      for (std::size_t t = 0; t < d; ++t) dst[t] += coeff * src[t];
    }
  }
}

double gate_weight(const RelationGate& gate, double leaky_slope, const double* x_v,
                   const double* v_v, std::uint32_t d) {
  const std::size_t h = gate.b1.size();
  if (gate.w1.rows != h || gate.w1.cols != 2 * static_cast<std::size_t>(d) ||
      gate.w2.size() != h)
    throw StructureError("gate parameter shapes disagree with d=" + std::to_string(d));
  double out = gate.b2;
  for (std::size_t j = 0; j < h; ++j) {
    const double* w1j = gate.w1.row(j);
    double u = gate.b1[j];
    for (std::uint32_t t = 0; t < d; ++t) u += w1j[t] * x_v[t];
    for (std::uint32_t t = 0; t < d; ++t) u += w1j[d + t] * v_v[t];
    out += gate.w2[j] * leaky_relu(u, leaky_slope);
  }
  return out;
}

namespace {

void validate_model_shapes(const TripartiteGraph& g, const Model& m) {
  const auto& c = m.config;
  c.validate();
  if (m.emb.users.rows != g.n_users || m.emb.items.rows != g.n_items ||
      m.emb.attrs.rows != g.n_attrs)
    throw StructureError(
        "embedding tables (" + std::to_string(m.emb.users.rows) + "/" +
        std::to_string(m.emb.items.rows) + "/" + std::to_string(m.emb.attrs.rows) +
        ") do not match the graph (" + std::to_string(g.n_users) + "/" +
        std::to_string(g.n_items) + "/" + std::to_string(g.n_attrs) + ")");
  if (m.emb.users.cols != c.d || m.emb.items.cols != c.d || m.emb.attrs.cols != c.d)
    throw StructureError("embedding dimension does not match config d=" + std::to_string(c.d));
  if (c.ablation != Ablation::NoArgc) {
    for (const auto& gate : m.gates.rel)
      if (gate.b1.size() != c.h || gate.w2.size() != c.h || gate.w1.rows != c.h ||
          gate.w1.cols != 2 * static_cast<std::size_t>(c.d))
        throw StructureError("gate parameter shapes do not match d=" + std::to_string(c.d) +
                             ", h=" + std::to_string(c.h));
  }
}

Matrix stack_embeddings(const TripartiteGraph& g, const EmbeddingTable& emb) {
  const std::size_t d = emb.users.cols;
  Matrix x(g.n_nodes(), d);
  std::copy(emb.users.data.begin(), emb.users.data.end(), x.row(0));
  std::copy(emb.items.data.begin(), emb.items.data.end(), x.row(g.n_users));
  std::copy(emb.attrs.data.begin(), emb.attrs.data.end(),
            x.row(static_cast<std::size_t>(g.n_users) + g.n_items));
  return x;
}

void softmax3(const double* raw, double* out) {
  const double mx = std::max(raw[0], std::max(raw[1], raw[2]));
  double sum = 0.0;
  for (int r = 0; r < 3; ++r) {
    out[r] = std::exp(raw[r] - mx);
    sum += out[r];
  }
  for (int r = 0; r < 3; ++r) out[r] /= sum;
}

}  // namespace

void argc_layer(const TripartiteGraph& g, const Model& m, LayerState& state) {
  if (state.x.empty()) throw StateError("argc_layer called without a layer-0 state");
  const Matrix& x = state.x.back();
  const std::uint32_t n = g.n_nodes();
  const std::uint32_t d = m.config.d;
  const std::size_t layer_index = state.x.size() - 1;

  if (m.config.ablation == Ablation::NoArgc) {
    Matrix next(n, d);
    relation_aggregate(g, Relation::UAI, x, next);
    check_finite(next, "propagation layer " + std::to_string(layer_index + 1));
    state.x.push_back(std::move(next));
    return;
  }

  LayerCache cache;
  for (int r = 0; r < 3; ++r) {
    cache.v[r] = Matrix(n, d);
    relation_aggregate(g, static_cast<Relation>(r), x, cache.v[r]);
    cache.pre[r] = Matrix(n, m.config.h);
  }
  cache.alpha_raw = Matrix(n, 3);
  cache.alpha = Matrix(n, 3);

  Matrix next(n, d);
  const double slope = m.config.leaky_slope;
  for (std::uint32_t node = 0; node < n; ++node) {
    const double* xv = x.row(node);
    for (int r = 0; r < 3; ++r) {
      const RelationGate& gate = m.gates.rel[r];
      const double* vv = cache.v[r].row(node);
      double* pre = cache.pre[r].row(node);
      double raw = gate.b2;
      for (std::uint32_t j = 0; j < m.config.h; ++j) {
        const double* w1j = gate.w1.row(j);
        double u = gate.b1[j];
        for (std::uint32_t t = 0; t < d; ++t) u += w1j[t] * xv[t];
        for (std::uint32_t t = 0; t < d; ++t) u += w1j[d + t] * vv[t];
        pre[j] = u;
        raw += gate.w2[j] * leaky_relu(u, slope);
      }
      cache.alpha_raw.at(node, r) = raw;
    }

    double* alpha = cache.alpha.row(node);
    if (m.config.gate_mode == GateMode::Softmax) {
      softmax3(cache.alpha_raw.row(node), alpha);
    } else {
      for (int r = 0; r < 3; ++r) alpha[r] = cache.alpha_raw.at(node, r);
    }

    double* dst = next.row(node);
    for (int r = 0; r < 3; ++r) {
      const double a = alpha[r];
      const double* vv = cache.v[r].row(node);
      for (std::uint32_t t = 0; t < d; ++t) dst[t] += a * vv[t];
    }
  }

  check_finite(next, "propagation layer " + std::to_string(layer_index + 1));
  state.x.push_back(std::move(next));
  state.layers.push_back(std::move(cache));
}

LayerState forward(const TripartiteGraph& g, const Model& m) {
  validate_model_shapes(g, m);
  LayerState state;
  state.x.reserve(m.config.K + 1);
  state.x.push_back(stack_embeddings(g, m.emb));
  check_finite(state.x[0], "layer-0 embeddings");

  for (std::uint32_t k = 0; k < m.config.K; ++k) argc_layer(g, m, state);

  state.final = Matrix(g.n_nodes(), m.config.d);
  for (const Matrix& x : state.x)
    for (std::size_t t = 0; t < x.data.size(); ++t) state.final.data[t] += x.data[t];
  return state;
}

double score(const Matrix& final_x, const TripartiteGraph& g, std::uint32_t user,
             std::uint32_t item) {
  if (user >= g.n_users || item >= g.n_items)
    throw StructureError("score query (user " + std::to_string(user) + ", item " +
                         std::to_string(item) + ") outside " + std::to_string(g.n_users) +
                         " users x " + std::to_string(g.n_items) + " items");
  return dot(final_x.row(user), final_x.row(g.item_node(item)), final_x.cols);
}

Gradients zero_gradients(const Model& m) {
  Gradients grads;
  grads.emb.users = Matrix(m.emb.users.rows, m.emb.users.cols);
  grads.emb.items = Matrix(m.emb.items.rows, m.emb.items.cols);
  grads.emb.attrs = Matrix(m.emb.attrs.rows, m.emb.attrs.cols);
  grads.gates = GateParameters::constant(m.config.d, m.config.h, 0.0);
  return grads;
}

void backward(const TripartiteGraph& g, const Model& m, const LayerState& state,
              const Matrix& final_grad, Gradients& grads) {
  if (state.x.empty()) throw StateError("backward called without a forward cache");
  if (state.x.size() != m.config.K + 1u)
    throw StateError("forward cache has " + std::to_string(state.x.size()) +
                     " layer states but config.K=" + std::to_string(m.config.K));
  const bool gated = m.config.ablation != Ablation::NoArgc;
  if (gated && state.layers.size() != m.config.K)
    throw StateError("forward cache is missing per-layer gate intermediates");
  const std::uint32_t n = g.n_nodes();
  const std::uint32_t d = m.config.d;
  const std::uint32_t h = m.config.h;
  if (final_grad.rows != n || final_grad.cols != d)
    throw StructureError("upstream gradient shape mismatch");

  // gx holds the gradient with respect to x[k+1] entering iteration k; the
  // final sum feeds every layer state, hence the fresh final_grad added per
  // layer below.
  Matrix gx = final_grad;
  Matrix scratch(n, d);

  for (std::uint32_t k = m.config.K; k-- > 0;) {
    if (!gated) {
      relation_aggregate(g, Relation::UAI, gx, scratch);
      gx = final_grad;
      for (std::size_t t = 0; t < gx.data.size(); ++t) gx.data[t] += scratch.data[t];
      continue;
    }

    const LayerCache& cache = state.layers[k];
    const Matrix& xk = state.x[k];
    const double slope = m.config.leaky_slope;
    std::array<Matrix, 3> dv{Matrix(n, d), Matrix(n, d), Matrix(n, d)};
    Matrix dx_direct(n, d);

    for (std::uint32_t node = 0; node < n; ++node) {
      const double* gup = gx.row(node);
      double dalpha[3];
      for (int r = 0; r < 3; ++r) dalpha[r] = dot(gup, cache.v[r].row(node), d);

      double draw[3];
      if (m.config.gate_mode == GateMode::Softmax) {
        const double* alpha = cache.alpha.row(node);
        double inner = 0.0;
        for (int r = 0; r < 3; ++r) inner += dalpha[r] * alpha[r];
        for (int r = 0; r < 3; ++r) draw[r] = alpha[r] * (dalpha[r] - inner);
      } else {
        for (int r = 0; r < 3; ++r) draw[r] = dalpha[r];
      }

      const double* xv = xk.row(node);
      for (int r = 0; r < 3; ++r) {
        const RelationGate& gate = m.gates.rel[r];
        RelationGate& ggate = grads.gates.rel[r];
        const double a = cache.alpha.at(node, r);
        const double* vv = cache.v[r].row(node);
        double* dvr = dv[r].row(node);
        for (std::uint32_t t = 0; t < d; ++t) dvr[t] += a * gup[t];

        const double da = draw[r];
        ggate.b2 += da;
        const double* pre = cache.pre[r].row(node);
        double* dxd = dx_direct.row(node);
        for (std::uint32_t j = 0; j < h; ++j) {
          const double u = pre[j];
          ggate.w2[j] += da * leaky_relu(u, slope);
          const double du = da * gate.w2[j] * leaky_relu_grad(u, slope);
          ggate.b1[j] += du;
          const double* w1j = gate.w1.row(j);
          double* gw1j = ggate.w1.row(j);
          for (std::uint32_t t = 0; t < d; ++t) {
            gw1j[t] += du * xv[t];
            gw1j[d + t] += du * vv[t];
            dxd[t] += du * w1j[t];
            dvr[t] += du * w1j[d + t];
          }
        }
      }
    }

    Matrix gnew = final_grad;
    for (std::size_t t = 0; t < gnew.data.size(); ++t) gnew.data[t] += dx_direct.data[t];
    for (int r = 0; r < 3; ++r) {
      relation_aggregate(g, static_cast<Relation>(r), dv[r], scratch);
      for (std::size_t t = 0; t < gnew.data.size(); ++t) gnew.data[t] += scratch.data[t];
    }
    gx = std::move(gnew);
  }

  // gx is now the gradient with respect to the layer-0 stack.
  for (std::uint32_t u = 0; u < g.n_users; ++u) {
    const double* src = gx.row(u);
    double* dst = grads.emb.users.row(u);
    for (std::uint32_t t = 0; t < d; ++t) dst[t] += src[t];
  }
  for (std::uint32_t i = 0; i < g.n_items; ++i) {
    const double* src = gx.row(g.item_node(i));
    double* dst = grads.emb.items.row(i);
    for (std::uint32_t t = 0; t < d; ++t) dst[t] += src[t];
  }
  for (std::uint32_t a = 0; a < g.n_attrs; ++a) {
    const double* src = gx.row(g.attr_node(a));
    double* dst = grads.emb.attrs.row(a);
    for (std::uint32_t t = 0; t < d; ++t) dst[t] += src[t];
  }
}

}  // namespace tagcf

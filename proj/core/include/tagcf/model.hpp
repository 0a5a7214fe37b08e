#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "tagcf/dense.hpp"
#include "tagcf/graph.hpp"

namespace tagcf {

struct EmbeddingTable {
  Matrix users;  // N_u x d
  Matrix items;  // N_i x d
  Matrix attrs;  // N_a x d

  std::uint32_t dim() const { return static_cast<std::uint32_t>(users.cols); }
};

// i.i.d. normal entries with standard deviation init_scale, deterministic per
// seed.
EmbeddingTable init_embeddings(std::uint32_t n_users, std::uint32_t n_items,
                               std::uint32_t n_attrs, std::uint32_t d,
                               std::uint64_t seed, double init_scale);

enum class GateMode : std::uint8_t { Raw = 0, Softmax = 1 };
enum class Ablation : std::uint8_t { Full = 0, NoArgc = 1, NoFf = 2 };

const char* gate_mode_name(GateMode m);
const char* ablation_name(Ablation a);
GateMode parse_gate_mode(const std::string& s);
Ablation parse_ablation(const std::string& s);

// One scalar-score network per relation: alpha = w2 . LeakyReLU(W1 z + b1) + b2
// with z = concat(x_v, v_v) of length 2d.
struct RelationGate {
  Matrix w1;               // h x 2d
  std::vector<double> b1;  // h
  std::vector<double> w2;  // h
  double b2 = 0.0;
};

struct GateParameters {
  std::array<RelationGate, 3> rel;  // indexed by Relation
  std::uint32_t hidden = 0;

  // All-zero network with constant output c; bypasses the gates so the layer
  // computes a fixed-weight fusion (c = 1 gives the ungated sum).
  static GateParameters constant(std::uint32_t d, std::uint32_t h, double c);
};

// Weights ~ N(0, init_scale^2), b1 = 0, b2 = 1/3 so the initial fused
// operator is the average of the three relation aggregations.
GateParameters init_gates(std::uint32_t d, std::uint32_t h, std::uint64_t seed,
                          double init_scale);

struct ModelConfig {
  std::uint32_t K = 3;   // propagation layers
  std::uint32_t d = 64;  // embedding dimension
  std::uint32_t h = 64;  // gate hidden width
  GateMode gate_mode = GateMode::Raw;
  Ablation ablation = Ablation::Full;
  double leaky_slope = 0.01;
  double init_scale = 0.1;

  void validate() const;
};

struct Model {
  EmbeddingTable emb;
  GateParameters gates;
  ModelConfig config;
};

// Embeddings from `seed`, gates from a child stream of it.
Model init_model(std::uint32_t n_users, std::uint32_t n_items, std::uint32_t n_attrs,
                 const ModelConfig& config, std::uint64_t seed);

// Forward cache: layer states plus per-layer gate intermediates needed by the
// backward pass. `layers` stays empty under the no_argc ablation, which has
// no gates.
struct LayerCache {
  std::array<Matrix, 3> v;    // N x d aggregation per relation
  std::array<Matrix, 3> pre;  // N x h gate pre-activations
  Matrix alpha_raw;           // N x 3 raw gate scores
  Matrix alpha;               // N x 3 fusion weights (softmax-normalized when enabled)
};

struct LayerState {
  std::vector<Matrix> x;          // K+1 states, each N x d
  std::vector<LayerCache> layers; // K entries (empty for no_argc)
  Matrix final;                   // sum over x[0..K]
};

// v_r[n] = sum over neighbors w of n in relation r of x[w]/sqrt(deg(n)deg(w)).
// Nodes with no edges in the relation get a zero row.
void relation_aggregate(const TripartiteGraph& g, Relation r, const Matrix& x, Matrix& out);

// Raw (un-normalized) gate score for one node.
double gate_weight(const RelationGate& gate, double leaky_slope, const double* x_v,
                   const double* v_v, std::uint32_t d);

// One propagation layer: aggregation per relation, per-node gate scores,
// weighted fusion. Appends the new state and its cache to `state`.
void argc_layer(const TripartiteGraph& g, const Model& m, LayerState& state);

// Full K-layer propagation and layer-combination sum.
LayerState forward(const TripartiteGraph& g, const Model& m);

double score(const Matrix& final_x, const TripartiteGraph& g, std::uint32_t user,
             std::uint32_t item);

struct Gradients {
  EmbeddingTable emb;
  GateParameters gates;
};

Gradients zero_gradients(const Model& m);

// Accumulates into `grads` the exact gradients of the forward composition,
// given the upstream gradient on the final (layer-combined) embeddings.
void backward(const TripartiteGraph& g, const Model& m, const LayerState& state,
              const Matrix& final_grad, Gradients& grads);

}  // namespace tagcf

#pragma once

// Independent dense reference computations shared by the unit suites and the
// acceptance harness. Everything here is written straight from the math, not
// by calling back into the library under test.

#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

#include "tagcf/dataset.hpp"
#include "tagcf/dense.hpp"
#include "tagcf/graph.hpp"
#include "tagcf/rng.hpp"

namespace oracle {

// Random tripartite instance: every user gets >= 1 interaction and edges are
// unique. Attribute edge lists may reference only a subset of the vocabulary,
// exercising the zero-edge-attribute drop.
struct RandomGraph {
  std::uint32_t n_users = 0;
  std::uint32_t n_items = 0;
  std::uint32_t n_attrs = 0;  // vocabulary size fed to build_tripartite
  std::vector<tagcf::Interaction> train;
  std::vector<tagcf::AttrEdge> ua;
  std::vector<tagcf::AttrEdge> ia;
};

inline RandomGraph random_graph(tagcf::Rng& rng, std::uint32_t n_users,
                                std::uint32_t n_items, std::uint32_t n_attrs,
                                std::uint32_t extra_edges) {
  RandomGraph g;
  g.n_users = n_users;
  g.n_items = n_items;
  g.n_attrs = n_attrs;
  std::set<std::pair<std::uint32_t, std::uint32_t>> ui, ua, ia;
  for (std::uint32_t u = 0; u < n_users; ++u)
    ui.insert({u, static_cast<std::uint32_t>(rng.uniform_below(n_items))});
  for (std::uint32_t e = 0; e < extra_edges; ++e) {
    ui.insert({static_cast<std::uint32_t>(rng.uniform_below(n_users)),
               static_cast<std::uint32_t>(rng.uniform_below(n_items))});
    if (n_attrs > 0) {
      ua.insert({static_cast<std::uint32_t>(rng.uniform_below(n_users)),
                 static_cast<std::uint32_t>(rng.uniform_below(n_attrs))});
      ia.insert({static_cast<std::uint32_t>(rng.uniform_below(n_items)),
                 static_cast<std::uint32_t>(rng.uniform_below(n_attrs))});
    }
  }
  for (const auto& [u, i] : ui) g.train.push_back({u, i});
  for (const auto& [n, a] : ua) g.ua.push_back({n, a});
  for (const auto& [n, a] : ia) g.ia.push_back({n, a});
  return g;
}

inline tagcf::TripartiteGraph build(const RandomGraph& rg) {
  return tagcf::build_tripartite(rg.n_users, rg.n_items, rg.n_attrs, rg.train, rg.ua,
                                 rg.ia);
}

// Dense symmetric adjacency of one relation graph over the global node space.
inline tagcf::Matrix dense_adjacency(const tagcf::TripartiteGraph& g,
                                     tagcf::Relation r) {
  const std::uint32_t n = g.n_nodes();
  tagcf::Matrix adj(n, n);
  const tagcf::CsrMatrix& rel = g.relation(r);
  for (std::uint32_t v = 0; v < n; ++v)
    for (const std::uint32_t w : rel.row(v)) adj.at(v, w) = 1.0;
  return adj;
}

// Dense D^{-1/2} A D^{-1/2} with degrees local to the relation graph.
inline tagcf::Matrix dense_normalized(const tagcf::TripartiteGraph& g,
                                      tagcf::Relation r) {
  tagcf::Matrix adj = dense_adjacency(g, r);
  const std::uint32_t n = g.n_nodes();
  std::vector<double> deg(n, 0.0);
  for (std::uint32_t v = 0; v < n; ++v)
    for (std::uint32_t w = 0; w < n; ++w) deg[v] += adj.at(v, w);
  tagcf::Matrix out(n, n);
  for (std::uint32_t v = 0; v < n; ++v)
    for (std::uint32_t w = 0; w < n; ++w)
      if (adj.at(v, w) != 0.0) out.at(v, w) = 1.0 / std::sqrt(deg[v] * deg[w]);
  return out;
}

inline tagcf::Matrix matmul(const tagcf::Matrix& a, const tagcf::Matrix& b) {
  tagcf::Matrix out(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = a.at(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols; ++j) out.at(i, j) += aik * b.at(k, j);
    }
  return out;
}

inline double max_abs_diff(const tagcf::Matrix& a, const tagcf::Matrix& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i)
    worst = std::max(worst, std::abs(a.data[i] - b.data[i]));
  return worst;
}

inline tagcf::Matrix random_matrix(tagcf::Rng& rng, std::size_t rows, std::size_t cols,
                                   double scale = 1.0) {
  tagcf::Matrix m(rows, cols);
  for (double& x : m.data) x = rng.normal(0.0, scale);
  return m;
}

}  // namespace oracle

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tagcf/dataset.hpp"

namespace tagcf {

// Edge between a user (or item) and an attribute, by dense indices.
struct AttrEdge {
  std::uint32_t node = 0;  // user index for U-A edges, item index for I-A
  std::uint32_t attr = 0;

  friend bool operator==(const AttrEdge&, const AttrEdge&) = default;
};

// Binary sparse matrix in compressed row form. Column indices within a row
// are sorted and deduplicated.
struct CsrMatrix {
  std::uint32_t n_rows = 0;
  std::uint32_t n_cols = 0;
  std::vector<std::uint64_t> row_ptr;  // size n_rows + 1
  std::vector<std::uint32_t> col;

  std::uint64_t nnz() const { return col.empty() ? 0 : col.size(); }
  std::span<const std::uint32_t> row(std::uint32_t r) const {
    return {col.data() + row_ptr[r], col.data() + row_ptr[r + 1]};
  }
  std::uint32_t degree(std::uint32_t r) const {
    return static_cast<std::uint32_t>(row_ptr[r + 1] - row_ptr[r]);
  }
  bool has(std::uint32_t r, std::uint32_t c) const;

  static CsrMatrix from_pairs(std::uint32_t n_rows, std::uint32_t n_cols,
                              std::span<const std::pair<std::uint32_t, std::uint32_t>> pairs);
  CsrMatrix transpose() const;
};

// The three relation graphs used by propagation. UAI is the full tripartite
// adjacency; UA and IA restrict it to one bipartite block each.
enum class Relation { UAI = 0, UA = 1, IA = 2 };

inline const char* relation_name(Relation r) {
  switch (r) {
    case Relation::UAI: return "uai";
    case Relation::UA: return "ua";
    case Relation::IA: return "ia";
  }
  return "?";
}

// Tripartite user-attribute-item graph over a global node space ordered
// users, then items, then attributes. Attributes that ended up with no edges
// are dropped at build time; `attr_ids` maps each surviving attribute node
// back to its original vocabulary id.
struct TripartiteGraph {
  std::uint32_t n_users = 0;
  std::uint32_t n_items = 0;
  std::uint32_t n_attrs = 0;

  // Bipartite blocks (rows x cols as named).
  CsrMatrix ui;  // users x items, train interactions
  CsrMatrix ua;  // users x attrs
  CsrMatrix ia;  // items x attrs

  std::vector<std::uint32_t> attr_ids;  // graph attr node -> vocabulary id

  // Symmetric adjacency per relation over the global node space, plus the
  // degree of every node within that relation graph. Degrees are local to
  // the relation: the same node generally has three different degrees.
  CsrMatrix rel[3];
  std::vector<std::uint32_t> deg[3];

  std::uint32_t n_nodes() const { return n_users + n_items + n_attrs; }
  std::uint32_t user_node(std::uint32_t u) const { return u; }
  std::uint32_t item_node(std::uint32_t i) const { return n_users + i; }
  std::uint32_t attr_node(std::uint32_t a) const { return n_users + n_items + a; }

  const CsrMatrix& relation(Relation r) const { return rel[static_cast<int>(r)]; }
  const std::vector<std::uint32_t>& degrees(Relation r) const {
    return deg[static_cast<int>(r)];
  }
};

// Assembles the tripartite graph from train interactions and attribute edge
// lists. Duplicate edges collapse; an endpoint out of range is a structural
// error naming the offending edge. `n_attrs` is the attribute vocabulary
// size; attributes without edges do not become nodes.
TripartiteGraph build_tripartite(std::uint32_t n_users, std::uint32_t n_items,
                                 std::uint32_t n_attrs,
                                 std::span<const Interaction> train,
                                 std::span<const AttrEdge> ua_edges,
                                 std::span<const AttrEdge> ia_edges);

// Symmetric normalization coefficient 1/sqrt(deg_r(v) * deg_r(w)) for an edge
// (v, w) of relation r, with degrees taken in that relation's graph. v and w
// are global node ids; querying a non-edge is an error.
double norm_coefficient(const TripartiteGraph& g, Relation r, std::uint32_t v,
                        std::uint32_t w);

}  // namespace tagcf

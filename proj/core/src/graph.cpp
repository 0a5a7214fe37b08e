#include "tagcf/graph.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tagcf/error.hpp"

namespace tagcf {

bool CsrMatrix::has(std::uint32_t r, std::uint32_t c) const {
  const auto cols = row(r);
  return std::binary_search(cols.begin(), cols.end(), c);
}

CsrMatrix CsrMatrix::from_pairs(
    std::uint32_t n_rows, std::uint32_t n_cols,
    std::span<const std::pair<std::uint32_t, std::uint32_t>> pairs) {
  CsrMatrix m;
  m.n_rows = n_rows;
  m.n_cols = n_cols;
  m.row_ptr.assign(static_cast<std::size_t>(n_rows) + 1, 0);

  std::vector<std::pair<std::uint32_t, std::uint32_t>> sorted(pairs.begin(), pairs.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

  for (const auto& [r, c] : sorted) {
    if (r >= n_rows || c >= n_cols)
      throw StructureError("edge (" + std::to_string(r) + ", " + std::to_string(c) +
                           ") is outside a " + std::to_string(n_rows) + "x" +
                           std::to_string(n_cols) + " matrix");
    ++m.row_ptr[r + 1];
  }
  for (std::uint32_t r = 0; r < n_rows; ++r) m.row_ptr[r + 1] += m.row_ptr[r];
  m.col.reserve(sorted.size());
  for (const auto& [r, c] : sorted) m.col.push_back(c);
  return m;
}

CsrMatrix CsrMatrix::transpose() const {
  CsrMatrix t;
  t.n_rows = n_cols;
  t.n_cols = n_rows;
  t.row_ptr.assign(static_cast<std::size_t>(n_cols) + 1, 0);
  for (const std::uint32_t c : col) ++t.row_ptr[c + 1];
  for (std::uint32_t c = 0; c < n_cols; ++c) t.row_ptr[c + 1] += t.row_ptr[c];

  t.col.resize(col.size());
  std::vector<std::uint64_t> cursor(t.row_ptr.begin(), t.row_ptr.end() - 1);
  for (std::uint32_t r = 0; r < n_rows; ++r)
    for (const std::uint32_t c : row(r)) t.col[cursor[c]++] = r;
  return t;
}

namespace {

// Symmetric adjacency over `n_nodes` global ids from undirected edge pairs
// given in one direction.
CsrMatrix symmetric_adjacency(
    std::uint32_t n_nodes,
    const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges) {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> both;
  both.reserve(edges.size() * 2);
  for (const auto& [a, b] : edges) {
    both.emplace_back(a, b);
    both.emplace_back(b, a);
  }
  return CsrMatrix::from_pairs(n_nodes, n_nodes, both);
}

std::vector<std::uint32_t> row_degrees(const CsrMatrix& m) {
  std::vector<std::uint32_t> d(m.n_rows);
  for (std::uint32_t r = 0; r < m.n_rows; ++r) d[r] = m.degree(r);
  return d;
}

}  // namespace

TripartiteGraph build_tripartite(std::uint32_t n_users, std::uint32_t n_items,
                                 std::uint32_t n_attrs,
                                 std::span<const Interaction> train,
                                 std::span<const AttrEdge> ua_edges,
                                 std::span<const AttrEdge> ia_edges) {
  if (n_users == 0 || n_items == 0)
    throw StructureError("tripartite graph requires at least one user and one item");

  for (const auto& [u, i] : train)
    if (u >= n_users || i >= n_items)
      throw StructureError("interaction (user " + std::to_string(u) + ", item " +
                           std::to_string(i) + ") dangles outside " +
                           std::to_string(n_users) + " users x " +
                           std::to_string(n_items) + " items");
  for (const auto& [u, a] : ua_edges)
    if (u >= n_users || a >= n_attrs)
      throw StructureError("user-attribute edge (user " + std::to_string(u) +
                           ", attribute " + std::to_string(a) + ") dangles outside " +
                           std::to_string(n_users) + " users x " +
                           std::to_string(n_attrs) + " attributes");
  for (const auto& [i, a] : ia_edges)
    if (i >= n_items || a >= n_attrs)
      throw StructureError("item-attribute edge (item " + std::to_string(i) +
                           ", attribute " + std::to_string(a) + ") dangles outside " +
                           std::to_string(n_items) + " items x " +
                           std::to_string(n_attrs) + " attributes");

  // Attributes with no incident edge carry no signal and would be isolated
  // nodes; drop them and compact the attribute index space.
  std::vector<bool> attr_used(n_attrs, false);
  for (const auto& e : ua_edges) attr_used[e.attr] = true;
  for (const auto& e : ia_edges) attr_used[e.attr] = true;

  TripartiteGraph g;
  g.n_users = n_users;
  g.n_items = n_items;
  std::vector<std::uint32_t> attr_remap(n_attrs, UINT32_MAX);
  for (std::uint32_t a = 0; a < n_attrs; ++a) {
    if (!attr_used[a]) continue;
    attr_remap[a] = static_cast<std::uint32_t>(g.attr_ids.size());
    g.attr_ids.push_back(a);
  }
  g.n_attrs = static_cast<std::uint32_t>(g.attr_ids.size());

  std::vector<std::pair<std::uint32_t, std::uint32_t>> ui_pairs, ua_pairs, ia_pairs;
  ui_pairs.reserve(train.size());
  for (const auto& [u, i] : train) ui_pairs.emplace_back(u, i);
  ua_pairs.reserve(ua_edges.size());
  for (const auto& [u, a] : ua_edges) ua_pairs.emplace_back(u, attr_remap[a]);
  ia_pairs.reserve(ia_edges.size());
  for (const auto& [i, a] : ia_edges) ia_pairs.emplace_back(i, attr_remap[a]);

  g.ui = CsrMatrix::from_pairs(n_users, n_items, ui_pairs);
  g.ua = CsrMatrix::from_pairs(n_users, g.n_attrs, ua_pairs);
  g.ia = CsrMatrix::from_pairs(n_items, g.n_attrs, ia_pairs);

  // Relation graphs over global node ids: users, then items, then attributes.
  // Diagonal blocks stay empty because every edge joins two different classes.
  const std::uint32_t n = g.n_nodes();
  std::vector<std::pair<std::uint32_t, std::uint32_t>> uai, ua_rel, ia_rel;
  for (std::uint32_t u = 0; u < n_users; ++u)
    for (const std::uint32_t i : g.ui.row(u)) uai.emplace_back(u, g.item_node(i));
  for (std::uint32_t u = 0; u < n_users; ++u)
    for (const std::uint32_t a : g.ua.row(u)) {
      uai.emplace_back(u, g.attr_node(a));
      ua_rel.emplace_back(u, g.attr_node(a));
    }
  for (std::uint32_t i = 0; i < n_items; ++i)
    for (const std::uint32_t a : g.ia.row(i)) {
      uai.emplace_back(g.item_node(i), g.attr_node(a));
      ia_rel.emplace_back(g.item_node(i), g.attr_node(a));
    }

  g.rel[0] = symmetric_adjacency(n, uai);
  g.rel[1] = symmetric_adjacency(n, ua_rel);
  g.rel[2] = symmetric_adjacency(n, ia_rel);
  for (int r = 0; r < 3; ++r) g.deg[r] = row_degrees(g.rel[r]);
  return g;
}

double norm_coefficient(const TripartiteGraph& g, Relation r, std::uint32_t v,
                        std::uint32_t w) {
  const std::uint32_t n = g.n_nodes();
  if (v >= n || w >= n)
    throw StructureError("node id out of range: " + std::to_string(v >= n ? v : w) +
                         " with " + std::to_string(n) + " nodes");
  if (!g.relation(r).has(v, w))
    throw StructureError("nodes " + std::to_string(v) + " and " + std::to_string(w) +
                         " are not adjacent in relation graph " + relation_name(r));
  const auto& deg = g.degrees(r);
  return 1.0 / std::sqrt(static_cast<double>(deg[v]) * static_cast<double>(deg[w]));
}

}  // namespace tagcf

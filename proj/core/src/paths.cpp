#include "tagcf/paths.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "tagcf/error.hpp"

namespace tagcf {

namespace {

// Count of common values between two sorted runs.
std::uint64_t intersection_size(std::span<const std::uint32_t> a,
                                std::span<const std::uint32_t> b) {
  std::uint64_t n = 0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] < b[j]) ++i;
    else if (b[j] < a[i]) ++j;
    else { ++n; ++i; ++j; }
  }
  return n;
}

}  // namespace

PathStats path_overlap_analysis(const TripartiteGraph& g,
                                std::span<const Interaction> test) {
  PathStats stats;
  stats.n_test = test.size();

  const CsrMatrix ua_t = g.ua.transpose();  // attr -> users
  const CsrMatrix ia_t = g.ia.transpose();  // attr -> items
  for (std::uint32_t a = 0; a < g.n_attrs; ++a)
    stats.total_2hop_paths += static_cast<std::uint64_t>(ua_t.degree(a)) *
                              static_cast<std::uint64_t>(ia_t.degree(a));

  // Distinct connected (u, i) pairs via a per-user stamp over items; the
  // walk visits every path once, so cost is total_2hop_paths.
  std::vector<std::uint32_t> stamp(g.n_items, 0);
  for (std::uint32_t u = 0; u < g.n_users; ++u) {
    const std::uint32_t mark = u + 1;
    for (const std::uint32_t a : g.ua.row(u))
      for (const std::uint32_t i : ia_t.row(a))
        if (stamp[i] != mark) {
          stamp[i] = mark;
          ++stats.connected_pairs;
        }
  }

  for (const auto& [u, i] : test) {
    if (u >= g.n_users || i >= g.n_items)
      throw StructureError("test interaction references a node outside the graph");
    const std::uint64_t paths = intersection_size(g.ua.row(u), g.ia.row(i));
    if (paths > 0) ++stats.covered_test;
    stats.test_path_mass += paths;
  }

  if (stats.n_test > 0)
    stats.overlap_ratio =
        static_cast<double>(stats.covered_test) / static_cast<double>(stats.n_test);
  if (stats.total_2hop_paths > 0)
    stats.overlap_ratio_alt = static_cast<double>(stats.test_path_mass) /
                              static_cast<double>(stats.total_2hop_paths);
  return stats;
}

std::vector<PathExample> sample_paths(const TripartiteGraph& g,
                                      std::span<const Interaction> test,
                                      std::size_t limit) {
  std::vector<std::vector<std::uint32_t>> test_by(g.n_users);
  for (const auto& [u, i] : test) test_by[u].push_back(i);
  for (auto& items : test_by) std::sort(items.begin(), items.end());

  const CsrMatrix ia_t = g.ia.transpose();
  std::vector<PathExample> out;
  for (std::uint32_t u = 0; u < g.n_users && out.size() < limit; ++u)
    for (const std::uint32_t a : g.ua.row(u)) {
      for (const std::uint32_t i : ia_t.row(a)) {
        const bool hit = std::binary_search(test_by[u].begin(), test_by[u].end(), i);
        out.push_back({u, a, i, hit});
        if (out.size() >= limit) break;
      }
      if (out.size() >= limit) break;
    }
  return out;
}

void write_path_stats_csv(const std::filesystem::path& path, const PathStats& stats) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write path stats csv: " + path.string());
  out << "total_2hop_paths,connected_pairs,overlap_ratio,overlap_ratio_alt\n";
  char buf[128];
  std::snprintf(buf, sizeof buf, "%llu,%llu,%.10g,%.10g\n",
                static_cast<unsigned long long>(stats.total_2hop_paths),
                static_cast<unsigned long long>(stats.connected_pairs),
                stats.overlap_ratio, stats.overlap_ratio_alt);
  out << buf;
  if (!out) throw IoError("write failure on " + path.string());
}

}  // namespace tagcf

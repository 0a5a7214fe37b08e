#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "tagcf/dataset.hpp"
#include "tagcf/graph.hpp"

namespace tagcf {

// Statistics of user-attribute-item 2-hop connectivity. The ratio column is
// the fraction of test interactions covered by at least one path; the alt
// ratio is the fraction of all paths that land on a test interaction. Both
// are reported because they answer different questions about the composite
// user-item adjacency.
struct PathStats {
  std::uint64_t total_2hop_paths = 0;   // sum over attrs of deg_UA * deg_IA
  std::uint64_t connected_pairs = 0;    // distinct (user, item) pairs with a path
  std::uint64_t covered_test = 0;       // test interactions with >= 1 path
  std::uint64_t test_path_mass = 0;     // paths whose endpoints are a test pair
  std::uint64_t n_test = 0;
  double overlap_ratio = 0.0;           // covered_test / n_test
  double overlap_ratio_alt = 0.0;       // test_path_mass / total_2hop_paths
};

// The graph must be built from train-only interactions so the paths measure
// what the model could exploit, not what it is being tested on.
PathStats path_overlap_analysis(const TripartiteGraph& g,
                                std::span<const Interaction> test);

struct PathExample {
  std::uint32_t user = 0;
  std::uint32_t attr = 0;  // graph-local attribute index
  std::uint32_t item = 0;
  bool in_test = false;
};

// First `limit` paths in (user, attr, item) lexicographic order.
std::vector<PathExample> sample_paths(const TripartiteGraph& g,
                                      std::span<const Interaction> test,
                                      std::size_t limit);

// Single data row under the header
// `total_2hop_paths,connected_pairs,overlap_ratio,overlap_ratio_alt`.
void write_path_stats_csv(const std::filesystem::path& path, const PathStats& stats);

}  // namespace tagcf

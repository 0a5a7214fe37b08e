#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <vector>

#include "tagcf/dataset.hpp"
#include "tagcf/graph.hpp"
#include "tagcf/model.hpp"

namespace tagcf {

// Which held-out interactions are scored, and therefore which positives are
// masked out of the candidate ranking: validation masks train only, test
// masks train and validation.
enum class EvalSplit { Validation, Test };

struct UserMetrics {
  std::uint32_t user = 0;
  std::map<std::uint32_t, double> recall;
  std::map<std::uint32_t, double> ndcg;
};

struct MetricReport {
  std::map<std::uint32_t, double> recall;
  std::map<std::uint32_t, double> ndcg;
  std::uint32_t n_users = 0;
  std::vector<UserMetrics> per_user;
};

struct EvalOptions {
  std::vector<std::uint32_t> k_set{5, 20};
  // When set (size n_items), only flagged items count as relevant; users
  // whose relevant set becomes empty are excluded from the averages.
  const std::vector<bool>* item_filter = nullptr;
  unsigned n_threads = 1;
  bool keep_per_user = true;
};

// |top-K of ranked ∩ relevant| / |relevant|. relevant must be sorted and
// non-empty; callers exclude empty-relevant users instead of scoring zero.
double recall_at_k(std::span<const std::uint32_t> ranked,
                   std::span<const std::uint32_t> relevant, std::uint32_t k);

// DCG over 1-based positions with gain 1/log2(pos+1), normalized by the
// ideal DCG over min(K, |relevant|) positions.
double ndcg_at_k(std::span<const std::uint32_t> ranked,
                 std::span<const std::uint32_t> relevant, std::uint32_t k);

// Scores every item for every user from the model's final embeddings, masks
// already-seen positives to the bottom of the ranking, and averages
// Recall@K / NDCG@K over users with at least one relevant item. Ties are
// broken by ascending item index; per-user values are accumulated in user
// order so results do not depend on n_threads.
MetricReport full_rank_evaluate(const Model& model, const TripartiteGraph& g,
                                const SplitDataset& split, EvalSplit eval_split,
                                const EvalOptions& options);

MetricReport full_rank_evaluate(const Model& model, const TripartiteGraph& g,
                                const SplitDataset& split, EvalSplit eval_split,
                                std::vector<std::uint32_t> k_set = {5, 20});

// CSV rows `metric,K,value,n_users`, recall rows before ndcg rows, K ascending.
void write_metrics_csv(const std::filesystem::path& path, const MetricReport& report);

}  // namespace tagcf

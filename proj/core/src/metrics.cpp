#include "tagcf/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <thread>

#include "tagcf/dense.hpp"
#include "tagcf/error.hpp"

namespace tagcf {

namespace {

bool contains_sorted(std::span<const std::uint32_t> sorted, std::uint32_t value) {
  return std::binary_search(sorted.begin(), sorted.end(), value);
}

}  // namespace

double recall_at_k(std::span<const std::uint32_t> ranked,
                   std::span<const std::uint32_t> relevant, std::uint32_t k) {
  if (relevant.empty())
    throw StructureError("recall is undefined for an empty relevant set");
  std::size_t hits = 0;
  const std::size_t limit = std::min<std::size_t>(k, ranked.size());
  for (std::size_t p = 0; p < limit; ++p)
    if (contains_sorted(relevant, ranked[p])) ++hits;
  return static_cast<double>(hits) / static_cast<double>(relevant.size());
}

double ndcg_at_k(std::span<const std::uint32_t> ranked,
                 std::span<const std::uint32_t> relevant, std::uint32_t k) {
  if (relevant.empty())
    throw StructureError("ndcg is undefined for an empty relevant set");
  double dcg = 0.0;
  const std::size_t limit = std::min<std::size_t>(k, ranked.size());
  for (std::size_t p = 0; p < limit; ++p)
    if (contains_sorted(relevant, ranked[p]))
      dcg += 1.0 / std::log2(static_cast<double>(p + 2));
  double idcg = 0.0;
  const std::size_t ideal = std::min<std::size_t>(k, relevant.size());
  for (std::size_t p = 0; p < ideal; ++p)
    idcg += 1.0 / std::log2(static_cast<double>(p + 2));
  return dcg / idcg;
}

namespace {

struct UserEvalResult {
  bool evaluated = false;
  std::vector<double> recall;  // aligned with the option's k_set
  std::vector<double> ndcg;
};

UserEvalResult evaluate_user(const Matrix& fin, const TripartiteGraph& g,
                             std::uint32_t user, std::span<const std::uint32_t> masked,
                             std::span<const std::uint32_t> relevant,
                             const EvalOptions& options, std::uint32_t max_k,
                             std::vector<std::uint32_t>& scratch_relevant,
                             std::vector<std::uint32_t>& scratch_order,
                             std::vector<double>& scratch_scores) {
  UserEvalResult out;
  scratch_relevant.clear();
  for (const std::uint32_t i : relevant)
    if (options.item_filter == nullptr || (*options.item_filter)[i])
      scratch_relevant.push_back(i);
  if (scratch_relevant.empty()) return out;

  const std::uint32_t d = fin.cols;
  const double* fu = fin.row(user);
  scratch_scores.resize(g.n_items);
  for (std::uint32_t i = 0; i < g.n_items; ++i)
    scratch_scores[i] = dot(fu, fin.row(g.item_node(i)), d);
  for (const std::uint32_t i : masked)
    scratch_scores[i] = -std::numeric_limits<double>::infinity();

  scratch_order.resize(g.n_items);
  std::iota(scratch_order.begin(), scratch_order.end(), 0u);
  const std::size_t top = std::min<std::size_t>(max_k, scratch_order.size());
  std::partial_sort(scratch_order.begin(), scratch_order.begin() + top, scratch_order.end(),
                    [&scratch_scores](std::uint32_t a, std::uint32_t b) {
                      if (scratch_scores[a] != scratch_scores[b])
                        return scratch_scores[a] > scratch_scores[b];
                      return a < b;
                    });
  const std::span<const std::uint32_t> ranked(scratch_order.data(), top);

  out.evaluated = true;
  out.recall.reserve(options.k_set.size());
  out.ndcg.reserve(options.k_set.size());
  for (const std::uint32_t k : options.k_set) {
    out.recall.push_back(recall_at_k(ranked, scratch_relevant, k));
    out.ndcg.push_back(ndcg_at_k(ranked, scratch_relevant, k));
  }
  return out;
}

}  // namespace

MetricReport full_rank_evaluate(const Model& model, const TripartiteGraph& g,
                                const SplitDataset& split, EvalSplit eval_split,
                                const EvalOptions& options) {
  if (options.k_set.empty()) throw ConfigError("k_set must be non-empty");
  for (const std::uint32_t k : options.k_set)
    if (k == 0) throw ConfigError("metric cutoffs must be positive");
  if (options.item_filter != nullptr && options.item_filter->size() != g.n_items)
    throw StructureError("item_filter size does not match the item count");

  const LayerState state = forward(g, model);
  const Matrix& fin = state.final;

  const auto train_by_user = interactions_by_user(split.train, g.n_users);
  const auto val_by_user = interactions_by_user(split.val, g.n_users);
  const auto test_by_user = interactions_by_user(split.test, g.n_users);

  // Masked = positives the model was allowed to see; relevant = held out.
  std::vector<std::vector<std::uint32_t>> masked(g.n_users);
  const auto& relevant_by_user =
      eval_split == EvalSplit::Validation ? val_by_user : test_by_user;
  for (std::uint32_t u = 0; u < g.n_users; ++u) {
    masked[u] = train_by_user[u];
    if (eval_split == EvalSplit::Test) {
      masked[u].insert(masked[u].end(), val_by_user[u].begin(), val_by_user[u].end());
      std::sort(masked[u].begin(), masked[u].end());
    }
  }

  std::uint32_t max_k = 0;
  for (const std::uint32_t k : options.k_set) max_k = std::max(max_k, k);

  std::vector<UserEvalResult> results(g.n_users);
  const unsigned n_threads =
      std::max(1u, std::min<unsigned>(options.n_threads, g.n_users == 0 ? 1u : g.n_users));
  if (n_threads == 1) {
    std::vector<std::uint32_t> sr, so;
    std::vector<double> ss;
    for (std::uint32_t u = 0; u < g.n_users; ++u)
      results[u] = evaluate_user(fin, g, u, masked[u], relevant_by_user[u], options,
                                 max_k, sr, so, ss);
  } else {
    std::atomic<std::uint32_t> next{0};
    auto worker = [&] {
      std::vector<std::uint32_t> sr, so;
      std::vector<double> ss;
      for (;;) {
        const std::uint32_t u = next.fetch_add(1);
        if (u >= g.n_users) return;
        results[u] = evaluate_user(fin, g, u, masked[u], relevant_by_user[u], options,
                                   max_k, sr, so, ss);
      }
    };
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  // Sequential accumulation in user order keeps the sums independent of the
  // thread count.
  MetricReport report;
  std::vector<double> recall_sum(options.k_set.size(), 0.0);
  std::vector<double> ndcg_sum(options.k_set.size(), 0.0);
  for (std::uint32_t u = 0; u < g.n_users; ++u) {
    const UserEvalResult& r = results[u];
    if (!r.evaluated) continue;
    ++report.n_users;
    for (std::size_t t = 0; t < options.k_set.size(); ++t) {
      recall_sum[t] += r.recall[t];
      ndcg_sum[t] += r.ndcg[t];
    }
    if (options.keep_per_user) {
      UserMetrics um;
      um.user = u;
      for (std::size_t t = 0; t < options.k_set.size(); ++t) {
        um.recall[options.k_set[t]] = r.recall[t];
        um.ndcg[options.k_set[t]] = r.ndcg[t];
      }
      report.per_user.push_back(std::move(um));
    }
  }
  for (std::size_t t = 0; t < options.k_set.size(); ++t) {
    const double n = report.n_users > 0 ? static_cast<double>(report.n_users) : 1.0;
    report.recall[options.k_set[t]] = recall_sum[t] / n;
    report.ndcg[options.k_set[t]] = ndcg_sum[t] / n;
  }
  return report;
}

MetricReport full_rank_evaluate(const Model& model, const TripartiteGraph& g,
                                const SplitDataset& split, EvalSplit eval_split,
                                std::vector<std::uint32_t> k_set) {
  EvalOptions options;
  options.k_set = std::move(k_set);
  options.keep_per_user = false;
  return full_rank_evaluate(model, g, split, eval_split, options);
}

void write_metrics_csv(const std::filesystem::path& path, const MetricReport& report) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write metrics csv: " + path.string());
  out << "metric,K,value,n_users\n";
  char buf[96];
  for (const auto& [k, value] : report.recall) {
    std::snprintf(buf, sizeof buf, "recall,%u,%.10g,%u\n", k, value, report.n_users);
    out << buf;
  }
  for (const auto& [k, value] : report.ndcg) {
    std::snprintf(buf, sizeof buf, "ndcg,%u,%.10g,%u\n", k, value, report.n_users);
    out << buf;
  }
  if (!out) throw IoError("write failure on " + path.string());
}

}  // namespace tagcf

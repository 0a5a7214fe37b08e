#include "tagcf/synthetic.hpp"

#include <array>
#include <fstream>

#include <nlohmann/json.hpp>

#include "tagcf/error.hpp"
#include "tagcf/rng.hpp"

namespace tagcf {

void SyntheticConfig::validate() const {
  if (n_users == 0 || n_items == 0 || n_topics == 0 || interactions_per_user == 0)
    throw ConfigError("synthetic generator counts must all be positive");
  if (noise_rate < 0.0 || noise_rate >= 1.0)
    throw ConfigError("noise_rate must lie in [0, 1)");
  if (interactions_per_user > n_items)
    throw ConfigError("interactions_per_user (" + std::to_string(interactions_per_user) +
                      ") exceeds n_items (" + std::to_string(n_items) + ")");
  if (n_topics > n_items)
    throw ConfigError("n_topics (" + std::to_string(n_topics) + ") exceeds n_items (" +
                      std::to_string(n_items) + "); every topic needs at least one item");
}

namespace {

// Swap-and-pop uniform draw from a pool of candidate items.
std::uint32_t draw_from(std::vector<std::uint32_t>& pool, Rng& rng) {
  const std::size_t j = static_cast<std::size_t>(rng.uniform_below(pool.size()));
  const std::uint32_t picked = pool[j];
  pool[j] = pool.back();
  pool.pop_back();
  return picked;
}

// Review keyword vocabulary: three single-token keywords per topic, disjoint
// across topics. Surrounding template words are deliberately common filler so
// keyword samplers can drop them with a stopword list.
std::array<std::string, 3> topic_keywords(std::uint32_t topic) {
  const std::string t = std::to_string(topic);
  return {"genre" + t + "alpha", "genre" + t + "bravo", "genre" + t + "coda"};
}

}  // namespace

SyntheticData generate_synthetic(const SyntheticConfig& cfg) {
  cfg.validate();

  SyntheticData data;
  data.seed = cfg.seed;
  data.user_topic.resize(cfg.n_users);
  data.item_topic.resize(cfg.n_items);
  for (std::uint32_t t = 0; t < cfg.n_topics; ++t)
    data.topic_labels.push_back("topic_" + std::to_string(t));
  for (std::uint32_t u = 0; u < cfg.n_users; ++u) data.user_topic[u] = u % cfg.n_topics;
  for (std::uint32_t i = 0; i < cfg.n_items; ++i) data.item_topic[i] = i % cfg.n_topics;

  for (std::uint32_t u = 0; u < cfg.n_users; ++u)
    data.dataset.intern_user("u" + std::to_string(u));
  for (std::uint32_t i = 0; i < cfg.n_items; ++i)
    data.dataset.intern_item("i" + std::to_string(i));

  std::vector<std::vector<std::uint32_t>> items_of_topic(cfg.n_topics);
  for (std::uint32_t i = 0; i < cfg.n_items; ++i)
    items_of_topic[data.item_topic[i]].push_back(i);

  const Rng root(cfg.seed);
  for (std::uint32_t u = 0; u < cfg.n_users; ++u) {
    Rng rng = root.child(u);
    std::vector<std::uint32_t> in_pool = items_of_topic[data.user_topic[u]];
    std::vector<std::uint32_t> off_pool;
    off_pool.reserve(cfg.n_items - in_pool.size());
    for (std::uint32_t i = 0; i < cfg.n_items; ++i)
      if (data.item_topic[i] != data.user_topic[u]) off_pool.push_back(i);

    for (std::uint32_t k = 0; k < cfg.interactions_per_user; ++k) {
      const bool want_in_topic = rng.uniform01() >= cfg.noise_rate;
      std::vector<std::uint32_t>* pool = want_in_topic ? &in_pool : &off_pool;
      if (pool->empty()) pool = want_in_topic ? &off_pool : &in_pool;

      const std::uint32_t item = draw_from(*pool, rng);
      data.dataset.interactions.push_back({u, item});
      data.in_topic.push_back(data.item_topic[item] == data.user_topic[u]);

      const std::uint32_t t = data.item_topic[item];
      const auto kws = topic_keywords(t);
      // Pick two distinct keywords; occasionally upper-case the first one so
      // downstream normalization has real work to do.
      const std::size_t k1 = static_cast<std::size_t>(rng.uniform_below(3));
      std::size_t k2 = static_cast<std::size_t>(rng.uniform_below(2));
      if (k2 >= k1) ++k2;
      std::string kw1 = kws[k1];
      if (rng.uniform01() < 0.25) kw1[0] = static_cast<char>(kw1[0] - 'a' + 'A');

      SyntheticReview review;
      review.category = data.topic_labels[t];
      review.title = "Item " + std::to_string(item);
      review.text = "Really loved this " + data.topic_labels[t] + " item, " + kw1 +
                    " and " + kws[k2] + " all the way";
      data.reviews.push_back(std::move(review));
    }
  }

  // Planted direct edges: the user side inherits interaction noise, the item
  // side is exact.
  for (const auto& [u, i] : data.dataset.interactions)
    data.ua_edges.push_back({u, data.item_topic[i]});
  for (std::uint32_t i = 0; i < cfg.n_items; ++i)
    data.ia_edges.push_back({i, data.item_topic[i]});
  return data;
}

void write_synthetic_files(const SyntheticData& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_interactions(dir / "interactions.tsv", data.dataset);

  {
    std::ofstream out(dir / "topics.tsv");
    if (!out) throw IoError("cannot write " + (dir / "topics.tsv").string());
    for (std::uint32_t u = 0; u < data.dataset.n_users(); ++u)
      out << "user\t" << data.dataset.user_ids[u] << '\t'
          << data.topic_labels[data.user_topic[u]] << '\n';
    for (std::uint32_t i = 0; i < data.dataset.n_items(); ++i)
      out << "item\t" << data.dataset.item_ids[i] << '\t'
          << data.topic_labels[data.item_topic[i]] << '\n';
    if (!out) throw IoError("write failure on " + (dir / "topics.tsv").string());
  }

  {
    std::ofstream out(dir / "reviews.jsonl");
    if (!out) throw IoError("cannot write " + (dir / "reviews.jsonl").string());
    for (std::size_t k = 0; k < data.dataset.interactions.size(); ++k) {
      const auto& [u, i] = data.dataset.interactions[k];
      const auto& r = data.reviews[k];
      const nlohmann::json row = {
          {"user", data.dataset.user_ids[u]},
          {"item", data.dataset.item_ids[i]},
          {"review", r.text},
          {"metadata", {{"title", r.title}, {"category", r.category}}},
      };
      out << row.dump() << '\n';
    }
    if (!out) throw IoError("write failure on " + (dir / "reviews.jsonl").string());
  }

  {
    std::ofstream out(dir / "items.jsonl");
    if (!out) throw IoError("cannot write " + (dir / "items.jsonl").string());
    for (std::uint32_t i = 0; i < data.dataset.n_items(); ++i) {
      const nlohmann::json row = {
          {"item", data.dataset.item_ids[i]},
          {"metadata",
           {{"title", "Item " + std::to_string(i)},
            {"category", data.topic_labels[data.item_topic[i]]}}},
      };
      out << row.dump() << '\n';
    }
    if (!out) throw IoError("write failure on " + (dir / "items.jsonl").string());
  }

  const SplitDataset split = split_dataset(data.dataset, data.seed);
  write_split_manifest(dir / "split.tsv", data.dataset, split);
}

}  // namespace tagcf

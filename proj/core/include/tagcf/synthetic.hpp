#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tagcf/dataset.hpp"
#include "tagcf/graph.hpp"

namespace tagcf {

struct SyntheticConfig {
  std::uint32_t n_users = 300;
  std::uint32_t n_items = 300;
  std::uint32_t n_topics = 20;
  std::uint32_t interactions_per_user = 15;
  double noise_rate = 0.1;
  std::uint64_t seed = 42;

  void validate() const;
};

// One generated review per interaction, aligned with
// SyntheticData::dataset.interactions. The text and the metadata category
// describe the item's planted topic, so attribute extraction over a review
// recovers the user's own topic exactly when the interaction is within-topic.
struct SyntheticReview {
  std::string text;
  std::string title;
  std::string category;
};

struct SyntheticData {
  std::uint64_t seed = 0;
  InteractionDataset dataset;
  std::vector<std::uint32_t> user_topic;  // per user index
  std::vector<std::uint32_t> item_topic;  // per item index
  std::vector<std::string> topic_labels;  // topic -> attribute string
  std::vector<bool> in_topic;             // per interaction: item topic == user topic
  std::vector<SyntheticReview> reviews;   // per interaction

  // Direct planted attribute edges (attribute id = topic id). U-A edges come
  // from the interaction log and therefore inherit its noise; I-A edges tie
  // each item to its own topic.
  std::vector<AttrEdge> ua_edges;
  std::vector<AttrEdge> ia_edges;
};

// Planted-topic interaction generator. Users and items get round-robin topic
// assignments; each user draws `interactions_per_user` distinct items, from
// their own topic with probability 1 - noise_rate and uniformly from other
// topics otherwise (falling back to the opposite pool only when one side is
// exhausted). Deterministic per seed.
SyntheticData generate_synthetic(const SyntheticConfig& cfg);

// Emits interactions.tsv, split.tsv (same seed), topics.tsv, reviews.jsonl,
// and items.jsonl into `dir`.
void write_synthetic_files(const SyntheticData& data, const std::filesystem::path& dir);

}  // namespace tagcf

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace tagcf {

struct Interaction {
  std::uint32_t user = 0;
  std::uint32_t item = 0;

  friend bool operator==(const Interaction&, const Interaction&) = default;
};

// Interaction log with dense user/item indices. Indices are assigned in order
// of first appearance in the source file, so reloading the same file always
// yields the same mapping.
struct InteractionDataset {
  std::vector<std::string> user_ids;  // index -> external id
  std::vector<std::string> item_ids;
  std::unordered_map<std::string, std::uint32_t> user_index;
  std::unordered_map<std::string, std::uint32_t> item_index;
  std::vector<Interaction> interactions;

  std::uint32_t n_users() const { return static_cast<std::uint32_t>(user_ids.size()); }
  std::uint32_t n_items() const { return static_cast<std::uint32_t>(item_ids.size()); }

  std::optional<std::uint32_t> find_user(const std::string& id) const;
  std::optional<std::uint32_t> find_item(const std::string& id) const;

  // Inserts the id if unseen and returns its dense index.
  std::uint32_t intern_user(const std::string& id);
  std::uint32_t intern_item(const std::string& id);
};

// Reads `user_id<TAB>item_id[<TAB>unix_timestamp]` rows. Blank lines and lines
// starting with '#' are skipped. Duplicate (user, item) pairs collapse to one
// interaction; an optional timestamp column is accepted and ignored.
InteractionDataset load_interactions(const std::filesystem::path& path);

void write_interactions(const std::filesystem::path& path, const InteractionDataset& ds);

// Iteratively removes users and items with degree < k until a fixed point,
// then reindexes the survivors densely (original relative order preserved).
// Throws EmptyCoreError if nothing survives.
InteractionDataset kcore_filter(const InteractionDataset& ds, std::uint32_t k);

struct SplitDataset {
  std::vector<Interaction> train;
  std::vector<Interaction> val;
  std::vector<Interaction> test;
  std::uint64_t seed = 0;

  std::size_t total() const { return train.size() + val.size() + test.size(); }
};

// Per-user 3:1:1 split of the interaction log. Each user's interactions are
// shuffled with a user-keyed child of `seed`, then cut so that with
// n = 5q + r the train part gets 3q plus any remainder beyond what val takes:
// r of {0,1,2} puts the first extra in train and the second in val. Users
// with fewer than 3 interactions make the ratio meaningless and are a hard
// error.
SplitDataset split_dataset(const InteractionDataset& ds, std::uint64_t seed);

// `user_id<TAB>item_id<TAB>{train|val|test}` rows, external ids.
void write_split_manifest(const std::filesystem::path& path,
                          const InteractionDataset& ds, const SplitDataset& split);

// Loads a manifest and checks it covers exactly the dataset's interactions:
// unknown ids, duplicate pairs, or missing pairs are structural errors.
SplitDataset load_split_manifest(const std::filesystem::path& path,
                                 const InteractionDataset& ds);

// Per-user positive sets from a list of interactions, as sorted item vectors.
std::vector<std::vector<std::uint32_t>> interactions_by_user(
    std::span<const Interaction> interactions, std::uint32_t n_users);

}  // namespace tagcf

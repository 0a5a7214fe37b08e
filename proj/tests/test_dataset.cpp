#include <doctest.h>

#include <algorithm>
#include <array>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "tagcf/dataset.hpp"
#include "tagcf/error.hpp"
#include "tagcf/rng.hpp"
#include "test_util.hpp"

using namespace tagcf;
using testutil::TempDir;
using testutil::write_file;

namespace {

InteractionDataset load_text(const TempDir& dir, const std::string& text,
                             const std::string& name = "ix.tsv") {
  write_file(dir.file(name), text);
  return load_interactions(dir.file(name));
}

using PairSet = std::set<std::pair<std::string, std::string>>;

PairSet external_pairs(const InteractionDataset& ds) {
  PairSet out;
  for (const auto& [u, i] : ds.interactions) out.insert({ds.user_ids[u], ds.item_ids[i]});
  return out;
}

// Independent k-core oracle: repeatedly drop low-degree endpoints from the
// external-id pair set until nothing changes.
PairSet kcore_oracle(PairSet pairs, std::uint32_t k) {
  bool changed = true;
  while (changed) {
    changed = false;
    std::map<std::string, int> udeg, ideg;
    for (const auto& [u, i] : pairs) {
      ++udeg[u];
      ++ideg[i];
    }
    PairSet next;
    for (const auto& p : pairs)
      if (udeg[p.first] >= static_cast<int>(k) && ideg[p.second] >= static_cast<int>(k))
        next.insert(p);
    if (next.size() != pairs.size()) changed = true;
    pairs = std::move(next);
  }
  return pairs;
}

}  // namespace

TEST_CASE("loader counts users, items, and interactions") {
  TempDir dir;
  const auto ds = load_text(dir, "u1\ti1\nu1\ti2\nu2\ti1\n");
  CHECK(ds.n_users() == 2);
  CHECK(ds.n_items() == 2);
  CHECK(ds.interactions.size() == 3);
}

TEST_CASE("loader assigns dense indices in first-appearance order") {
  TempDir dir;
  const auto ds = load_text(dir, "bob\tx\nalice\ty\nbob\tz\n");
  CHECK(ds.user_ids == std::vector<std::string>{"bob", "alice"});
  CHECK(ds.item_ids == std::vector<std::string>{"x", "y", "z"});
  CHECK(ds.find_user("alice") == 1);
  CHECK(ds.find_item("z") == 2);
  CHECK(!ds.find_user("carol").has_value());
}

TEST_CASE("loader collapses duplicate pairs and skips comments and blanks") {
  TempDir dir;
  const auto ds = load_text(dir, "# header comment\nu1\ti1\n\nu1\ti1\nu1\ti1\t1234\n");
  CHECK(ds.interactions.size() == 1);
}

TEST_CASE("loader accepts an integer timestamp column and CRLF endings") {
  TempDir dir;
  const auto ds = load_text(dir, "u1\ti1\t1700000000\r\nu2\ti2\t-5\r\n");
  CHECK(ds.interactions.size() == 2);
}

TEST_CASE("loader rejects malformed rows with the offending line number") {
  TempDir dir;
  CHECK_THROWS_WITH_AS(load_text(dir, "u1\ti1\nonly_one_field\n"),
                       doctest::Contains(":2:"), ParseError);
  CHECK_THROWS_WITH_AS(load_text(dir, "u1\ti1\tnot_a_number\n"),
                       doctest::Contains("timestamp"), ParseError);
  CHECK_THROWS_WITH_AS(load_text(dir, "\ti1\n"), doctest::Contains("empty user id"),
                       ParseError);
  CHECK_THROWS_AS(load_text(dir, "a\tb\tc\td\n"), ParseError);
}

TEST_CASE("loader rejects files with no interactions") {
  TempDir dir;
  CHECK_THROWS_AS(load_text(dir, ""), ParseError);
  CHECK_THROWS_AS(load_text(dir, "# only a comment\n"), ParseError);
  CHECK_THROWS_AS(load_interactions(dir.file("missing.tsv")), IoError);
}

TEST_CASE("write_interactions round-trips ids and pairs") {
  TempDir dir;
  const auto ds = load_text(dir, "u2\tb\nu1\ta\nu2\ta\n");
  write_interactions(dir.file("out.tsv"), ds);
  const auto again = load_interactions(dir.file("out.tsv"));
  CHECK(again.user_ids == ds.user_ids);
  CHECK(again.item_ids == ds.item_ids);
  CHECK(again.interactions == ds.interactions);
}

TEST_CASE("loader handles a catalog-scale log exactly") {
  // 5,486 users with 9 interactions and 852 with 8 over 4,461 items:
  // 56,190 unique pairs by construction (709 is coprime to 4461).
  std::string text;
  text.reserve(60u * 56190u);
  for (std::uint32_t u = 0; u < 6338; ++u) {
    const std::uint32_t per = u < 5486 ? 9 : 8;
    for (std::uint32_t j = 0; j < per; ++j) {
      const std::uint32_t i = (u + 709 * j) % 4461;
      text += "u" + std::to_string(u) + "\ti" + std::to_string(i) + "\n";
    }
  }
  TempDir dir;
  const auto ds = load_text(dir, text);
  CHECK(ds.n_users() == 6338);
  CHECK(ds.n_items() == 4461);
  CHECK(ds.interactions.size() == 56190);

  write_interactions(dir.file("roundtrip.tsv"), ds);
  const auto again = load_interactions(dir.file("roundtrip.tsv"));
  CHECK(again.interactions.size() == 56190);
  CHECK(again.user_ids == ds.user_ids);
}

TEST_CASE("k-core prunes a star graph to an empty core") {
  TempDir dir;
  const auto ds = load_text(dir, "u\ta\nu\tb\nu\tc\nu\td\nu\te\n");
  CHECK_THROWS_AS(kcore_filter(ds, 2), EmptyCoreError);
}

TEST_CASE("k-core leaves a complete 3x3 bipartite graph unchanged") {
  std::string text;
  for (int u = 0; u < 3; ++u)
    for (int i = 0; i < 3; ++i)
      text += "u" + std::to_string(u) + "\ti" + std::to_string(i) + "\n";
  TempDir dir;
  const auto ds = load_text(dir, text);
  const auto core = kcore_filter(ds, 3);
  CHECK(external_pairs(core) == external_pairs(ds));
}

TEST_CASE("k-core equals the iterative-pruning oracle on random graphs") {
  Rng rng(2024);
  for (int trial = 0; trial < 8; ++trial) {
    std::string text;
    std::set<std::pair<int, int>> used;
    for (int e = 0; e < 260; ++e) {
      const int u = static_cast<int>(rng.uniform_below(50));
      const int i = static_cast<int>(rng.uniform_below(50));
      if (!used.insert({u, i}).second) continue;
      text += "u" + std::to_string(u) + "\ti" + std::to_string(i) + "\n";
    }
    TempDir dir;
    const auto ds = load_text(dir, text);
    const PairSet expected = kcore_oracle(external_pairs(ds), 3);
    if (expected.empty()) {
      CHECK_THROWS_AS(kcore_filter(ds, 3), EmptyCoreError);
      continue;
    }
    const auto core = kcore_filter(ds, 3);
    CHECK(external_pairs(core) == expected);

    // Fixed point: filtering the core again is the identity.
    const auto again = kcore_filter(core, 3);
    CHECK(external_pairs(again) == expected);
    CHECK(again.user_ids == core.user_ids);
  }
}

TEST_CASE("k-core validates its threshold") {
  TempDir dir;
  const auto ds = load_text(dir, "u\ta\n");
  CHECK_THROWS_AS(kcore_filter(ds, 0), ConfigError);
  CHECK(external_pairs(kcore_filter(ds, 1)) == external_pairs(ds));
}

TEST_CASE("split applies the 3:1:1 rule per user") {
  auto counts_for = [](int n) {
    std::string text;
    for (int j = 0; j < n; ++j) text += "u\ti" + std::to_string(j) + "\n";
    TempDir dir;
    write_file(dir.file("ix.tsv"), text);
    const auto ds = load_interactions(dir.file("ix.tsv"));
    const auto split = split_dataset(ds, 1);
    return std::array<std::size_t, 3>{split.train.size(), split.val.size(),
                                      split.test.size()};
  };
  CHECK(counts_for(5) == std::array<std::size_t, 3>{3, 1, 1});
  CHECK(counts_for(7) == std::array<std::size_t, 3>{5, 1, 1});
  CHECK(counts_for(3) == std::array<std::size_t, 3>{2, 1, 0});
  CHECK(counts_for(10) == std::array<std::size_t, 3>{6, 2, 2});
  CHECK(counts_for(12) == std::array<std::size_t, 3>{8, 2, 2});
}

TEST_CASE("split rejects users with fewer than 3 interactions") {
  TempDir dir;
  const auto ds = load_text(dir, "u1\ta\nu1\tb\nu1\tc\nu2\ta\nu2\tb\n");
  CHECK_THROWS_WITH_AS(split_dataset(ds, 1), doctest::Contains("u2"), StructureError);
}

TEST_CASE("split partitions the interaction set for any seed") {
  Rng rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    std::string text;
    for (int u = 0; u < 12; ++u) {
      const int n = 3 + static_cast<int>(rng.uniform_below(9));
      std::set<int> items;
      while (static_cast<int>(items.size()) < n)
        items.insert(static_cast<int>(rng.uniform_below(40)));
      for (const int i : items)
        text += "u" + std::to_string(u) + "\ti" + std::to_string(i) + "\n";
    }
    TempDir dir;
    const auto ds = load_text(dir, text);
    const auto split = split_dataset(ds, rng.next_u64());

    CHECK(split.total() == ds.interactions.size());
    std::set<std::pair<std::uint32_t, std::uint32_t>> all;
    for (const auto* part : {&split.train, &split.val, &split.test})
      for (const auto& [u, i] : *part) CHECK(all.insert({u, i}).second);
    CHECK(all.size() == ds.interactions.size());

    // Every user keeps training history.
    std::set<std::uint32_t> train_users;
    for (const auto& [u, i] : split.train) train_users.insert(u);
    CHECK(train_users.size() == ds.n_users());
  }
}

TEST_CASE("split is deterministic per seed") {
  std::string text;
  for (int u = 0; u < 6; ++u)
    for (int i = 0; i < 7; ++i)
      text += "u" + std::to_string(u) + "\ti" + std::to_string(i) + "\n";
  TempDir dir;
  const auto ds = load_text(dir, text);
  const auto a = split_dataset(ds, 99);
  const auto b = split_dataset(ds, 99);
  const auto c = split_dataset(ds, 100);
  CHECK(a.train == b.train);
  CHECK(a.val == b.val);
  CHECK(a.test == b.test);
  CHECK(a.train != c.train);
}

TEST_CASE("split manifest round-trips through write and load") {
  std::string text;
  for (int u = 0; u < 5; ++u)
    for (int i = 0; i < 8; ++i)
      text += "u" + std::to_string(u) + "\ti" + std::to_string(i + u) + "\n";
  TempDir dir;
  const auto ds = load_text(dir, text);
  const auto split = split_dataset(ds, 7);
  write_split_manifest(dir.file("split.tsv"), ds, split);
  const auto loaded = load_split_manifest(dir.file("split.tsv"), ds);

  auto as_set = [](const std::vector<Interaction>& v) {
    std::set<std::pair<std::uint32_t, std::uint32_t>> s;
    for (const auto& [u, i] : v) s.insert({u, i});
    return s;
  };
  CHECK(as_set(loaded.train) == as_set(split.train));
  CHECK(as_set(loaded.val) == as_set(split.val));
  CHECK(as_set(loaded.test) == as_set(split.test));
}

TEST_CASE("split manifest loader rejects incomplete or inconsistent files") {
  TempDir dir;
  const auto ds = load_text(dir, "u1\ta\nu1\tb\nu1\tc\n");

  write_file(dir.file("missing.tsv"), "u1\ta\ttrain\nu1\tb\tval\n");
  CHECK_THROWS_AS(load_split_manifest(dir.file("missing.tsv"), ds), StructureError);

  write_file(dir.file("unknown.tsv"),
             "u1\ta\ttrain\nu1\tb\tval\nu1\tc\ttest\nu9\ta\ttrain\n");
  CHECK_THROWS_AS(load_split_manifest(dir.file("unknown.tsv"), ds), Error);

  write_file(dir.file("dup.tsv"), "u1\ta\ttrain\nu1\ta\tval\nu1\tb\tval\nu1\tc\ttest\n");
  CHECK_THROWS_AS(load_split_manifest(dir.file("dup.tsv"), ds), Error);

  write_file(dir.file("badtag.tsv"), "u1\ta\ttrain\nu1\tb\tval\nu1\tc\tholdout\n");
  CHECK_THROWS_AS(load_split_manifest(dir.file("badtag.tsv"), ds), Error);
}

TEST_CASE("interactions_by_user groups and sorts item lists") {
  const std::vector<Interaction> ix = {{1, 5}, {0, 3}, {1, 2}, {0, 9}, {1, 7}};
  const auto by_user = interactions_by_user(ix, 3);
  REQUIRE(by_user.size() == 3);
  CHECK(by_user[0] == std::vector<std::uint32_t>{3, 9});
  CHECK(by_user[1] == std::vector<std::uint32_t>{2, 5, 7});
  CHECK(by_user[2].empty());
}

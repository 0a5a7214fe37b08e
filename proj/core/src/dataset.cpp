#include "tagcf/dataset.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "tagcf/error.hpp"
#include "tagcf/rng.hpp"

namespace tagcf {

namespace {

std::uint64_t pair_key(std::uint32_t a, std::uint32_t b) {
  return (static_cast<std::uint64_t>(a) << 32) | b;
}

[[noreturn]] void parse_fail(const std::filesystem::path& path, std::size_t line,
                             const std::string& what) {
  throw ParseError(path.string() + ":" + std::to_string(line) + ": " + what);
}

// Splits on single tab characters. Empty fields are preserved so they can be
// rejected with a precise message.
std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

bool is_integer(const std::string& s) {
  if (s.empty()) return false;
  std::size_t i = (s[0] == '-' || s[0] == '+') ? 1 : 0;
  if (i == s.size()) return false;
  for (; i < s.size(); ++i)
    if (s[i] < '0' || s[i] > '9') return false;
  return true;
}

}  // namespace

std::optional<std::uint32_t> InteractionDataset::find_user(const std::string& id) const {
  auto it = user_index.find(id);
  if (it == user_index.end()) return std::nullopt;
  return it->second;
}

std::optional<std::uint32_t> InteractionDataset::find_item(const std::string& id) const {
  auto it = item_index.find(id);
  if (it == item_index.end()) return std::nullopt;
  return it->second;
}

std::uint32_t InteractionDataset::intern_user(const std::string& id) {
  auto it = user_index.find(id);
  if (it != user_index.end()) return it->second;
  const auto idx = static_cast<std::uint32_t>(user_ids.size());
  user_ids.push_back(id);
  user_index.emplace(id, idx);
  return idx;
}

std::uint32_t InteractionDataset::intern_item(const std::string& id) {
  auto it = item_index.find(id);
  if (it != item_index.end()) return it->second;
  const auto idx = static_cast<std::uint32_t>(item_ids.size());
  item_ids.push_back(id);
  item_index.emplace(id, idx);
  return idx;
}

InteractionDataset load_interactions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open interactions file: " + path.string());

  InteractionDataset ds;
  std::unordered_set<std::uint64_t> seen;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = strip_cr(raw);
    if (line.empty() || line[0] == '#') continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 2 && fields.size() != 3)
      parse_fail(path, line_no,
                 "expected 2 or 3 tab-separated fields, got " + std::to_string(fields.size()));
    if (fields[0].empty()) parse_fail(path, line_no, "empty user id");
    if (fields[1].empty()) parse_fail(path, line_no, "empty item id");
    if (fields.size() == 3 && !is_integer(fields[2]))
      parse_fail(path, line_no, "timestamp is not an integer: '" + fields[2] + "'");

    const std::uint32_t u = ds.intern_user(fields[0]);
    const std::uint32_t i = ds.intern_item(fields[1]);
    if (seen.insert(pair_key(u, i)).second) ds.interactions.push_back({u, i});
  }
  if (in.bad()) throw IoError("read failure on " + path.string());
  if (ds.interactions.empty())
    throw ParseError(path.string() + ": no interactions found");
  return ds;
}

void write_interactions(const std::filesystem::path& path, const InteractionDataset& ds) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write interactions file: " + path.string());
  for (const auto& [u, i] : ds.interactions)
    out << ds.user_ids[u] << '\t' << ds.item_ids[i] << '\n';
  if (!out) throw IoError("write failure on " + path.string());
}

InteractionDataset kcore_filter(const InteractionDataset& ds, std::uint32_t k) {
  if (k == 0) throw ConfigError("k-core filtering requires k >= 1");

  // Adjacency by index; parallel edges cannot occur (loader deduplicates).
  std::vector<std::vector<std::uint32_t>> user_items(ds.n_users());
  std::vector<std::vector<std::uint32_t>> item_users(ds.n_items());
  for (const auto& [u, i] : ds.interactions) {
    user_items[u].push_back(i);
    item_users[i].push_back(u);
  }

  std::vector<std::uint32_t> udeg(ds.n_users()), ideg(ds.n_items());
  for (std::uint32_t u = 0; u < ds.n_users(); ++u)
    udeg[u] = static_cast<std::uint32_t>(user_items[u].size());
  for (std::uint32_t i = 0; i < ds.n_items(); ++i)
    ideg[i] = static_cast<std::uint32_t>(item_users[i].size());

  std::vector<bool> user_dead(ds.n_users(), false), item_dead(ds.n_items(), false);
  // Worklist of nodes that just dropped below k. Users and items share the
  // queue; items are offset by n_users.
  std::vector<std::uint32_t> queue;
  for (std::uint32_t u = 0; u < ds.n_users(); ++u)
    if (udeg[u] < k) { user_dead[u] = true; queue.push_back(u); }
  for (std::uint32_t i = 0; i < ds.n_items(); ++i)
    if (ideg[i] < k) { item_dead[i] = true; queue.push_back(ds.n_users() + i); }

  while (!queue.empty()) {
    const std::uint32_t node = queue.back();
    queue.pop_back();
    if (node < ds.n_users()) {
      for (const std::uint32_t i : user_items[node]) {
        if (item_dead[i]) continue;
        if (--ideg[i] < k) { item_dead[i] = true; queue.push_back(ds.n_users() + i); }
      }
    } else {
      const std::uint32_t i = node - ds.n_users();
      for (const std::uint32_t u : item_users[i]) {
        if (user_dead[u]) continue;
        if (--udeg[u] < k) { user_dead[u] = true; queue.push_back(u); }
      }
    }
  }

  InteractionDataset out;
  for (std::uint32_t u = 0; u < ds.n_users(); ++u)
    if (!user_dead[u]) out.intern_user(ds.user_ids[u]);
  for (std::uint32_t i = 0; i < ds.n_items(); ++i)
    if (!item_dead[i]) out.intern_item(ds.item_ids[i]);
  if (out.user_ids.empty() || out.item_ids.empty())
    throw EmptyCoreError("k-core filtering with k=" + std::to_string(k) +
                         " removed every node");

  for (const auto& [u, i] : ds.interactions) {
    if (user_dead[u] || item_dead[i]) continue;
    out.interactions.push_back({out.user_index.at(ds.user_ids[u]),
                                out.item_index.at(ds.item_ids[i])});
  }
  return out;
}

SplitDataset split_dataset(const InteractionDataset& ds, std::uint64_t seed) {
  std::vector<std::vector<std::uint32_t>> per_user(ds.n_users());
  for (const auto& [u, i] : ds.interactions) per_user[u].push_back(i);

  SplitDataset split;
  split.seed = seed;
  const Rng root(seed);
  for (std::uint32_t u = 0; u < ds.n_users(); ++u) {
    auto& items = per_user[u];
    const std::size_t n = items.size();
    if (n < 3)
      throw StructureError("user '" + ds.user_ids[u] + "' has " + std::to_string(n) +
                           " interaction(s); the 3:1:1 split requires at least 3 per user");
    Rng rng = root.child(u);
    rng.shuffle(items);

    // 60/20/20 by floor, then the leftover interactions (at most two) go to
    // train first and validation second.
    const std::size_t n_test = n / 5;
    std::size_t n_train = (3 * n) / 5;
    std::size_t n_val = n / 5;
    std::size_t leftover = n - n_train - n_val - n_test;
    if (leftover > 0) { ++n_train; --leftover; }
    n_val += leftover;
    for (std::size_t j = 0; j < n_train; ++j) split.train.push_back({u, items[j]});
    for (std::size_t j = n_train; j < n_train + n_val; ++j) split.val.push_back({u, items[j]});
    for (std::size_t j = n_train + n_val; j < n; ++j) split.test.push_back({u, items[j]});
  }
  return split;
}

void write_split_manifest(const std::filesystem::path& path,
                          const InteractionDataset& ds, const SplitDataset& split) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write split manifest: " + path.string());
  auto dump = [&](std::span<const Interaction> part, const char* name) {
    for (const auto& [u, i] : part)
      out << ds.user_ids[u] << '\t' << ds.item_ids[i] << '\t' << name << '\n';
  };
  dump(split.train, "train");
  dump(split.val, "val");
  dump(split.test, "test");
  if (!out) throw IoError("write failure on " + path.string());
}

SplitDataset load_split_manifest(const std::filesystem::path& path,
                                 const InteractionDataset& ds) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open split manifest: " + path.string());

  SplitDataset split;
  std::unordered_set<std::uint64_t> seen;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = strip_cr(raw);
    if (line.empty() || line[0] == '#') continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 3)
      parse_fail(path, line_no,
                 "expected 3 tab-separated fields, got " + std::to_string(fields.size()));
    const auto u = ds.find_user(fields[0]);
    if (!u) parse_fail(path, line_no, "unknown user id '" + fields[0] + "'");
    const auto i = ds.find_item(fields[1]);
    if (!i) parse_fail(path, line_no, "unknown item id '" + fields[1] + "'");
    if (!seen.insert(pair_key(*u, *i)).second)
      parse_fail(path, line_no, "duplicate pair (" + fields[0] + ", " + fields[1] + ")");

    const Interaction inter{*u, *i};
    if (fields[2] == "train") split.train.push_back(inter);
    else if (fields[2] == "val") split.val.push_back(inter);
    else if (fields[2] == "test") split.test.push_back(inter);
    else parse_fail(path, line_no, "split label must be train|val|test, got '" + fields[2] + "'");
  }
  if (in.bad()) throw IoError("read failure on " + path.string());

  if (split.total() != ds.interactions.size())
    throw StructureError("split manifest " + path.string() + " covers " +
                         std::to_string(split.total()) + " interactions but the dataset has " +
                         std::to_string(ds.interactions.size()));
  for (const auto& [u, i] : ds.interactions)
    if (!seen.count(pair_key(u, i)))
      throw StructureError("split manifest " + path.string() + " is missing pair (" +
                           ds.user_ids[u] + ", " + ds.item_ids[i] + ")");
  return split;
}

std::vector<std::vector<std::uint32_t>> interactions_by_user(
    std::span<const Interaction> interactions, std::uint32_t n_users) {
  std::vector<std::vector<std::uint32_t>> by_user(n_users);
  for (const auto& [u, i] : interactions) {
    if (u >= n_users)
      throw StructureError("interaction references user index " + std::to_string(u) +
                           " but there are only " + std::to_string(n_users) + " users");
    by_user[u].push_back(i);
  }
  for (auto& items : by_user) std::sort(items.begin(), items.end());
  return by_user;
}

}  // namespace tagcf

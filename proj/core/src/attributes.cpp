#include "tagcf/attributes.hpp"

#include <algorithm>
#include <fstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "tagcf/error.hpp"

namespace tagcf {

std::string normalize_attribute(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  bool pending_space = false;
  for (const char ch : raw) {
    const bool ws = ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r' || ch == '\f' || ch == '\v';
    if (ws) {
      if (!out.empty()) pending_space = true;
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(ch >= 'A' && ch <= 'Z' ? static_cast<char>(ch - 'A' + 'a') : ch);
  }
  return out;
}

std::unordered_map<std::string, std::uint32_t> count_frequencies(
    std::span<const RawAttributeRecord> records) {
  std::unordered_map<std::string, std::uint32_t> counts;
  std::unordered_set<std::string> in_record;
  for (const auto& rec : records) {
    in_record.clear();
    for (const auto& raw : rec.attributes) {
      std::string a = normalize_attribute(raw);
      if (a.empty()) continue;
      if (in_record.insert(a).second) ++counts[a];
    }
  }
  return counts;
}

std::optional<std::uint32_t> AttributeVocabulary::find(const std::string& normalized) const {
  auto it = index.find(normalized);
  if (it == index.end()) return std::nullopt;
  return it->second;
}

AttributeVocabulary frequency_filter(
    const std::unordered_map<std::string, std::uint32_t>& counts,
    std::uint32_t tau_min, std::uint32_t tau_max) {
  if (tau_min < 1) throw ConfigError("tau_min must be >= 1");
  if (tau_min > tau_max)
    throw ConfigError("tau_min (" + std::to_string(tau_min) + ") exceeds tau_max (" +
                      std::to_string(tau_max) + ")");

  AttributeVocabulary vocab;
  vocab.tau_min = tau_min;
  vocab.tau_max = tau_max;

  std::vector<std::pair<std::string, std::uint32_t>> kept;
  for (const auto& [attr, count] : counts) {
    if (count < tau_min) { ++vocab.pruned_low; continue; }
    if (count > tau_max) { ++vocab.pruned_high; continue; }
    kept.emplace_back(attr, count);
  }
  // Id order doubles as the fusion visitation order: frequent attributes
  // first so they become cluster representatives.
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  vocab.attrs.reserve(kept.size());
  vocab.counts.reserve(kept.size());
  for (auto& [attr, count] : kept) {
    vocab.index.emplace(attr, static_cast<std::uint32_t>(vocab.attrs.size()));
    vocab.attrs.push_back(std::move(attr));
    vocab.counts.push_back(count);
  }
  return vocab;
}

FusionClusterMap FusionClusterMap::identity(std::uint32_t n) {
  FusionClusterMap map;
  map.representative.resize(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    map.representative[i] = i;
    map.clusters.emplace(i, std::vector<std::uint32_t>{i});
  }
  return map;
}

FusionClusterMap greedy_semantic_fusion(const AttributeVocabulary& vocab,
                                        const EquivalenceOracle& oracle,
                                        std::span<const std::uint32_t> order) {
  const std::uint32_t n = vocab.size();
  std::vector<std::uint32_t> default_order;
  if (order.empty()) {
    default_order.resize(n);
    for (std::uint32_t i = 0; i < n; ++i) default_order[i] = i;
    order = default_order;
  }
  if (order.size() != n)
    throw ConfigError("fusion visitation order has " + std::to_string(order.size()) +
                      " entries for a vocabulary of " + std::to_string(n));
  {
    std::vector<bool> seen(n, false);
    for (const std::uint32_t id : order) {
      if (id >= n || seen[id])
        throw ConfigError("fusion visitation order is not a permutation of the vocabulary ids");
      seen[id] = true;
    }
  }

  // rep[id] = canonical id of the cluster `id` currently belongs to.
  std::vector<std::uint32_t> rep(n);
  for (std::uint32_t i = 0; i < n; ++i) rep[i] = i;

  auto decide = [&](std::uint32_t a, std::uint32_t b) {
    try {
      return oracle.decide(vocab.attrs[a], vocab.attrs[b]);
    } catch (const std::exception& e) {
      throw Error("semantic fusion aborted: oracle '" + oracle.name() + "' failed on pair ('" +
                  vocab.attrs[a] + "', '" + vocab.attrs[b] + "'): " + e.what());
    }
  };

  // Each pass visits cluster representatives in order; representatives later
  // in the order merge into the earliest equivalent one. Merging can create
  // new equivalences between survivors (non-transitive oracles), hence the
  // repeat-until-stable loop.
  bool merged = true;
  while (merged) {
    merged = false;
    for (std::size_t i = 0; i < order.size(); ++i) {
      const std::uint32_t canon = order[i];
      if (rep[canon] != canon) continue;
      for (std::size_t j = i + 1; j < order.size(); ++j) {
        const std::uint32_t cand = order[j];
        if (rep[cand] != cand) continue;
        if (decide(canon, cand)) {
          // Absorb cand's whole cluster.
          for (std::uint32_t id = 0; id < n; ++id)
            if (rep[id] == cand) rep[id] = canon;
          merged = true;
        }
      }
    }
  }

  FusionClusterMap map;
  map.representative = std::move(rep);
  for (std::uint32_t id = 0; id < n; ++id)
    map.clusters[map.representative[id]].push_back(id);
  return map;
}

EdgeSets reassign_edges(std::span<const RawAttributeRecord> records,
                        const AttributeVocabulary& vocab,
                        const FusionClusterMap& fusion) {
  if (fusion.size() != vocab.size())
    throw StructureError("fusion map covers " + std::to_string(fusion.size()) +
                         " ids but the vocabulary has " + std::to_string(vocab.size()));

  std::unordered_set<std::uint64_t> ua_seen, ia_seen;
  EdgeSets edges;
  for (const auto& rec : records) {
    for (const auto& raw : rec.attributes) {
      const auto id = vocab.find(normalize_attribute(raw));
      if (!id) continue;  // pruned by the frequency filter
      const std::uint32_t canon = fusion.rep(*id);
      const std::uint64_t ua_key = (static_cast<std::uint64_t>(rec.user) << 32) | canon;
      const std::uint64_t ia_key = (static_cast<std::uint64_t>(rec.item) << 32) | canon;
      if (ua_seen.insert(ua_key).second) edges.ua.push_back({rec.user, canon});
      if (ia_seen.insert(ia_key).second) edges.ia.push_back({rec.item, canon});
    }
  }
  return edges;
}

AttributeRecordFile load_attribute_records(const std::filesystem::path& path,
                                           const InteractionDataset& ds) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open attribute records: " + path.string());

  AttributeRecordFile out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json row;
    try {
      row = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (!row.is_object() || !row.contains("user") || !row.contains("item") ||
        !row.contains("attributes") || !row["attributes"].is_array())
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                       ": expected {\"user\", \"item\", \"attributes\": [...]}");

    const auto u = ds.find_user(row["user"].get<std::string>());
    const auto i = ds.find_item(row["item"].get<std::string>());
    if (!u || !i) {
      ++out.skipped_unknown_ids;
      continue;
    }
    RawAttributeRecord rec;
    rec.user = *u;
    rec.item = *i;
    for (const auto& a : row["attributes"]) {
      if (!a.is_string())
        throw ParseError(path.string() + ":" + std::to_string(line_no) +
                         ": attribute entries must be strings");
      rec.attributes.push_back(a.get<std::string>());
    }
    out.records.push_back(std::move(rec));
  }
  if (in.bad()) throw IoError("read failure on " + path.string());
  return out;
}

void write_attribute_records(const std::filesystem::path& path,
                             std::span<const RawAttributeRecord> records,
                             const InteractionDataset& ds) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write attribute records: " + path.string());
  for (const auto& rec : records) {
    const nlohmann::json row = {
        {"user", ds.user_ids[rec.user]},
        {"item", ds.item_ids[rec.item]},
        {"attributes", rec.attributes},
    };
    out << row.dump() << '\n';
  }
  if (!out) throw IoError("write failure on " + path.string());
}

void write_vocabulary_tsv(const std::filesystem::path& path,
                          const AttributeVocabulary& vocab,
                          const FusionClusterMap& fusion) {
  if (fusion.size() != vocab.size())
    throw StructureError("fusion map does not cover the vocabulary");
  std::ofstream out(path);
  if (!out) throw IoError("cannot write vocabulary: " + path.string());
  for (std::uint32_t id = 0; id < vocab.size(); ++id) {
    const std::uint32_t canon = fusion.rep(id);
    out << id << '\t' << vocab.attrs[canon] << '\t' << vocab.counts[id] << '\t'
        << fusion.clusters.at(canon).size() << '\n';
  }
  if (!out) throw IoError("write failure on " + path.string());
}

std::vector<std::string> load_vocabulary_labels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open vocabulary: " + path.string());
  std::vector<std::string> labels;
  std::string line;
  std::uint64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = path.filename().string() + ":" + std::to_string(lineno);
    const std::size_t t1 = line.find('\t');
    const std::size_t t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
    if (t1 == std::string::npos || t2 == std::string::npos)
      throw ParseError(where + ": expected 4 tab-separated fields");
    std::uint32_t id = 0;
    try {
      std::size_t used = 0;
      const unsigned long v = std::stoul(line.substr(0, t1), &used);
      if (used != t1 || v > UINT32_MAX) throw std::invalid_argument(line);
      id = static_cast<std::uint32_t>(v);
    } catch (const std::exception&) {
      throw ParseError(where + ": attribute id must be an integer");
    }
    if (id != labels.size())
      throw ParseError(where + ": attribute ids must be dense and ascending");
    labels.push_back(line.substr(t1 + 1, t2 - t1 - 1));
  }
  return labels;
}

void write_edges_tsv(const std::filesystem::path& path, std::span<const AttrEdge> edges,
                     const std::vector<std::string>& node_ids) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write edges: " + path.string());
  for (const auto& [node, attr] : edges) {
    if (node >= node_ids.size())
      throw StructureError("edge references node index " + std::to_string(node) +
                           " outside the id table of size " + std::to_string(node_ids.size()));
    out << node_ids[node] << '\t' << attr << '\n';
  }
  if (!out) throw IoError("write failure on " + path.string());
}

std::vector<AttrEdge> load_edges_tsv(
    const std::filesystem::path& path,
    const std::unordered_map<std::string, std::uint32_t>& node_index) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open edges: " + path.string());

  std::vector<AttrEdge> edges;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos)
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                       ": expected exactly 2 tab-separated fields");
    const std::string node_id = line.substr(0, tab);
    const std::string attr_str = line.substr(tab + 1);
    auto it = node_index.find(node_id);
    if (it == node_index.end())
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": unknown id '" +
                       node_id + "'");
    std::uint32_t attr = 0;
    try {
      std::size_t used = 0;
      const unsigned long parsed = std::stoul(attr_str, &used);
      if (used != attr_str.size() || parsed > UINT32_MAX) throw std::invalid_argument(attr_str);
      attr = static_cast<std::uint32_t>(parsed);
    } catch (const std::exception&) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                       ": attribute id is not a u32: '" + attr_str + "'");
    }
    edges.push_back({it->second, attr});
  }
  if (in.bad()) throw IoError("read failure on " + path.string());
  return edges;
}

}  // namespace tagcf

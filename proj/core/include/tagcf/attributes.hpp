#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tagcf/dataset.hpp"
#include "tagcf/equivalence.hpp"
#include "tagcf/graph.hpp"

namespace tagcf {

// Attribute strings extracted from one interaction.
struct RawAttributeRecord {
  std::uint32_t user = 0;
  std::uint32_t item = 0;
  std::vector<std::string> attributes;
};

// Lowercase, trim, and collapse internal whitespace runs to single spaces.
// Bytes outside ASCII pass through unchanged.
std::string normalize_attribute(std::string_view raw);

// count(a) = number of records mentioning normalized attribute a at least
// once (duplicates within one record count once).
std::unordered_map<std::string, std::uint32_t> count_frequencies(
    std::span<const RawAttributeRecord> records);

// Frequency-filtered vocabulary. Ids are dense, assigned by descending count
// with lexicographic tie-break, which is also the greedy fusion visitation
// order.
struct AttributeVocabulary {
  std::vector<std::string> attrs;   // id -> normalized string
  std::vector<std::uint32_t> counts;
  std::unordered_map<std::string, std::uint32_t> index;
  std::uint32_t tau_min = 1;
  std::uint32_t tau_max = UINT32_MAX;
  std::uint64_t pruned_low = 0;
  std::uint64_t pruned_high = 0;

  std::uint32_t size() const { return static_cast<std::uint32_t>(attrs.size()); }
  std::optional<std::uint32_t> find(const std::string& normalized) const;
};

// Retains exactly the attributes with tau_min <= count <= tau_max.
AttributeVocabulary frequency_filter(
    const std::unordered_map<std::string, std::uint32_t>& counts,
    std::uint32_t tau_min, std::uint32_t tau_max);

// Result of greedy fusion: every id maps to the canonical id of its cluster;
// canonical ids map to themselves.
struct FusionClusterMap {
  std::vector<std::uint32_t> representative;              // id -> canonical id
  std::map<std::uint32_t, std::vector<std::uint32_t>> clusters;  // canonical -> members

  std::uint32_t rep(std::uint32_t id) const { return representative[id]; }
  bool is_canonical(std::uint32_t id) const { return representative[id] == id; }
  std::size_t size() const { return representative.size(); }

  static FusionClusterMap identity(std::uint32_t n);
};

// Left-to-right greedy clustering in the given visitation order: the first
// unassigned attribute becomes canonical and absorbs every later unassigned
// attribute the oracle declares equivalent; the pass repeats until a full
// pass makes no merge. An oracle exception aborts fusion with the offending
// pair named; no partial map escapes.
//
// `order` must be a permutation of [0, vocab.size()); by default the
// vocabulary's own id order (descending count, lexicographic ties) is used.
FusionClusterMap greedy_semantic_fusion(const AttributeVocabulary& vocab,
                                        const EquivalenceOracle& oracle,
                                        std::span<const std::uint32_t> order = {});

// Edges from records through the retained vocabulary and the fusion map:
// record (u, i, {a...}) contributes (u, rep(a)) and (i, rep(a)) for every
// retained a, duplicates removed. Pruned attributes contribute nothing.
struct EdgeSets {
  std::vector<AttrEdge> ua;
  std::vector<AttrEdge> ia;
};

EdgeSets reassign_edges(std::span<const RawAttributeRecord> records,
                        const AttributeVocabulary& vocab,
                        const FusionClusterMap& fusion);

// JSONL records: {"user": "<id>", "item": "<id>", "attributes": [...]}.
// Records whose user or item id is absent from `ds` (for example removed by
// k-core filtering) are skipped and counted, not errors.
struct AttributeRecordFile {
  std::vector<RawAttributeRecord> records;
  std::uint64_t skipped_unknown_ids = 0;
};

AttributeRecordFile load_attribute_records(const std::filesystem::path& path,
                                           const InteractionDataset& ds);
void write_attribute_records(const std::filesystem::path& path,
                             std::span<const RawAttributeRecord> records,
                             const InteractionDataset& ds);

// Vocabulary TSV: one row per retained attribute id:
// attr_id, canonical string of its cluster, own count, cluster size.
void write_vocabulary_tsv(const std::filesystem::path& path,
                          const AttributeVocabulary& vocab,
                          const FusionClusterMap& fusion);

// Canonical-string column of a vocabulary TSV, indexed by attribute id.
// Canonical ids label themselves, so this resolves edge attribute ids.
std::vector<std::string> load_vocabulary_labels(const std::filesystem::path& path);

// Edge TSVs keyed by external ids on the node side and vocabulary ids on the
// attribute side.
void write_edges_tsv(const std::filesystem::path& path, std::span<const AttrEdge> edges,
                     const std::vector<std::string>& node_ids);
std::vector<AttrEdge> load_edges_tsv(const std::filesystem::path& path,
                                     const std::unordered_map<std::string, std::uint32_t>& node_index);

}  // namespace tagcf

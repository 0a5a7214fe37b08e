#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "tagcf/dataset.hpp"

namespace tagcf {

// Four-part extraction prompt: role/scenario, topic guidance, worked
// examples, then the interaction itself (review + metadata).
struct PromptTemplate {
  std::string system_role;
  std::string scenario;
  std::vector<std::string> topic_guidance;
  std::vector<std::pair<std::string, std::string>> expert_examples;  // (input, output)
  std::string output_schema;

  void validate() const;  // every section non-empty

  // Generic recommendation-domain template used when no file is supplied.
  static PromptTemplate default_template();
  static PromptTemplate from_json_file(const std::filesystem::path& path);
};

struct ExtractionRequest {
  std::uint32_t user = 0;
  std::uint32_t item = 0;
  std::string user_id;  // external ids, carried for logs and output records
  std::string item_id;
  std::string review;
  std::map<std::string, std::string> metadata;  // ordered => deterministic rendering

  bool empty() const { return review.empty() && metadata.empty(); }
};

// Deterministic renderings. The system prompt carries the role, scenario,
// topic guidance, examples, and output schema; the user prompt carries the
// single interaction (metadata block omitted when empty).
std::string render_system_prompt(const PromptTemplate& tmpl);
std::string render_user_prompt(const PromptTemplate& tmpl, const ExtractionRequest& req);
std::string build_prompt(const PromptTemplate& tmpl, const ExtractionRequest& req);

// Recovers the attribute list from model output: locates the first complete
// JSON array by bracket matching (string-literal aware), parses it, then
// trims, normalizes, drops empties, deduplicates, and caps the list. Throws
// ParseError carrying a prefix of the raw text when no array can be parsed.
std::vector<std::string> parse_attribute_list(const std::string& content,
                                              std::size_t cap = 16);

// Offline extractor: lowercased metadata category values, plus up to two
// seeded keyword samples from the review (stopwords and short tokens
// removed). Same request + seed => same output.
std::vector<std::string> mock_extract(const ExtractionRequest& req, std::uint64_t seed);

// reviews JSONL: one object per interaction,
// {"user": "<id>", "item": "<id>", "review": "...", "metadata": {...}}.
// Rows whose ids are absent from `ds` are skipped and counted. Scalar
// metadata values are stringified; nested values are rejected.
struct RequestFile {
  std::vector<ExtractionRequest> requests;
  std::uint64_t skipped_unknown_ids = 0;
};

RequestFile load_extraction_requests(const std::filesystem::path& path,
                                     const InteractionDataset& ds);

// items JSONL: {"item": "<id>", "metadata": {...}} per row. Returns one
// metadata map per item index; items without a row stay empty, rows for
// unknown items are skipped.
std::vector<std::map<std::string, std::string>> load_item_metadata(
    const std::filesystem::path& path, const InteractionDataset& ds);

}  // namespace tagcf

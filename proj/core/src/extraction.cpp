#include "tagcf/extraction.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "tagcf/attributes.hpp"
#include "tagcf/error.hpp"
#include "tagcf/rng.hpp"

namespace tagcf {

void PromptTemplate::validate() const {
  if (system_role.empty()) throw ConfigError("prompt template: system_role is empty");
  if (scenario.empty()) throw ConfigError("prompt template: scenario is empty");
  if (topic_guidance.empty()) throw ConfigError("prompt template: topic_guidance is empty");
  if (expert_examples.empty()) throw ConfigError("prompt template: expert_examples is empty");
  if (output_schema.empty()) throw ConfigError("prompt template: output_schema is empty");
}

PromptTemplate PromptTemplate::default_template() {
  PromptTemplate t;
  t.system_role =
      "You are an expert annotator for a recommendation platform. You read one "
      "customer interaction at a time and distill it into short attributes.";
  t.scenario =
      "Scenario: given a single review and the item's metadata, identify the "
      "concrete attributes of the item that the interaction reveals: usage "
      "contexts, item properties, and interest signals.";
  t.topic_guidance = {
      "Focus on durable, reusable concepts (e.g. product category, activity, style).",
      "Prefer noun phrases of one to three words.",
      "Ignore sentiment, star ratings, and shipping or pricing complaints.",
  };
  t.expert_examples = {
      {"Review: These markers dried out fast but the colors are vivid for classroom "
       "posters. Metadata: category=Office Supplies",
       "[\"markers\", \"classroom posters\", \"office supplies\"]"},
      {"Review: Bought this sci fi box set for my weekend reading binge. "
       "Metadata: category=Books",
       "[\"sci fi\", \"box set\", \"weekend reading\", \"books\"]"},
  };
  t.output_schema =
      "Respond with a JSON array of at most 16 short attribute strings and "
      "nothing else, for example [\"attribute one\", \"attribute two\"].";
  return t;
}

PromptTemplate PromptTemplate::from_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open prompt template: " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }

  PromptTemplate t;
  try {
    t.system_role = doc.at("system_role").get<std::string>();
    t.scenario = doc.at("scenario").get<std::string>();
    for (const auto& line : doc.at("topic_guidance"))
      t.topic_guidance.push_back(line.get<std::string>());
    for (const auto& ex : doc.at("expert_examples"))
      t.expert_examples.emplace_back(ex.at("input").get<std::string>(),
                                     ex.at("output").get<std::string>());
    t.output_schema = doc.at("output_schema").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  t.validate();
  return t;
}

std::string render_system_prompt(const PromptTemplate& tmpl) {
  tmpl.validate();
  std::string out = tmpl.system_role;
  out += "\n\n";
  out += tmpl.scenario;
  out += "\n\nGuidance:\n";
  for (const auto& line : tmpl.topic_guidance) {
    out += "- ";
    out += line;
    out += '\n';
  }
  out += "\nExamples:\n";
  for (const auto& [input, output] : tmpl.expert_examples) {
    out += "Input: ";
    out += input;
    out += "\nOutput: ";
    out += output;
    out += '\n';
  }
  out += '\n';
  out += tmpl.output_schema;
  return out;
}

std::string render_user_prompt(const PromptTemplate& tmpl, const ExtractionRequest& req) {
  tmpl.validate();
  if (req.empty())
    throw ConfigError("extraction request for user '" + req.user_id + "', item '" +
                      req.item_id + "' has neither review nor metadata");
  std::string out;
  if (!req.review.empty()) {
    out += "Review: ";
    out += req.review;
    out += '\n';
  }
  if (!req.metadata.empty()) {
    out += "Metadata:\n";
    for (const auto& [key, value] : req.metadata) {
      out += "- ";
      out += key;
      out += ": ";
      out += value;
      out += '\n';
    }
  }
  out += "Attributes:";
  return out;
}

std::string build_prompt(const PromptTemplate& tmpl, const ExtractionRequest& req) {
  return render_system_prompt(tmpl) + "\n\n" + render_user_prompt(tmpl, req);
}

namespace {

// First complete top-level JSON array in `content`, string-literal aware so
// brackets inside quoted attributes do not derail the match.
std::string extract_array_text(const std::string& content) {
  for (std::size_t start = content.find('['); start != std::string::npos;
       start = content.find('[', start + 1)) {
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = start; i < content.size(); ++i) {
      const char ch = content[i];
      if (in_string) {
        if (escaped) escaped = false;
        else if (ch == '\\') escaped = true;
        else if (ch == '"') in_string = false;
        continue;
      }
      if (ch == '"') in_string = true;
      else if (ch == '[') ++depth;
      else if (ch == ']' && --depth == 0)
        return content.substr(start, i - start + 1);
    }
  }
  return {};
}

}  // namespace

std::vector<std::string> parse_attribute_list(const std::string& content, std::size_t cap) {
  const std::string array_text = extract_array_text(content);
  if (array_text.empty())
    throw ParseError("no JSON array found in model output: " + content.substr(0, 200));

  nlohmann::json arr;
  try {
    arr = nlohmann::json::parse(array_text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("attribute array does not parse: ") + e.what() +
                     "; text: " + array_text.substr(0, 200));
  }

  std::vector<std::string> attrs;
  std::unordered_set<std::string> seen;
  for (const auto& entry : arr) {
    if (!entry.is_string()) continue;  // tolerate stray numbers/objects in the array
    std::string a = normalize_attribute(entry.get<std::string>());
    if (a.empty()) continue;
    if (seen.insert(a).second) attrs.push_back(std::move(a));
    if (attrs.size() >= cap) break;
  }
  return attrs;
}

namespace {

bool is_stopword(const std::string& token) {
  // Common English filler plus generic review vocabulary; the point is to
  // keep template words out of the attribute space.
  static const std::unordered_set<std::string> kStopwords = {
      "the", "and", "for", "with", "this", "that", "these", "those", "was",
      "are", "were", "been", "have", "has", "had", "but", "not", "you",
      "your", "its", "it's", "all", "any", "out", "very", "really", "just",
      "way", "too", "also", "than", "then", "them", "they", "their", "there",
      "here", "what", "when", "where", "which", "while", "who", "whom",
      "will", "would", "could", "should", "can", "may", "might", "must",
      "item", "items", "product", "products", "thing", "things", "piece",
      "set", "use", "used", "using", "get", "got", "one", "two", "bought",
      "buy", "love", "loved", "like", "liked", "great", "good", "nice",
      "best", "well", "much", "more", "most", "some", "such", "from",
  };
  return kStopwords.count(token) > 0;
}

}  // namespace

std::vector<std::string> mock_extract(const ExtractionRequest& req, std::uint64_t seed) {
  std::vector<std::string> attrs;
  std::unordered_set<std::string> seen;
  auto push = [&](std::string a) {
    if (!a.empty() && seen.insert(a).second) attrs.push_back(std::move(a));
  };

  // Rule part: every metadata value under a category-like key becomes an
  // attribute verbatim (normalized).
  for (const auto& [key, value] : req.metadata)
    if (key == "category" || key == "categories" || key == "genre")
      push(normalize_attribute(value));

  // Sampled part: up to two content tokens from the review, drawn with an
  // rng keyed by the request identity so re-extraction is reproducible.
  std::vector<std::string> candidates;
  std::string token;
  auto flush = [&]() {
    if (token.size() >= 3 && !is_stopword(token) &&
        std::find(candidates.begin(), candidates.end(), token) == candidates.end())
      candidates.push_back(token);
    token.clear();
  };
  for (const char ch : req.review) {
    if (std::isalnum(static_cast<unsigned char>(ch)) || ch == '_')
      token.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    else
      flush();
  }
  flush();

  std::uint64_t key = mix64(seed ^ 0xa77cULL);
  for (const char ch : req.user_id) key = mix64(key ^ static_cast<unsigned char>(ch));
  for (const char ch : req.item_id) key = mix64(key ^ (static_cast<unsigned char>(ch) + 0x100ULL));
  Rng rng(key);
  for (int draws = 0; draws < 2 && !candidates.empty(); ++draws) {
    const std::size_t j = static_cast<std::size_t>(rng.uniform_below(candidates.size()));
    push(candidates[j]);
    candidates.erase(candidates.begin() + static_cast<std::ptrdiff_t>(j));
  }
  if (attrs.size() > 16) attrs.resize(16);
  return attrs;
}

namespace {

std::string stringify_scalar(const nlohmann::json& v, const std::string& where) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number() || v.is_boolean()) return v.dump();
  throw ParseError(where + ": metadata values must be scalars");
}

std::map<std::string, std::string> metadata_from_json(const nlohmann::json& row,
                                                      const std::string& where) {
  std::map<std::string, std::string> meta;
  const auto it = row.find("metadata");
  if (it == row.end() || it->is_null()) return meta;
  if (!it->is_object()) throw ParseError(where + ": metadata must be an object");
  for (const auto& [key, value] : it->items())
    meta[key] = stringify_scalar(value, where);
  return meta;
}

std::string require_string(const nlohmann::json& row, const char* key,
                           const std::string& where) {
  const auto it = row.find(key);
  if (it == row.end() || !it->is_string())
    throw ParseError(where + ": missing string field '" + std::string(key) + "'");
  return it->get<std::string>();
}

}  // namespace

RequestFile load_extraction_requests(const std::filesystem::path& path,
                                     const InteractionDataset& ds) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open reviews file: " + path.string());
  RequestFile out;
  std::string line;
  std::uint64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = path.filename().string() + ":" + std::to_string(lineno);
    nlohmann::json row;
    try {
      row = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(where + ": " + e.what());
    }
    if (!row.is_object()) throw ParseError(where + ": expected a JSON object");
    const std::string user_id = require_string(row, "user", where);
    const std::string item_id = require_string(row, "item", where);
    const auto user = ds.find_user(user_id);
    const auto item = ds.find_item(item_id);
    if (!user.has_value() || !item.has_value()) {
      ++out.skipped_unknown_ids;
      continue;
    }
    ExtractionRequest req;
    req.user = *user;
    req.item = *item;
    req.user_id = user_id;
    req.item_id = item_id;
    if (const auto it = row.find("review"); it != row.end() && it->is_string())
      req.review = it->get<std::string>();
    req.metadata = metadata_from_json(row, where);
    out.requests.push_back(std::move(req));
  }
  return out;
}

std::vector<std::map<std::string, std::string>> load_item_metadata(
    const std::filesystem::path& path, const InteractionDataset& ds) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open items file: " + path.string());
  std::vector<std::map<std::string, std::string>> meta(ds.n_items());
  std::string line;
  std::uint64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = path.filename().string() + ":" + std::to_string(lineno);
    nlohmann::json row;
    try {
      row = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(where + ": " + e.what());
    }
    if (!row.is_object()) throw ParseError(where + ": expected a JSON object");
    const auto item = ds.find_item(require_string(row, "item", where));
    if (!item.has_value()) continue;
    meta[*item] = metadata_from_json(row, where);
  }
  return meta;
}

}  // namespace tagcf

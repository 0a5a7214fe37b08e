#include "tagcf/equivalence.hpp"

#include <algorithm>
#include <cctype>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "tagcf/attributes.hpp"
#include "tagcf/error.hpp"

namespace tagcf {

bool ExactMatchOracle::decide(const std::string& a, const std::string& b) const {
  return normalize_attribute(a) == normalize_attribute(b);
}

TokenJaccardOracle::TokenJaccardOracle(double threshold) : threshold_(threshold) {
  if (threshold <= 0.0 || threshold > 1.0)
    throw ConfigError("token-Jaccard threshold must lie in (0, 1]");
}

std::vector<std::string> TokenJaccardOracle::tokenize(std::string_view s) {
  std::vector<std::string> tokens;
  std::string current;
  for (const char ch : s) {
    if (std::isalnum(static_cast<unsigned char>(ch))) {
      current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  std::sort(tokens.begin(), tokens.end());
  tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
  return tokens;
}

bool TokenJaccardOracle::decide(const std::string& a, const std::string& b) const {
  const auto ta = tokenize(a);
  const auto tb = tokenize(b);
  if (ta.empty() && tb.empty()) return true;
  if (ta.empty() || tb.empty()) return false;
  std::size_t inter = 0;
  std::size_t ia = 0, ib = 0;
  while (ia < ta.size() && ib < tb.size()) {
    if (ta[ia] == tb[ib]) { ++inter; ++ia; ++ib; }
    else if (ta[ia] < tb[ib]) ++ia;
    else ++ib;
  }
  const std::size_t uni = ta.size() + tb.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni) >= threshold_;
}

RemoteNliOracle::RemoteNliOracle(NliOracleConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.threshold <= 0.0 || cfg_.threshold >= 1.0)
    throw ConfigError("NLI threshold must lie in (0, 1)");
  if (cfg_.timeout.count() <= 0) throw ConfigError("NLI timeout must be positive");
}

double RemoteNliOracle::entailment_probability(const std::string& premise,
                                               const std::string& hypothesis) const {
  httplib::Client client(cfg_.base_url);
  client.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(cfg_.timeout));
  client.set_read_timeout(std::chrono::duration_cast<std::chrono::seconds>(cfg_.timeout));

  const nlohmann::json body = {{"premise", premise}, {"hypothesis", hypothesis}};
  const auto res = client.Post("/v1/entailment", body.dump(), "application/json");
  if (!res)
    throw TransportError("NLI service unreachable at " + cfg_.base_url + ": " +
                         httplib::to_string(res.error()));
  if (res->status != 200)
    throw TransportError("NLI service returned HTTP " + std::to_string(res->status));

  try {
    const auto parsed = nlohmann::json::parse(res->body);
    return parsed.at("entailment").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed NLI response: ") + e.what() + "; body: " +
                     res->body.substr(0, 200));
  }
}

bool RemoteNliOracle::decide(const std::string& a, const std::string& b) const {
  if (a == b) return true;
  // Mutual inclusion: both entailment directions must clear the threshold.
  if (entailment_probability(a, b) <= cfg_.threshold) return false;
  return entailment_probability(b, a) > cfg_.threshold;
}

}  // namespace tagcf

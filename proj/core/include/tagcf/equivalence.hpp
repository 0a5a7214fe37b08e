#pragma once

#include <chrono>
#include <string>
#include <string_view>
#include <vector>

namespace tagcf {

// Decides whether two attribute strings denote the same concept. decide must
// be symmetric and deterministic for a fixed configuration; implementations
// that consult both directions internally (entailment) still present one
// symmetric answer.
class EquivalenceOracle {
 public:
  virtual ~EquivalenceOracle() = default;
  virtual bool decide(const std::string& a, const std::string& b) const = 0;
  virtual std::string name() const = 0;
};

// Equal after attribute normalization.
class ExactMatchOracle final : public EquivalenceOracle {
 public:
  bool decide(const std::string& a, const std::string& b) const override;
  std::string name() const override { return "exact"; }
};

// Jaccard similarity >= threshold over the token sets of both strings.
// Tokens split on any non-alphanumeric byte.
class TokenJaccardOracle final : public EquivalenceOracle {
 public:
  explicit TokenJaccardOracle(double threshold = 0.5);
  bool decide(const std::string& a, const std::string& b) const override;
  std::string name() const override { return "jaccard"; }
  double threshold() const { return threshold_; }

  static std::vector<std::string> tokenize(std::string_view s);

 private:
  double threshold_;
};

struct NliOracleConfig {
  std::string base_url = "http://localhost:8081";
  double threshold = 0.5;           // bidirectional entailment must exceed this
  std::chrono::milliseconds timeout{10000};
};

// Remote natural-language-inference service: POST {base_url}/v1/entailment
// with {"premise": ..., "hypothesis": ...}, response {"entailment": p}.
// Equivalent iff p(a => b) > threshold and p(b => a) > threshold. Transport
// or response-shape failures throw; callers treat that as a fusion abort.
class RemoteNliOracle final : public EquivalenceOracle {
 public:
  explicit RemoteNliOracle(NliOracleConfig cfg);
  bool decide(const std::string& a, const std::string& b) const override;
  std::string name() const override { return "nli"; }

 private:
  double entailment_probability(const std::string& premise,
                                const std::string& hypothesis) const;
  NliOracleConfig cfg_;
};

}  // namespace tagcf

#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tagcf/attributes.hpp"
#include "tagcf/extraction.hpp"

namespace tagcf {

struct RetryPolicy {
  unsigned max_attempts = 4;
  std::chrono::milliseconds base_backoff{250};
};

struct ChatClientConfig {
  std::string base_url = "http://localhost:8080";
  std::string model_name;
  unsigned max_concurrent_requests = 4;
  RetryPolicy retry;
  std::chrono::milliseconds timeout{30000};
  double temperature = 0.0;
  std::size_t max_attributes = 16;
  std::string api_key_env = "TAGCF_LLM_API_KEY";

  void validate() const;
};

// OpenAI-compatible chat completion client. One POST to
// {base_url}/v1/chat/completions per call, bearer token from api_key_env.
class ChatClient {
 public:
  explicit ChatClient(ChatClientConfig cfg);

  // Returns the assistant message content. Connection failures and
  // retryable statuses (429, 5xx) are retried with exponential backoff up to
  // retry.max_attempts total attempts, then surface as TransportError. A
  // response that is not a well-formed completion envelope is a ParseError.
  struct ChatResult {
    std::string content;
    unsigned attempts = 1;
    std::uint64_t prompt_tokens = 0;
    std::uint64_t completion_tokens = 0;
  };
  // `attempts_used`, when given, is updated before every attempt so failure
  // paths still report how many requests went over the wire.
  ChatResult chat(const std::string& system_prompt, const std::string& user_prompt,
                  unsigned* attempts_used = nullptr) const;

  // chat + attribute-array parsing, per request.
  std::vector<std::string> extract_attributes(const PromptTemplate& tmpl,
                                              const ExtractionRequest& req) const;

  // Throws ConfigError when the API key environment variable is unset. Bulk
  // runs call this once up front instead of failing per request.
  void ensure_api_key() const;

  const ChatClientConfig& config() const { return cfg_; }

  // Delay before retry attempt `attempt` (1-based: first retry waits the
  // base, each further retry doubles it). Exposed for tests.
  static std::chrono::milliseconds backoff_delay(const RetryPolicy& policy, unsigned attempt);

 private:
  std::string api_key() const;
  ChatClientConfig cfg_;
};

// Outcome accounting over one extraction run. successes + parse_failures +
// transport_failures always equals the number of input requests.
struct ExtractionLedger {
  std::uint64_t inputs = 0;
  std::uint64_t successes = 0;
  std::uint64_t parse_failures = 0;
  std::uint64_t transport_failures = 0;
  std::uint64_t requests_sent = 0;  // attempts including retries
  std::uint64_t prompt_tokens = 0;
  std::uint64_t completion_tokens = 0;

  std::uint64_t skipped() const { return parse_failures + transport_failures; }
};

struct CorpusExtractionResult {
  std::vector<RawAttributeRecord> records;  // interaction index order, failures omitted
  ExtractionLedger ledger;
};

// Runs extraction over a whole request list with a bounded worker pool of
// cfg.max_concurrent_requests threads. Failed interactions are skipped (never
// fabricated); results are reassembled in input order. When `log_path` is
// non-empty, writes one JSONL audit entry per request (timestamps, attempts,
// status, prompt, raw response or error).
CorpusExtractionResult extract_corpus(const ChatClientConfig& cfg, const PromptTemplate& tmpl,
                                      std::vector<ExtractionRequest> requests,
                                      const std::filesystem::path& log_path = {});

// Offline equivalent using mock_extract; same ledger shape, everything
// succeeds.
CorpusExtractionResult extract_corpus_mock(std::vector<ExtractionRequest> requests,
                                           std::uint64_t seed,
                                           const std::filesystem::path& log_path = {});

}  // namespace tagcf

#include "tagcf/chat_client.hpp"

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "tagcf/clock.hpp"
#include "tagcf/error.hpp"

namespace tagcf {

void ChatClientConfig::validate() const {
  if (base_url.empty()) throw ConfigError("chat client: base_url is empty");
  if (model_name.empty()) throw ConfigError("chat client: model_name is empty");
  if (max_concurrent_requests < 1)
    throw ConfigError("chat client: max_concurrent_requests must be >= 1");
  if (retry.max_attempts < 1) throw ConfigError("chat client: max_attempts must be >= 1");
  if (timeout.count() <= 0) throw ConfigError("chat client: timeout must be positive");
  if (max_attributes == 0) throw ConfigError("chat client: max_attributes must be >= 1");
}

ChatClient::ChatClient(ChatClientConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

std::chrono::milliseconds ChatClient::backoff_delay(const RetryPolicy& policy,
                                                    unsigned attempt) {
  if (attempt == 0) return std::chrono::milliseconds{0};
  const unsigned shift = std::min(attempt - 1, 16u);
  return policy.base_backoff * (1u << shift);
}

std::string ChatClient::api_key() const {
  const char* key = std::getenv(cfg_.api_key_env.c_str());
  if (key == nullptr || *key == '\0')
    throw ConfigError("environment variable " + cfg_.api_key_env +
                      " is not set; it must hold the chat service API key");
  return key;
}

void ChatClient::ensure_api_key() const { api_key(); }

ChatClient::ChatResult ChatClient::chat(const std::string& system_prompt,
                                        const std::string& user_prompt,
                                        unsigned* attempts_used) const {
  const std::string key = api_key();
  const nlohmann::json body = {
      {"model", cfg_.model_name},
      {"messages",
       {{{"role", "system"}, {"content", system_prompt}},
        {{"role", "user"}, {"content", user_prompt}}}},
      {"temperature", cfg_.temperature},
  };
  const std::string payload = body.dump();

  std::string last_error;
  for (unsigned attempt = 1; attempt <= cfg_.retry.max_attempts; ++attempt) {
    if (attempts_used != nullptr) *attempts_used = attempt;
    if (attempt > 1) std::this_thread::sleep_for(backoff_delay(cfg_.retry, attempt - 1));

    httplib::Client client(cfg_.base_url);
    client.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(cfg_.timeout));
    client.set_read_timeout(std::chrono::duration_cast<std::chrono::seconds>(cfg_.timeout));
    client.set_bearer_token_auth(key);

    const auto res = client.Post("/v1/chat/completions", payload, "application/json");
    if (!res) {
      last_error = "connection failure: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200)
      throw TransportError("chat service rejected the request with HTTP " +
                           std::to_string(res->status) + ": " + res->body.substr(0, 200));

    try {
      const auto doc = nlohmann::json::parse(res->body);
      ChatResult out;
      out.content = doc.at("choices").at(0).at("message").at("content").get<std::string>();
      out.attempts = attempt;
      if (doc.contains("usage")) {
        out.prompt_tokens = doc["usage"].value("prompt_tokens", 0ull);
        out.completion_tokens = doc["usage"].value("completion_tokens", 0ull);
      }
      return out;
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("malformed completion envelope: ") + e.what() +
                       "; body: " + res->body.substr(0, 200));
    }
  }
  throw TransportError("chat request failed after " + std::to_string(cfg_.retry.max_attempts) +
                       " attempts; last error: " + last_error);
}

std::vector<std::string> ChatClient::extract_attributes(const PromptTemplate& tmpl,
                                                        const ExtractionRequest& req) const {
  const ChatResult res = chat(render_system_prompt(tmpl), render_user_prompt(tmpl, req));
  return parse_attribute_list(res.content, cfg_.max_attributes);
}

namespace {

struct RequestOutcome {
  std::optional<RawAttributeRecord> record;
  nlohmann::json log_entry;
  unsigned attempts = 0;
  std::uint64_t prompt_tokens = 0;
  std::uint64_t completion_tokens = 0;
  enum class Status { Ok, ParseFailure, TransportFailure } status = Status::Ok;
};

void write_log(const std::filesystem::path& log_path, std::vector<RequestOutcome>& outcomes) {
  if (log_path.empty()) return;
  std::ofstream out(log_path);
  if (!out) throw IoError("cannot write extraction log: " + log_path.string());
  for (const auto& o : outcomes) out << o.log_entry.dump() << '\n';
  if (!out) throw IoError("write failure on " + log_path.string());
}

CorpusExtractionResult assemble(std::vector<RequestOutcome>& outcomes,
                                const std::filesystem::path& log_path) {
  CorpusExtractionResult result;
  result.ledger.inputs = outcomes.size();
  for (auto& o : outcomes) {
    result.ledger.requests_sent += o.attempts;
    result.ledger.prompt_tokens += o.prompt_tokens;
    result.ledger.completion_tokens += o.completion_tokens;
    switch (o.status) {
      case RequestOutcome::Status::Ok:
        ++result.ledger.successes;
        result.records.push_back(std::move(*o.record));
        break;
      case RequestOutcome::Status::ParseFailure: ++result.ledger.parse_failures; break;
      case RequestOutcome::Status::TransportFailure: ++result.ledger.transport_failures; break;
    }
  }
  write_log(log_path, outcomes);
  return result;
}

}  // namespace

CorpusExtractionResult extract_corpus(const ChatClientConfig& cfg, const PromptTemplate& tmpl,
                                      std::vector<ExtractionRequest> requests,
                                      const std::filesystem::path& log_path) {
  const ChatClient client(cfg);
  tmpl.validate();
  client.ensure_api_key();
  for (std::size_t idx = 0; idx < requests.size(); ++idx)
    if (requests[idx].empty())
      throw ConfigError("extraction request " + std::to_string(idx) + " (user '" +
                        requests[idx].user_id + "', item '" + requests[idx].item_id +
                        "') has neither review nor metadata");

  std::vector<RequestOutcome> outcomes(requests.size());
  std::atomic<std::size_t> next{0};

  auto worker = [&]() {
    while (true) {
      const std::size_t idx = next.fetch_add(1);
      if (idx >= requests.size()) return;
      const ExtractionRequest& req = requests[idx];
      RequestOutcome& out = outcomes[idx];
      out.log_entry = {
          {"index", idx},
          {"user", req.user_id},
          {"item", req.item_id},
          {"timestamp", iso8601_utc_now()},
          {"prompt", build_prompt(tmpl, req)},
      };
      try {
        const ChatClient::ChatResult res =
            client.chat(render_system_prompt(tmpl), render_user_prompt(tmpl, req), &out.attempts);
        out.attempts = res.attempts;
        out.prompt_tokens = res.prompt_tokens;
        out.completion_tokens = res.completion_tokens;
        out.log_entry["response"] = res.content;
        RawAttributeRecord rec;
        rec.user = req.user;
        rec.item = req.item;
        rec.attributes = parse_attribute_list(res.content, cfg.max_attributes);
        out.log_entry["status"] = "ok";
        out.log_entry["attributes"] = rec.attributes;
        out.record = std::move(rec);
        out.status = RequestOutcome::Status::Ok;
      } catch (const ParseError& e) {
        out.status = RequestOutcome::Status::ParseFailure;
        out.log_entry["status"] = "parse_error";
        out.log_entry["error"] = e.what();
      } catch (const TransportError& e) {
        out.status = RequestOutcome::Status::TransportFailure;
        out.log_entry["status"] = "transport_error";
        out.log_entry["error"] = e.what();
      }
    }
  };

  const unsigned n_workers =
      static_cast<unsigned>(std::min<std::size_t>(cfg.max_concurrent_requests, requests.size()));
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    for (unsigned t = 0; t < n_workers; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return assemble(outcomes, log_path);
}

CorpusExtractionResult extract_corpus_mock(std::vector<ExtractionRequest> requests,
                                           std::uint64_t seed,
                                           const std::filesystem::path& log_path) {
  std::vector<RequestOutcome> outcomes(requests.size());
  for (std::size_t idx = 0; idx < requests.size(); ++idx) {
    const ExtractionRequest& req = requests[idx];
    RequestOutcome& out = outcomes[idx];
    RawAttributeRecord rec;
    rec.user = req.user;
    rec.item = req.item;
    rec.attributes = mock_extract(req, seed);
    out.attempts = 0;  // no network traffic
    out.log_entry = {
        {"index", idx},
        {"user", req.user_id},
        {"item", req.item_id},
        {"timestamp", iso8601_utc_now()},
        {"status", "ok"},
        {"mock", true},
        {"attributes", rec.attributes},
    };
    out.record = std::move(rec);
  }
  return assemble(outcomes, log_path);
}

}  // namespace tagcf

#include "tagcf/config.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <type_traits>

#include "tagcf/error.hpp"

namespace tagcf {

namespace {

struct Cursor {
  const std::string& text;
  std::size_t pos = 0;
  std::size_t line = 1;
  const std::string& source;

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(source + ":" + std::to_string(line) + ": " + msg);
  }
  bool done() const { return pos >= text.size(); }
  char peek() const { return text[pos]; }
  char take() {
    const char c = text[pos++];
    if (c == '\n') ++line;
    return c;
  }
  void skip_ws_inline() {
    while (!done() && (peek() == ' ' || peek() == '\t')) ++pos;
  }
  void skip_comment() {
    while (!done() && peek() != '\n') ++pos;
  }
};

bool is_bare_key_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
}

std::string parse_bare_word(Cursor& cur) {
  std::string word;
  while (!cur.done() && is_bare_key_char(cur.peek())) word.push_back(cur.take());
  if (word.empty()) cur.fail("expected a key");
  return word;
}

std::string parse_quoted_string(Cursor& cur) {
  if (cur.take() != '"') cur.fail("expected '\"'");
  std::string out;
  for (;;) {
    if (cur.done()) cur.fail("unterminated string");
    const char c = cur.take();
    if (c == '"') return out;
    if (c == '\n') cur.fail("newline inside string");
    if (c == '\\') {
      if (cur.done()) cur.fail("dangling escape");
      const char e = cur.take();
      switch (e) {
        case '"': out.push_back('"'); break;
        case '\\': out.push_back('\\'); break;
        case 'n': out.push_back('\n'); break;
        case 't': out.push_back('\t'); break;
        default: cur.fail(std::string("unsupported escape \\") + e);
      }
    } else {
      out.push_back(c);
    }
  }
}

TomlValue parse_value(Cursor& cur);

TomlValue parse_scalar_word(Cursor& cur) {
  std::string word;
  while (!cur.done()) {
    const char c = cur.peek();
    if (is_bare_key_char(c) || c == '+' || c == '.') word.push_back(cur.take());
    else break;
  }
  if (word.empty()) cur.fail("expected a value");

  TomlValue v;
  if (word == "true" || word == "false") {
    v.kind = TomlValue::Kind::Boolean;
    v.boolean = word == "true";
    return v;
  }
  const bool looks_float = word.find('.') != std::string::npos ||
                           word.find('e') != std::string::npos ||
                           word.find('E') != std::string::npos;
  if (!looks_float) {
    std::int64_t n = 0;
    const auto [ptr, ec] = std::from_chars(word.data(), word.data() + word.size(), n);
    if (ec == std::errc() && ptr == word.data() + word.size()) {
      v.kind = TomlValue::Kind::Integer;
      v.integer = n;
      return v;
    }
  }
  try {
    std::size_t used = 0;
    const double d = std::stod(word, &used);
    if (used != word.size()) throw std::invalid_argument(word);
    v.kind = TomlValue::Kind::Float;
    v.real = d;
    return v;
  } catch (const std::exception&) {
    cur.fail("cannot parse value '" + word + "'");
  }
}

TomlValue parse_array(Cursor& cur) {
  if (cur.take() != '[') cur.fail("expected '['");
  TomlValue v;
  v.kind = TomlValue::Kind::Array;
  for (;;) {
    cur.skip_ws_inline();
    if (cur.done()) cur.fail("unterminated array");
    if (cur.peek() == ']') {
      cur.take();
      return v;
    }
    v.array.push_back(parse_value(cur));
    cur.skip_ws_inline();
    if (cur.done()) cur.fail("unterminated array");
    if (cur.peek() == ',') {
      cur.take();
      continue;
    }
    if (cur.peek() == ']') {
      cur.take();
      return v;
    }
    cur.fail("expected ',' or ']' in array");
  }
}

TomlValue parse_value(Cursor& cur) {
  const char c = cur.peek();
  if (c == '"') {
    TomlValue v;
    v.kind = TomlValue::Kind::String;
    v.str = parse_quoted_string(cur);
    return v;
  }
  if (c == '[') return parse_array(cur);
  if (c == '-' || c == '+' || std::isalnum(static_cast<unsigned char>(c)) || c == '.') {
    if (c == '-') {
      cur.take();
      TomlValue v = parse_scalar_word(cur);
      if (v.kind == TomlValue::Kind::Integer) v.integer = -v.integer;
      else if (v.kind == TomlValue::Kind::Float) v.real = -v.real;
      else cur.fail("'-' must prefix a number");
      return v;
    }
    return parse_scalar_word(cur);
  }
  cur.fail(std::string("unexpected character '") + c + "'");
}

}  // namespace

TomlTable parse_toml(const std::string& text, const std::string& source_name) {
  Cursor cur{text, 0, 1, source_name};
  TomlTable table;
  std::string section;
  while (!cur.done()) {
    cur.skip_ws_inline();
    if (cur.done()) break;
    const char c = cur.peek();
    if (c == '\n' || c == '\r') {
      cur.take();
      continue;
    }
    if (c == '#') {
      cur.skip_comment();
      continue;
    }
    if (c == '[') {
      cur.take();
      cur.skip_ws_inline();
      section = parse_bare_word(cur);
      cur.skip_ws_inline();
      if (cur.done() || cur.take() != ']') cur.fail("expected ']' after section name");
      cur.skip_ws_inline();
      if (!cur.done() && cur.peek() == '#') cur.skip_comment();
      if (!cur.done() && cur.peek() == '\r') cur.take();
      if (!cur.done() && cur.peek() != '\n') cur.fail("trailing characters after section header");
      continue;
    }
    const std::string key = parse_bare_word(cur);
    cur.skip_ws_inline();
    if (cur.done() || cur.take() != '=') cur.fail("expected '=' after key '" + key + "'");
    cur.skip_ws_inline();
    if (cur.done()) cur.fail("missing value for key '" + key + "'");
    TomlValue value = parse_value(cur);
    cur.skip_ws_inline();
    if (!cur.done() && cur.peek() == '#') cur.skip_comment();
    if (!cur.done() && cur.peek() == '\r') cur.take();
    if (!cur.done() && cur.peek() != '\n') cur.fail("trailing characters after value of '" + key + "'");

    const std::string full = section.empty() ? key : section + "." + key;
    if (table.count(full) > 0) cur.fail("duplicate key '" + full + "'");
    table.emplace(full, std::move(value));
  }
  return table;
}

TomlTable load_toml_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_toml(buf.str(), path.filename().string());
}

namespace {

// Typed accessors that track consumption so leftover keys can be rejected.
class SchemaReader {
 public:
  explicit SchemaReader(const TomlTable& table) : table_(table) {}

  const TomlValue* find(const std::string& key) {
    const auto it = table_.find(key);
    if (it == table_.end()) return nullptr;
    used_.insert(key);
    return &it->second;
  }

  void get(const std::string& key, std::string& out) {
    if (const TomlValue* v = find(key)) {
      if (v->kind != TomlValue::Kind::String)
        throw ConfigError("config key '" + key + "' must be a string");
      out = v->str;
    }
  }
  void get(const std::string& key, bool& out) {
    if (const TomlValue* v = find(key)) {
      if (v->kind != TomlValue::Kind::Boolean)
        throw ConfigError("config key '" + key + "' must be a boolean");
      out = v->boolean;
    }
  }
  void get(const std::string& key, double& out) {
    if (const TomlValue* v = find(key)) {
      if (v->kind == TomlValue::Kind::Float) out = v->real;
      else if (v->kind == TomlValue::Kind::Integer) out = static_cast<double>(v->integer);
      else throw ConfigError("config key '" + key + "' must be a number");
    }
  }
  template <typename Int>
  void get_int(const std::string& key, Int& out) {
    if (const TomlValue* v = find(key)) {
      if (v->kind != TomlValue::Kind::Integer)
        throw ConfigError("config key '" + key + "' must be an integer");
      if (v->integer < 0 && !std::is_signed_v<Int>)
        throw ConfigError("config key '" + key + "' must be non-negative");
      out = static_cast<Int>(v->integer);
      if (static_cast<std::int64_t>(out) != v->integer &&
          static_cast<std::uint64_t>(out) != static_cast<std::uint64_t>(v->integer))
        throw ConfigError("config key '" + key + "' is out of range");
    }
  }
  template <typename Int>
  void get_int_array(const std::string& key, std::vector<Int>& out) {
    if (const TomlValue* v = find(key)) {
      if (v->kind != TomlValue::Kind::Array)
        throw ConfigError("config key '" + key + "' must be an array");
      out.clear();
      for (const TomlValue& e : v->array) {
        if (e.kind != TomlValue::Kind::Integer)
          throw ConfigError("config key '" + key + "' must contain integers");
        if (e.integer < 0)
          throw ConfigError("config key '" + key + "' must contain non-negative integers");
        out.push_back(static_cast<Int>(e.integer));
      }
    }
  }
  void get_float_array(const std::string& key, std::vector<double>& out) {
    if (const TomlValue* v = find(key)) {
      if (v->kind != TomlValue::Kind::Array)
        throw ConfigError("config key '" + key + "' must be an array");
      out.clear();
      for (const TomlValue& e : v->array) {
        if (e.kind == TomlValue::Kind::Float) out.push_back(e.real);
        else if (e.kind == TomlValue::Kind::Integer)
          out.push_back(static_cast<double>(e.integer));
        else throw ConfigError("config key '" + key + "' must contain numbers");
      }
    }
  }

  void reject_unknown() const {
    for (const auto& [key, value] : table_)
      if (used_.count(key) == 0) throw ConfigError("unknown config key '" + key + "'");
  }

 private:
  const TomlTable& table_;
  std::set<std::string> used_;
};

}  // namespace

AppConfig app_config_from_toml(const TomlTable& table) {
  AppConfig cfg;
  SchemaReader r(table);

  r.get_int("model.K", cfg.model.K);
  r.get_int("model.d", cfg.model.d);
  r.get_int("model.h", cfg.model.h);
  std::string gate_mode = gate_mode_name(cfg.model.gate_mode);
  r.get("model.gate_mode", gate_mode);
  cfg.model.gate_mode = parse_gate_mode(gate_mode);
  std::string ablation = ablation_name(cfg.model.ablation);
  r.get("model.ablation", ablation);
  cfg.model.ablation = parse_ablation(ablation);
  r.get("model.leaky_slope", cfg.model.leaky_slope);
  r.get("model.init_scale", cfg.model.init_scale);

  r.get("train.learning_rate", cfg.train.learning_rate);
  r.get("train.lambda", cfg.train.lambda);
  r.get_int("train.batch_size", cfg.train.batch_size);
  r.get_int("train.max_epochs", cfg.train.max_epochs);
  r.get_int("train.patience", cfg.train.patience);
  r.get("train.eval_metric", cfg.train.eval_metric);
  r.get_int("train.seed", cfg.train.seed);

  r.get_int("pipeline.tau_min", cfg.pipeline.tau_min);
  r.get_int("pipeline.tau_max", cfg.pipeline.tau_max);
  r.get("pipeline.no_ff", cfg.pipeline.no_ff);
  r.get("pipeline.jaccard_threshold", cfg.pipeline.jaccard_threshold);

  r.get("client.base_url", cfg.client.base_url);
  r.get("client.model_name", cfg.client.model_name);
  r.get_int("client.max_concurrent_requests", cfg.client.max_concurrent_requests);
  std::int64_t timeout_ms = cfg.client.timeout.count();
  r.get_int("client.timeout_ms", timeout_ms);
  cfg.client.timeout = std::chrono::milliseconds(timeout_ms);
  std::int64_t backoff_ms = cfg.client.retry.base_backoff.count();
  r.get_int("client.retry_base_backoff_ms", backoff_ms);
  cfg.client.retry.base_backoff = std::chrono::milliseconds(backoff_ms);
  r.get_int("client.retry_max_attempts", cfg.client.retry.max_attempts);
  r.get("client.temperature", cfg.client.temperature);
  std::int64_t max_attrs = static_cast<std::int64_t>(cfg.client.max_attributes);
  r.get_int("client.max_attributes", max_attrs);
  cfg.client.max_attributes = static_cast<std::size_t>(max_attrs);
  r.get("client.api_key_env", cfg.client.api_key_env);

  r.get_int("synthetic.n_users", cfg.synthetic.n_users);
  r.get_int("synthetic.n_items", cfg.synthetic.n_items);
  r.get_int("synthetic.n_topics", cfg.synthetic.n_topics);
  r.get_int("synthetic.interactions_per_user", cfg.synthetic.interactions_per_user);
  r.get("synthetic.noise_rate", cfg.synthetic.noise_rate);
  r.get_int("synthetic.seed", cfg.synthetic.seed);

  r.get_float_array("experiment.s_grid", cfg.experiment.s_grid);
  r.get_float_array("experiment.c_grid", cfg.experiment.c_grid);
  r.get_int_array("experiment.layer_grid", cfg.experiment.layer_grid);
  r.get_int_array("experiment.seeds", cfg.experiment.seeds);

  r.get_int_array("eval.k_set", cfg.eval_k);
  r.get_int("data.kcore", cfg.kcore);

  r.reject_unknown();
  return cfg;
}

AppConfig load_app_config(const std::filesystem::path& path) {
  return app_config_from_toml(load_toml_file(path));
}

void AppConfig::validate() const {
  model.validate();
  train.validate();
  pipeline.validate();
  synthetic.validate();
  experiment.validate();
  if (eval_k.empty()) throw ConfigError("eval.k_set must be non-empty");
  for (const std::uint32_t k : eval_k)
    if (k == 0) throw ConfigError("eval.k_set entries must be positive");
}

namespace {

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (const char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out.push_back(c);
    }
  }
  out.push_back('"');
  return out;
}

std::string num(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  std::string s = buf;
  // Keep floats recognizable as floats when round-tripped.
  if (s.find('.') == std::string::npos && s.find('e') == std::string::npos &&
      s.find("inf") == std::string::npos && s.find("nan") == std::string::npos)
    s += ".0";
  return s;
}

template <typename T>
std::string int_array(const std::vector<T>& v) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0) out += ", ";
    out += std::to_string(v[i]);
  }
  return out + "]";
}

std::string float_array(const std::vector<double>& v) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0) out += ", ";
    out += num(v[i]);
  }
  return out + "]";
}

}  // namespace

std::string render_app_config(const AppConfig& cfg) {
  std::ostringstream out;
  out << "[model]\n"
      << "K = " << cfg.model.K << "\n"
      << "d = " << cfg.model.d << "\n"
      << "h = " << cfg.model.h << "\n"
      << "gate_mode = " << quote(gate_mode_name(cfg.model.gate_mode)) << "\n"
      << "ablation = " << quote(ablation_name(cfg.model.ablation)) << "\n"
      << "leaky_slope = " << num(cfg.model.leaky_slope) << "\n"
      << "init_scale = " << num(cfg.model.init_scale) << "\n\n";
  out << "[train]\n"
      << "learning_rate = " << num(cfg.train.learning_rate) << "\n"
      << "lambda = " << num(cfg.train.lambda) << "\n"
      << "batch_size = " << cfg.train.batch_size << "\n"
      << "max_epochs = " << cfg.train.max_epochs << "\n"
      << "patience = " << cfg.train.patience << "\n"
      << "eval_metric = " << quote(cfg.train.eval_metric) << "\n"
      << "seed = " << cfg.train.seed << "\n\n";
  out << "[pipeline]\n"
      << "tau_min = " << cfg.pipeline.tau_min << "\n"
      << "tau_max = " << cfg.pipeline.tau_max << "\n"
      << "no_ff = " << (cfg.pipeline.no_ff ? "true" : "false") << "\n"
      << "jaccard_threshold = " << num(cfg.pipeline.jaccard_threshold) << "\n\n";
  out << "[client]\n"
      << "base_url = " << quote(cfg.client.base_url) << "\n"
      << "model_name = " << quote(cfg.client.model_name) << "\n"
      << "max_concurrent_requests = " << cfg.client.max_concurrent_requests << "\n"
      << "timeout_ms = " << cfg.client.timeout.count() << "\n"
      << "retry_max_attempts = " << cfg.client.retry.max_attempts << "\n"
      << "retry_base_backoff_ms = " << cfg.client.retry.base_backoff.count() << "\n"
      << "temperature = " << num(cfg.client.temperature) << "\n"
      << "max_attributes = " << cfg.client.max_attributes << "\n"
      << "api_key_env = " << quote(cfg.client.api_key_env) << "\n\n";
  out << "[synthetic]\n"
      << "n_users = " << cfg.synthetic.n_users << "\n"
      << "n_items = " << cfg.synthetic.n_items << "\n"
      << "n_topics = " << cfg.synthetic.n_topics << "\n"
      << "interactions_per_user = " << cfg.synthetic.interactions_per_user << "\n"
      << "noise_rate = " << num(cfg.synthetic.noise_rate) << "\n"
      << "seed = " << cfg.synthetic.seed << "\n\n";
  out << "[experiment]\n"
      << "s_grid = " << float_array(cfg.experiment.s_grid) << "\n"
      << "c_grid = " << float_array(cfg.experiment.c_grid) << "\n"
      << "layer_grid = " << int_array(cfg.experiment.layer_grid) << "\n"
      << "seeds = " << int_array(cfg.experiment.seeds) << "\n\n";
  out << "[eval]\n"
      << "k_set = " << int_array(cfg.eval_k) << "\n\n";
  out << "[data]\n"
      << "kcore = " << cfg.kcore << "\n";
  return out.str();
}

}  // namespace tagcf

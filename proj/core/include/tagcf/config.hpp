#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "tagcf/chat_client.hpp"
#include "tagcf/experiments.hpp"
#include "tagcf/model.hpp"
#include "tagcf/synthetic.hpp"
#include "tagcf/training.hpp"

namespace tagcf {

// Minimal TOML subset: one level of [section] headers, scalar values
// (double-quoted strings with \\ \" \n \t escapes, integers, floats,
// booleans) and flat arrays of scalars. Comments run from an unquoted # to
// end of line. Exactly what the config schema needs, nothing more.
struct TomlValue {
  enum class Kind { String, Integer, Float, Boolean, Array };
  Kind kind = Kind::String;
  std::string str;
  std::int64_t integer = 0;
  double real = 0.0;
  bool boolean = false;
  std::vector<TomlValue> array;
};

// Keys are flattened to "section.key"; top-level keys keep their bare name.
using TomlTable = std::map<std::string, TomlValue>;

TomlTable parse_toml(const std::string& text, const std::string& source_name);
TomlTable load_toml_file(const std::filesystem::path& path);

// Everything a run can configure, with schema-checked loading: unknown keys
// and type mismatches are ConfigErrors naming the key.
struct AppConfig {
  ModelConfig model;
  TrainConfig train;
  PipelineConfig pipeline;
  ChatClientConfig client;
  SyntheticConfig synthetic;
  ExperimentConfig experiment;
  std::vector<std::uint32_t> eval_k{5, 20};
  std::uint32_t kcore = 0;  // 0 disables k-core filtering

  void validate() const;
};

AppConfig app_config_from_toml(const TomlTable& table);
AppConfig load_app_config(const std::filesystem::path& path);

// The config snapshot embedded in run manifests: the full effective
// configuration rendered back to TOML, independent of what the input file
// spelled out.
std::string render_app_config(const AppConfig& cfg);

}  // namespace tagcf

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

namespace tagcf {

std::string sha256_hex(const void* data, std::size_t size);
std::string sha256_hex(const std::string& data);
std::string sha256_file(const std::filesystem::path& path);

// Exclusive claim on a run directory via a `.lock` file created with
// O_EXCL semantics; a second claim on the same directory throws StateError.
// The lock is released (file removed) on destruction.
class DirLock {
 public:
  explicit DirLock(const std::filesystem::path& dir);
  ~DirLock();
  DirLock(const DirLock&) = delete;
  DirLock& operator=(const DirLock&) = delete;
  DirLock(DirLock&& other) noexcept;
  DirLock& operator=(DirLock&&) = delete;

 private:
  std::filesystem::path lock_path_;
  bool held_ = false;
};

// Creates out_root/run-NNNNNN at the first free index (claimed atomically by
// directory creation) and points out_root/latest at it.
std::filesystem::path allocate_run_dir(const std::filesystem::path& out_root);

// Reproducibility record for one tool invocation. Written as manifest.json
// into the run directory on both success and failure.
struct RunManifest {
  std::string tool_version;
  std::string command;
  std::string started_at;
  std::string finished_at;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::string config_snapshot;  // effective configuration, rendered
  std::map<std::string, std::string> inputs;   // path label -> sha256
  std::map<std::string, std::string> outputs;  // path label -> sha256
  std::string status = "running";              // running | ok | error
  std::string error;

  RunManifest();

  // Digest the file now and record it under its label.
  void add_input(const std::string& label, const std::filesystem::path& file);
  void add_output(const std::string& label, const std::filesystem::path& file);

  void write(const std::filesystem::path& path) const;
};

}  // namespace tagcf

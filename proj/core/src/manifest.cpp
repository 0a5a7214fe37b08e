#include "tagcf/manifest.hpp"

#include <openssl/evp.h>
#include <unistd.h>

#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>

#include "tagcf/clock.hpp"
#include "tagcf/error.hpp"

namespace tagcf {

namespace {

std::string to_hex(const unsigned char* digest, unsigned len) {
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xF]);
  }
  return out;
}

struct DigestCtx {
  EVP_MD_CTX* ctx;
  DigestCtx() : ctx(EVP_MD_CTX_new()) {
    if (ctx == nullptr || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1)
      throw StateError("cannot initialize sha256");
  }
  ~DigestCtx() { EVP_MD_CTX_free(ctx); }
  void update(const void* data, std::size_t size) {
    if (EVP_DigestUpdate(ctx, data, size) != 1) throw StateError("sha256 update failed");
  }
  std::string finish() {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned len = 0;
    if (EVP_DigestFinal_ex(ctx, digest, &len) != 1)
      throw StateError("sha256 finalization failed");
    return to_hex(digest, len);
  }
};

}  // namespace

std::string sha256_hex(const void* data, std::size_t size) {
  DigestCtx d;
  d.update(data, size);
  return d.finish();
}

std::string sha256_hex(const std::string& data) {
  return sha256_hex(data.data(), data.size());
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for digest: " + path.string());
  DigestCtx d;
  char buf[65536];
  while (in) {
    in.read(buf, sizeof buf);
    const std::streamsize got = in.gcount();
    if (got > 0) d.update(buf, static_cast<std::size_t>(got));
  }
  if (in.bad()) throw IoError("read failure while digesting " + path.string());
  return d.finish();
}

DirLock::DirLock(const std::filesystem::path& dir) : lock_path_(dir / ".lock") {
  std::filesystem::create_directories(dir);
  // "x" gives O_EXCL: creation fails if another invocation holds the lock.
  std::FILE* f = std::fopen(lock_path_.string().c_str(), "wx");
  if (f == nullptr)
    throw StateError("run directory is locked by another invocation: " + dir.string());
  std::fprintf(f, "pid %ld\n", static_cast<long>(getpid()));
  std::fclose(f);
  held_ = true;
}

DirLock::~DirLock() {
  if (held_) {
    std::error_code ec;
    std::filesystem::remove(lock_path_, ec);
  }
}

DirLock::DirLock(DirLock&& other) noexcept
    : lock_path_(std::move(other.lock_path_)), held_(other.held_) {
  other.held_ = false;
}

std::filesystem::path allocate_run_dir(const std::filesystem::path& out_root) {
  std::filesystem::create_directories(out_root);
  for (unsigned i = 1; i < 1000000; ++i) {
    char name[24];
    std::snprintf(name, sizeof name, "run-%06u", i);
    const std::filesystem::path dir = out_root / name;
    std::error_code ec;
    // create_directory returns false without error when the directory
    // already exists, so success is an atomic claim of this index.
    if (std::filesystem::create_directory(dir, ec) && !ec) {
      std::ofstream latest(out_root / "latest", std::ios::trunc);
      if (!latest) throw IoError("cannot update latest pointer in " + out_root.string());
      latest << name << "\n";
      return dir;
    }
    if (ec) throw IoError("cannot create run directory " + dir.string() + ": " + ec.message());
  }
  throw StateError("run index space exhausted under " + out_root.string());
}

RunManifest::RunManifest() : tool_version("tagcf 0.1.0"), started_at(iso8601_utc_now()) {}

void RunManifest::add_input(const std::string& label, const std::filesystem::path& file) {
  inputs[label] = sha256_file(file);
}

void RunManifest::add_output(const std::string& label, const std::filesystem::path& file) {
  outputs[label] = sha256_file(file);
}

void RunManifest::write(const std::filesystem::path& path) const {
  nlohmann::json j;
  j["tool_version"] = tool_version;
  j["command"] = command;
  j["started_at"] = started_at;
  j["finished_at"] = finished_at;
  j["seed"] = seed;
  j["threads"] = threads;
  j["config"] = config_snapshot;
  j["inputs"] = inputs;
  j["outputs"] = outputs;
  j["status"] = status;
  j["error"] = error;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write manifest: " + path.string());
  out << j.dump(2) << "\n";
  if (!out) throw IoError("write failure on " + path.string());
}

}  // namespace tagcf

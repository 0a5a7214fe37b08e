#include <doctest.h>

#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "tagcf/error.hpp"
#include "tagcf/manifest.hpp"
#include "test_util.hpp"

using namespace tagcf;

TEST_CASE("sha256 matches the published test vectors") {
  CHECK(sha256_hex(std::string{}) ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex(std::string{"abc"}) ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  const char raw[] = "abc";
  CHECK(sha256_hex(raw, 3) == sha256_hex(std::string{"abc"}));
}

TEST_CASE("file digests equal string digests of the same bytes") {
  testutil::TempDir tmp;
  const std::string content = std::string("binary\0chunk\n", 13);
  testutil::write_file(tmp.file("blob"), content);
  CHECK(sha256_file(tmp.file("blob")) == sha256_hex(content));

  testutil::write_file(tmp.file("empty"), "");
  CHECK(sha256_file(tmp.file("empty")) ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");

  CHECK_THROWS_WITH_AS(sha256_file(tmp.file("absent")),
                       doctest::Contains("cannot open for digest"), IoError);
}

TEST_CASE("a directory lock is exclusive while held and reusable after release") {
  testutil::TempDir tmp;
  const auto dir = tmp.file("run");
  {
    DirLock lock(dir);
    CHECK(std::filesystem::exists(dir / ".lock"));
    CHECK_THROWS_WITH_AS(DirLock{dir}, doctest::Contains("locked by another invocation"),
                         StateError);
  }
  CHECK_FALSE(std::filesystem::exists(dir / ".lock"));
  CHECK_NOTHROW(DirLock{dir});
}

TEST_CASE("moving a lock transfers ownership without releasing it") {
  testutil::TempDir tmp;
  const auto dir = tmp.file("run");
  std::optional<DirLock> outer;
  {
    DirLock inner(dir);
    outer.emplace(std::move(inner));
    // inner's destructor runs here but must not release the moved-away lock
  }
  CHECK(std::filesystem::exists(dir / ".lock"));
  CHECK_THROWS_AS(DirLock{dir}, StateError);
  outer.reset();
  CHECK_FALSE(std::filesystem::exists(dir / ".lock"));
}

TEST_CASE("run directories allocate sequential indices and track latest") {
  testutil::TempDir tmp;
  const auto root = tmp.file("out");

  const auto first = allocate_run_dir(root);
  CHECK(first == root / "run-000001");
  CHECK(std::filesystem::is_directory(first));
  CHECK(testutil::read_file(root / "latest") == "run-000001\n");

  const auto second = allocate_run_dir(root);
  CHECK(second == root / "run-000002");
  CHECK(testutil::read_file(root / "latest") == "run-000002\n");

  // Pre-claimed indices are skipped, not clobbered.
  std::filesystem::create_directories(root / "run-000003");
  const auto fourth = allocate_run_dir(root);
  CHECK(fourth == root / "run-000004");
  CHECK(testutil::read_file(root / "latest") == "run-000004\n");
}

TEST_CASE("manifests snapshot inputs, outputs, and run state as JSON") {
  testutil::TempDir tmp;
  testutil::write_file(tmp.file("data.csv"), "a,b\n1,2\n");
  testutil::write_file(tmp.file("model.bin"), "bytes");

  RunManifest m;
  CHECK(m.tool_version == "tagcf 0.1.0");
  CHECK(m.status == "running");
  CHECK(m.started_at.size() >= 19);
  CHECK(m.started_at.find('T') != std::string::npos);

  m.command = "train --seed 7";
  m.seed = 7;
  m.threads = 2;
  m.config_snapshot = "[model]\nK = 3\n";
  m.add_input("interactions", tmp.file("data.csv"));
  m.add_output("checkpoint", tmp.file("model.bin"));
  m.finished_at = m.started_at;
  m.status = "ok";
  m.write(tmp.file("manifest.json"));

  const auto j = nlohmann::json::parse(testutil::read_file(tmp.file("manifest.json")));
  CHECK(j.at("tool_version").get<std::string>() == "tagcf 0.1.0");
  CHECK(j.at("command").get<std::string>() == "train --seed 7");
  CHECK(j.at("seed").get<std::uint64_t>() == 7);
  CHECK(j.at("threads").get<unsigned>() == 2);
  CHECK(j.at("config").get<std::string>() == "[model]\nK = 3\n");
  CHECK(j.at("status").get<std::string>() == "ok");
  CHECK(j.at("error").get<std::string>().empty());
  CHECK(j.at("inputs").at("interactions").get<std::string>() ==
        sha256_hex(std::string{"a,b\n1,2\n"}));
  CHECK(j.at("outputs").at("checkpoint").get<std::string>() ==
        sha256_hex(std::string{"bytes"}));

  CHECK_THROWS_WITH_AS(m.write(tmp.file("no-dir") / "manifest.json"),
                       doctest::Contains("cannot write manifest"), IoError);
  CHECK_THROWS_AS(m.add_input("missing", tmp.file("gone")), IoError);
}

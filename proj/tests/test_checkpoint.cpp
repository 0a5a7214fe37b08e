#include <doctest.h>
#include <zlib.h>

#include <cstdint>
#include <string>

#include "tagcf/checkpoint.hpp"
#include "tagcf/error.hpp"
#include "tagcf/model.hpp"
#include "test_util.hpp"

using namespace tagcf;

namespace {

Model sample_model() {
  ModelConfig cfg;
  cfg.K = 2;
  cfg.d = 3;
  cfg.h = 2;
  cfg.gate_mode = GateMode::Softmax;
  cfg.ablation = Ablation::NoFf;
  Model m = init_model(4, 3, 2, cfg, 123);
  m.emb.users.at(0, 0) = 0.1;  // not representable in f32
  return m;
}

// Rewrites the CRC trailer after a deliberate header mutation so the test
// reaches the validation branch behind the checksum.
void fix_crc(std::string& bytes) {
  REQUIRE(bytes.size() > 4);
  const std::size_t payload = bytes.size() - 4;
  const auto crc = ::crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()),
                           static_cast<uInt>(payload));
  for (int b = 0; b < 4; ++b)
    bytes[payload + static_cast<std::size_t>(b)] =
        static_cast<char>((crc >> (8 * b)) & 0xff);
}

constexpr std::size_t kVersionOffset = 4;
constexpr std::size_t kDimOffset = 8;
constexpr std::size_t kGateModeOffset = 4 + 4 + 6 * 8;
constexpr std::size_t kAblationOffset = kGateModeOffset + 1;

}  // namespace

TEST_CASE("save, load, save round-trips byte-identically") {
  testutil::TempDir tmp;
  const Model m = sample_model();
  save_checkpoint(tmp.file("a.ckpt"), m);
  const Model loaded = load_checkpoint(tmp.file("a.ckpt"));
  save_checkpoint(tmp.file("b.ckpt"), loaded);
  CHECK(testutil::read_file(tmp.file("a.ckpt")) == testutil::read_file(tmp.file("b.ckpt")));

  // Two saves of the same model are also identical.
  save_checkpoint(tmp.file("c.ckpt"), m);
  CHECK(testutil::read_file(tmp.file("a.ckpt")) == testutil::read_file(tmp.file("c.ckpt")));
}

TEST_CASE("loading restores shapes, flags, and f32-narrowed values") {
  testutil::TempDir tmp;
  const Model m = sample_model();
  save_checkpoint(tmp.file("m.ckpt"), m);
  const Model loaded = load_checkpoint(tmp.file("m.ckpt"));

  CHECK(loaded.config.K == 2);
  CHECK(loaded.config.d == 3);
  CHECK(loaded.config.h == 2);
  CHECK(loaded.config.gate_mode == GateMode::Softmax);
  CHECK(loaded.config.ablation == Ablation::NoFf);
  CHECK(loaded.emb.users.rows == 4);
  CHECK(loaded.emb.items.rows == 3);
  CHECK(loaded.emb.attrs.rows == 2);

  // Every stored value is the f32 rounding of the in-memory double.
  CHECK(loaded.emb.users.at(0, 0) == static_cast<double>(0.1f));
  CHECK(loaded.emb.users.at(0, 0) != 0.1);
  for (std::size_t t = 0; t < m.emb.items.data.size(); ++t)
    CHECK(loaded.emb.items.data[t] ==
          static_cast<double>(static_cast<float>(m.emb.items.data[t])));
  for (int r = 0; r < 3; ++r) {
    for (std::size_t t = 0; t < m.gates.rel[r].w1.data.size(); ++t)
      CHECK(loaded.gates.rel[r].w1.data[t] ==
            static_cast<double>(static_cast<float>(m.gates.rel[r].w1.data[t])));
    CHECK(loaded.gates.rel[r].b2 ==
          static_cast<double>(static_cast<float>(m.gates.rel[r].b2)));
  }
}

TEST_CASE("the trailer is a zlib crc32 over everything before it") {
  testutil::TempDir tmp;
  save_checkpoint(tmp.file("m.ckpt"), sample_model());
  const std::string bytes = testutil::read_file(tmp.file("m.ckpt"));
  REQUIRE(bytes.size() > 4);
  CHECK(bytes.substr(0, 4) == "TAGC");

  const std::size_t payload = bytes.size() - 4;
  std::uint32_t stored = 0;
  for (int b = 0; b < 4; ++b)
    stored |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[payload + b]))
              << (8 * b);
  const auto computed = ::crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()),
                                static_cast<uInt>(payload));
  CHECK(stored == static_cast<std::uint32_t>(computed));
}

TEST_CASE("every single-byte corruption is rejected") {
  testutil::TempDir tmp;
  save_checkpoint(tmp.file("m.ckpt"), sample_model());
  const std::string clean = testutil::read_file(tmp.file("m.ckpt"));

  for (std::size_t i = 0; i < clean.size(); ++i) {
    std::string bad = clean;
    bad[i] = static_cast<char>(bad[i] ^ 0x5aU);
    testutil::write_file(tmp.file("bad.ckpt"), bad);
    CHECK_THROWS_AS(load_checkpoint(tmp.file("bad.ckpt")), CorruptionError);
  }
}

TEST_CASE("truncated and empty files are rejected") {
  testutil::TempDir tmp;
  save_checkpoint(tmp.file("m.ckpt"), sample_model());
  const std::string clean = testutil::read_file(tmp.file("m.ckpt"));

  for (const std::size_t keep : {clean.size() - 1, clean.size() / 2, std::size_t{3},
                                 std::size_t{0}}) {
    testutil::write_file(tmp.file("cut.ckpt"), clean.substr(0, keep));
    CHECK_THROWS_AS(load_checkpoint(tmp.file("cut.ckpt")), CorruptionError);
  }
  testutil::write_file(tmp.file("tiny.ckpt"), "AB");
  CHECK_THROWS_WITH_AS(load_checkpoint(tmp.file("tiny.ckpt")),
                       doctest::Contains("truncated"), CorruptionError);
}

TEST_CASE("bad magic bytes are reported as such") {
  testutil::TempDir tmp;
  save_checkpoint(tmp.file("m.ckpt"), sample_model());
  std::string bytes = testutil::read_file(tmp.file("m.ckpt"));
  bytes[0] = 'X';
  fix_crc(bytes);
  testutil::write_file(tmp.file("bad.ckpt"), bytes);
  CHECK_THROWS_WITH_AS(load_checkpoint(tmp.file("bad.ckpt")),
                       doctest::Contains("bad magic bytes"), CorruptionError);
}

TEST_CASE("an unknown format version is rejected despite a valid checksum") {
  testutil::TempDir tmp;
  save_checkpoint(tmp.file("m.ckpt"), sample_model());
  std::string bytes = testutil::read_file(tmp.file("m.ckpt"));
  bytes[kVersionOffset] = 2;
  fix_crc(bytes);
  testutil::write_file(tmp.file("bad.ckpt"), bytes);
  CHECK_THROWS_WITH_AS(load_checkpoint(tmp.file("bad.ckpt")),
                       doctest::Contains("format version"), CorruptionError);
}

TEST_CASE("out-of-range enum bytes are rejected despite a valid checksum") {
  testutil::TempDir tmp;
  save_checkpoint(tmp.file("m.ckpt"), sample_model());
  const std::string clean = testutil::read_file(tmp.file("m.ckpt"));

  std::string bad_mode = clean;
  bad_mode[kGateModeOffset] = 2;
  fix_crc(bad_mode);
  testutil::write_file(tmp.file("mode.ckpt"), bad_mode);
  CHECK_THROWS_WITH_AS(load_checkpoint(tmp.file("mode.ckpt")),
                       doctest::Contains("invalid gate_mode"), CorruptionError);

  std::string bad_ablation = clean;
  bad_ablation[kAblationOffset] = 3;
  fix_crc(bad_ablation);
  testutil::write_file(tmp.file("abl.ckpt"), bad_ablation);
  CHECK_THROWS_WITH_AS(load_checkpoint(tmp.file("abl.ckpt")),
                       doctest::Contains("invalid ablation"), CorruptionError);
}

TEST_CASE("payload size must match the declared shapes exactly") {
  testutil::TempDir tmp;
  save_checkpoint(tmp.file("m.ckpt"), sample_model());
  std::string bytes = testutil::read_file(tmp.file("m.ckpt"));

  // Four extra payload bytes with a recomputed checksum.
  bytes.insert(bytes.size() - 4, std::string(4, '\0'));
  fix_crc(bytes);
  testutil::write_file(tmp.file("fat.ckpt"), bytes);
  CHECK_THROWS_AS(load_checkpoint(tmp.file("fat.ckpt")), CorruptionError);

  // A dimension header that disagrees with the payload size.
  std::string lies = testutil::read_file(tmp.file("m.ckpt"));
  lies[kDimOffset] = 100;
  fix_crc(lies);
  testutil::write_file(tmp.file("lies.ckpt"), lies);
  CHECK_THROWS_AS(load_checkpoint(tmp.file("lies.ckpt")), CorruptionError);
}

TEST_CASE("missing files and unwritable targets surface io errors") {
  testutil::TempDir tmp;
  CHECK_THROWS_WITH_AS(load_checkpoint(tmp.file("absent.ckpt")),
                       doctest::Contains("cannot open checkpoint"), IoError);
  CHECK_THROWS_WITH_AS(save_checkpoint(tmp.file("no-dir") / "m.ckpt", sample_model()),
                       doctest::Contains("cannot write checkpoint"), IoError);
}

TEST_CASE("forward passes agree before and after a round-trip") {
  // The narrowed parameters are the persisted truth: reloading them must
  // reproduce the saved model's scores exactly.
  testutil::TempDir tmp;
  const Model m = sample_model();
  save_checkpoint(tmp.file("m.ckpt"), m);
  const Model a = load_checkpoint(tmp.file("m.ckpt"));
  save_checkpoint(tmp.file("m2.ckpt"), a);
  const Model b = load_checkpoint(tmp.file("m2.ckpt"));
  CHECK(a.emb.users == b.emb.users);
  CHECK(a.emb.items == b.emb.items);
  CHECK(a.emb.attrs == b.emb.attrs);
  for (int r = 0; r < 3; ++r) {
    CHECK(a.gates.rel[r].w1 == b.gates.rel[r].w1);
    CHECK(a.gates.rel[r].b1 == b.gates.rel[r].b1);
    CHECK(a.gates.rel[r].w2 == b.gates.rel[r].w2);
    CHECK(a.gates.rel[r].b2 == b.gates.rel[r].b2);
  }
}

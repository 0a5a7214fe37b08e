#include "tagcf/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <zlib.h>

#include "tagcf/error.hpp"

namespace tagcf {

namespace {

void put_u32(std::vector<std::uint8_t>& buf, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) buf.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

void put_u64(std::vector<std::uint8_t>& buf, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) buf.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

void put_f32(std::vector<std::uint8_t>& buf, float v) {
  put_u32(buf, std::bit_cast<std::uint32_t>(v));
}

void put_f32_block(std::vector<std::uint8_t>& buf, const std::vector<double>& values) {
  for (const double v : values) put_f32(buf, static_cast<float>(v));
}

class Reader {
 public:
  Reader(const std::uint8_t* data, std::size_t size, std::string origin)
      : data_(data), size_(size), origin_(std::move(origin)) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(data_[pos_ + b]) << (8 * b);
    pos_ += 4;
    return v;
  }

  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(data_[pos_ + b]) << (8 * b);
    pos_ += 8;
    return v;
  }

  std::uint8_t u8() {
    need(1);
    return data_[pos_++];
  }

  double f32() { return static_cast<double>(std::bit_cast<float>(u32())); }

  void f32_block(std::vector<double>& out, std::size_t count) {
    out.resize(count);
    for (std::size_t i = 0; i < count; ++i) out[i] = f32();
  }

  std::size_t remaining() const { return size_ - pos_; }

 private:
  void need(std::size_t bytes) {
    if (size_ - pos_ < bytes)
      throw CorruptionError("checkpoint " + origin_ + " is truncated");
  }

  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
  std::string origin_;
};

std::uint32_t crc32_of(const std::uint8_t* data, std::size_t size) {
  return static_cast<std::uint32_t>(
      ::crc32(0L, reinterpret_cast<const Bytef*>(data), static_cast<uInt>(size)));
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Model& model) {
  const auto& c = model.config;
  c.validate();

  std::vector<std::uint8_t> buf;
  buf.push_back('T');
  buf.push_back('A');
  buf.push_back('G');
  buf.push_back('C');
  put_u32(buf, kCheckpointVersion);
  put_u64(buf, c.d);
  put_u64(buf, c.h);
  put_u64(buf, c.K);
  put_u64(buf, model.emb.users.rows);
  put_u64(buf, model.emb.items.rows);
  put_u64(buf, model.emb.attrs.rows);
  buf.push_back(static_cast<std::uint8_t>(c.gate_mode));
  buf.push_back(static_cast<std::uint8_t>(c.ablation));

  put_f32_block(buf, model.emb.users.data);
  put_f32_block(buf, model.emb.items.data);
  put_f32_block(buf, model.emb.attrs.data);
  for (const auto& gate : model.gates.rel) {
    put_f32_block(buf, gate.w1.data);
    put_f32_block(buf, gate.b1);
    put_f32_block(buf, gate.w2);
    put_f32(buf, static_cast<float>(gate.b2));
  }

  put_u32(buf, crc32_of(buf.data(), buf.size()));

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint: " + path.string());
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("write failure on " + path.string());
}

Model load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path.string());
  std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(in)),
                                std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failure on " + path.string());

  if (buf.size() < 4 + 4 + 6 * 8 + 2 + 4)
    throw CorruptionError("checkpoint " + path.string() + " is truncated");
  if (buf[0] != 'T' || buf[1] != 'A' || buf[2] != 'G' || buf[3] != 'C')
    throw CorruptionError("checkpoint " + path.string() + " has bad magic bytes");

  const std::size_t payload_size = buf.size() - 4;
  std::uint32_t stored_crc = 0;
  for (int b = 0; b < 4; ++b)
    stored_crc |= static_cast<std::uint32_t>(buf[payload_size + b]) << (8 * b);
  if (crc32_of(buf.data(), payload_size) != stored_crc)
    throw CorruptionError("checkpoint " + path.string() + " failed CRC validation");

  Reader r(buf.data() + 4, payload_size - 4, path.string());
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion)
    throw CorruptionError("checkpoint " + path.string() + " has format version " +
                          std::to_string(version) + "; this build reads version " +
                          std::to_string(kCheckpointVersion));

  Model model;
  auto read_dim = [&](const char* name) {
    const std::uint64_t v = r.u64();
    if (v > UINT32_MAX)
      throw CorruptionError("checkpoint " + path.string() + ": field " + name +
                            " is implausibly large");
    return static_cast<std::uint32_t>(v);
  };
  model.config.d = read_dim("d");
  model.config.h = read_dim("h");
  model.config.K = read_dim("K");
  const std::uint32_t n_users = read_dim("N_u");
  const std::uint32_t n_items = read_dim("N_i");
  const std::uint32_t n_attrs = read_dim("N_a");

  const std::uint8_t gate_mode = r.u8();
  if (gate_mode > 1)
    throw CorruptionError("checkpoint " + path.string() + " has invalid gate_mode");
  model.config.gate_mode = static_cast<GateMode>(gate_mode);
  const std::uint8_t ablation = r.u8();
  if (ablation > 2)
    throw CorruptionError("checkpoint " + path.string() + " has invalid ablation");
  model.config.ablation = static_cast<Ablation>(ablation);
  model.config.validate();

  const std::uint64_t d = model.config.d;
  const std::uint64_t h = model.config.h;
  const std::uint64_t expected_floats =
      (static_cast<std::uint64_t>(n_users) + n_items + n_attrs) * d +
      3 * (h * 2 * d + h + h + 1);
  if (r.remaining() != expected_floats * 4)
    throw CorruptionError("checkpoint " + path.string() + " payload size mismatch: " +
                          std::to_string(r.remaining()) + " bytes for " +
                          std::to_string(expected_floats) + " floats");

  model.emb.users = Matrix(n_users, d);
  model.emb.items = Matrix(n_items, d);
  model.emb.attrs = Matrix(n_attrs, d);
  r.f32_block(model.emb.users.data, model.emb.users.data.size());
  r.f32_block(model.emb.items.data, model.emb.items.data.size());
  r.f32_block(model.emb.attrs.data, model.emb.attrs.data.size());

  model.gates.hidden = model.config.h;
  for (auto& gate : model.gates.rel) {
    gate.w1 = Matrix(h, 2 * d);
    r.f32_block(gate.w1.data, gate.w1.data.size());
    r.f32_block(gate.b1, h);
    r.f32_block(gate.w2, h);
    gate.b2 = r.f32();
  }
  return model;
}

}  // namespace tagcf

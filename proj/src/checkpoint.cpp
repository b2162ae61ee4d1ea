// Copyright 2026 The ctcocr Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "ctcocr/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <zlib.h>

#include "ctcocr/error.hpp"

namespace ctcocr {

namespace {

constexpr char kMagic[8] = {'C', 'T', 'C', 'O', 'C', 'R', '\0', '\0'};
constexpr std::size_t kMaxRank = 8;

class Writer {
 public:
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    buffer_.insert(buffer_.end(), p, p + n);
  }
  void u8(std::uint8_t x) { buffer_.push_back(x); }
  void u32(std::uint32_t x) {
    for (int i = 0; i < 4; ++i) buffer_.push_back(static_cast<unsigned char>(x >> (8 * i)));
  }
  void u64(std::uint64_t x) {
    for (int i = 0; i < 8; ++i) buffer_.push_back(static_cast<unsigned char>(x >> (8 * i)));
  }
  void i32(std::int32_t x) { u32(static_cast<std::uint32_t>(x)); }
  void i64(std::int64_t x) { u64(static_cast<std::uint64_t>(x)); }
  void f64(double x) { u64(std::bit_cast<std::uint64_t>(x)); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  void tensor(const Tensor& t) {
    u32(static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) u64(d);
    for (double x : t.data()) f64(x);
  }

  std::vector<unsigned char>& buffer() { return buffer_; }

 private:
  std::vector<unsigned char> buffer_;
};

class Reader {
 public:
  Reader(const unsigned char* data, std::size_t size) : data_(data), size_(size) {}

  const unsigned char* take(std::size_t n) {
    if (n > size_ - pos_) throw IntegrityError("checkpoint is truncated");
    const unsigned char* p = data_ + pos_;
    pos_ += n;
    return p;
  }
  std::uint8_t u8() { return *take(1); }
  std::uint32_t u32() {
    const unsigned char* p = take(4);
    std::uint32_t x = 0;
    for (int i = 0; i < 4; ++i) x |= static_cast<std::uint32_t>(p[i]) << (8 * i);
    return x;
  }
  std::uint64_t u64() {
    const unsigned char* p = take(8);
    std::uint64_t x = 0;
    for (int i = 0; i < 8; ++i) x |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return x;
  }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const std::uint32_t n = u32();
    const unsigned char* p = take(n);
    return {reinterpret_cast<const char*>(p), n};
  }
  Tensor tensor() {
    const std::uint32_t rank = u32();
    if (rank == 0 || rank > kMaxRank) throw IntegrityError("implausible tensor rank");
    Shape shape(rank);
    std::size_t count = 1;
    for (auto& d : shape) {
      d = u64();
      if (d == 0 || d > remaining() / 8) throw IntegrityError("implausible tensor extent");
      count *= d;
      if (count > remaining() / 8) throw IntegrityError("checkpoint is truncated");
    }
    std::vector<double> values(count);
    for (auto& x : values) x = f64();
    return Tensor(std::move(shape), std::move(values));
  }

  std::size_t remaining() const { return size_ - pos_; }

 private:
  const unsigned char* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

void write_config(Writer& w, const ModelConfig& c) {
  w.i32(c.input_height);
  w.i32(c.input_width);
  w.u32(static_cast<std::uint32_t>(c.conv_blocks.size()));
  for (const auto& b : c.conv_blocks) {
    w.i32(b.out_channels);
    w.i32(b.kernel);
    w.i32(b.pool);
  }
  w.i32(c.rnn_hidden);
  w.u8(c.rnn_kind == RnnKind::kGru ? 1 : 0);
  w.u8(c.bidirectional ? 1 : 0);
  w.i32(c.alphabet_size);
}

ModelConfig read_config(Reader& r) {
  ModelConfig c;
  c.input_height = r.i32();
  c.input_width = r.i32();
  const std::uint32_t blocks = r.u32();
  if (blocks > 64) throw IntegrityError("implausible conv block count");
  c.conv_blocks.clear();
  for (std::uint32_t i = 0; i < blocks; ++i) {
    ConvBlock b;
    b.out_channels = r.i32();
    b.kernel = r.i32();
    b.pool = r.i32();
    c.conv_blocks.push_back(b);
  }
  c.rnn_hidden = r.i32();
  c.rnn_kind = r.u8() == 1 ? RnnKind::kGru : RnnKind::kSimple;
  c.bidirectional = r.u8() != 0;
  c.alphabet_size = r.i32();
  return c;
}

std::uint32_t crc_of(const unsigned char* data, std::size_t n) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks.
  while (n > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
    crc = crc32(crc, data, chunk);
    data += chunk;
    n -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

}  // namespace

Checkpoint Checkpoint::from_model(const Model& model, const Alphabet& alphabet) {
  Checkpoint c;
  c.model_config = model.config();
  c.alphabet = alphabet;
  for (const auto& p : model.parameters()) c.parameters.push_back({p.name, p.value.value()});
  return c;
}

Model Checkpoint::to_model() const {
  std::vector<NamedParameter> params;
  params.reserve(parameters.size());
  for (const auto& p : parameters) params.push_back({p.name, Var::parameter(p.value)});
  return Model(model_config, std::move(params));
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  Writer w;
  w.bytes(kMagic, sizeof kMagic);
  w.u32(checkpoint.format_version);
  write_config(w, checkpoint.model_config);
  w.str(checkpoint.alphabet.characters());
  w.u64(checkpoint.alphabet.hash());
  w.u32(static_cast<std::uint32_t>(checkpoint.parameters.size()));
  for (const auto& p : checkpoint.parameters) {
    w.str(p.name);
    w.tensor(p.value);
  }
  w.i64(checkpoint.state.epoch);
  w.f64(checkpoint.state.best_val_loss);
  w.i64(checkpoint.state.best_epoch);
  w.i64(checkpoint.state.epochs_without_improvement);
  w.u8(checkpoint.optimizer ? 1 : 0);
  if (checkpoint.optimizer) {
    const AdamState& s = *checkpoint.optimizer;
    w.i64(s.step);
    w.u32(static_cast<std::uint32_t>(s.m.size()));
    for (const auto& t : s.m) w.tensor(t);
    for (const auto& t : s.v) w.tensor(t);
  }
  auto& buf = w.buffer();
  const std::uint32_t crc = crc_of(buf.data(), buf.size());
  w.u32(crc);

  // Write beside the target and rename so readers never see a partial file.
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write checkpoint " + path.string());
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!out) throw DataError("failed writing checkpoint " + path.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw DataError("cannot move checkpoint into place at " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  const std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)),
                                       std::istreambuf_iterator<char>());
  if (buf.size() < sizeof kMagic + 8) throw IntegrityError("checkpoint is truncated");
  if (std::memcmp(buf.data(), kMagic, sizeof kMagic) != 0) {
    throw IntegrityError(path.string() + " is not a checkpoint");
  }
  Reader header(buf.data() + sizeof kMagic, 4);
  const std::uint32_t version = header.u32();
  if (version != kCheckpointVersion) {
    throw VersionError("checkpoint format version " + std::to_string(version) +
                       " is not supported (expected version " +
                       std::to_string(kCheckpointVersion) + ")");
  }
  const std::size_t body = buf.size() - 4;
  Reader trailer(buf.data() + body, 4);
  if (trailer.u32() != crc_of(buf.data(), body)) {
    throw IntegrityError("checkpoint checksum mismatch (file is corrupt or truncated)");
  }

  Reader r(buf.data() + sizeof kMagic + 4, body - sizeof kMagic - 4);
  Checkpoint c;
  c.format_version = version;
  c.model_config = read_config(r);
  std::string chars = r.str();
  const std::uint64_t hash = r.u64();
  try {
    c.alphabet = Alphabet(std::move(chars));
  } catch (const DomainError& e) {
    throw IntegrityError(std::string("checkpoint alphabet is invalid: ") + e.what());
  }
  if (c.alphabet.hash() != hash) throw IntegrityError("checkpoint alphabet hash mismatch");
  const std::uint32_t n = r.u32();
  for (std::uint32_t i = 0; i < n; ++i) {
    std::string name = r.str();
    c.parameters.push_back({std::move(name), r.tensor()});
  }
  c.state.epoch = r.i64();
  c.state.best_val_loss = r.f64();
  c.state.best_epoch = r.i64();
  c.state.epochs_without_improvement = r.i64();
  if (r.u8() != 0) {
    AdamState s;
    s.step = r.i64();
    const std::uint32_t count = r.u32();
    for (std::uint32_t i = 0; i < count; ++i) s.m.push_back(r.tensor());
    for (std::uint32_t i = 0; i < count; ++i) s.v.push_back(r.tensor());
    c.optimizer = std::move(s);
  }
  if (r.remaining() != 0) throw IntegrityError("trailing bytes in checkpoint");
  return c;
}

void require_alphabet(const Checkpoint& checkpoint, const Alphabet& expected) {
  if (checkpoint.alphabet.hash() != expected.hash() || !(checkpoint.alphabet == expected)) {
    throw ConfigError("checkpoint alphabet \"" + checkpoint.alphabet.characters() +
                      "\" differs from \"" + expected.characters() + "\"");
  }
}

}  // namespace ctcocr

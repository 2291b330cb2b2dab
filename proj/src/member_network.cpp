#include "wisdomnet/member_network.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace wisdomnet {

namespace {

constexpr std::array<std::uint8_t, 4> kMagic = {'W', 'S', 'N', 'W'};

class ByteWriter {
 public:
  void bytes(const std::uint8_t* p, std::size_t n) { out_.insert(out_.end(), p, p + n); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> in, const std::string& origin)
      : in_(in), origin_(origin) {}

  void need(std::size_t n) const {
    if (in_.size() - pos_ < n)
      fail(ErrorCode::Format, origin_ + ": weight file truncated at byte " + std::to_string(pos_));
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{in_[pos_ + i]} << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{in_[pos_ + i]} << (8 * i);
    pos_ += 8;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::span<const std::uint8_t> take(std::size_t n) {
    need(n);
    auto s = in_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
  const std::string& origin_;
};

}  // namespace

std::vector<std::uint8_t> serialize_weights(const MemberNetwork& net) {
  ByteWriter w;
  w.bytes(kMagic.data(), kMagic.size());
  w.u32(kWeightFormatVersion);
  w.u32(static_cast<std::uint32_t>(net.input_side()));
  w.u64(net.seed());
  const auto params = net.parameters();
  w.u32(static_cast<std::uint32_t>(params.size()));
  for (const Tensor<float>* p : params) {
    w.u64(p->size());
    for (float v : p->data()) w.f32(v);
  }
  return w.take();
}

MemberNetwork deserialize_weights(std::span<const std::uint8_t> bytes, const std::string& origin) {
  ByteReader r(bytes, origin);
  auto magic = r.take(kMagic.size());
  if (!std::equal(magic.begin(), magic.end(), kMagic.begin()))
    fail(ErrorCode::Format, origin + ": bad magic, not a member weight file");
  const std::uint32_t version = r.u32();
  if (version != kWeightFormatVersion)
    fail(ErrorCode::VersionMismatch, origin + ": weight format version " + std::to_string(version) +
                                         ", expected " + std::to_string(kWeightFormatVersion));
  const std::uint32_t side = r.u32();
  const std::uint64_t seed = r.u64();
  try {
    MemberNetwork::validate_side(side);
  } catch (const Error& e) {
    fail(ErrorCode::Format, origin + ": " + e.what());
  }
  const std::uint32_t count = r.u32();
  if (count != MemberNetwork::kParameterBuffers)
    fail(ErrorCode::Format, origin + ": expected " +
                                std::to_string(MemberNetwork::kParameterBuffers) +
                                " parameter buffers, found " + std::to_string(count));

  // Built into a fresh network; only returned once every buffer validated.
  MemberNetwork net = MemberNetwork::empty(seed, side);
  for (Tensor<float>* p : net.parameters()) {
    const std::uint64_t n = r.u64();
    if (n != p->size())
      fail(ErrorCode::Format, origin + ": parameter buffer length " + std::to_string(n) +
                                  " does not match architecture (" + std::to_string(p->size()) +
                                  ")");
    r.need(n * 4);
    for (float& v : p->data()) {
      v = r.f32();
      if (!std::isfinite(v)) fail(ErrorCode::Format, origin + ": non-finite weight");
    }
  }
  if (!r.done()) fail(ErrorCode::Format, origin + ": trailing bytes after weight data");
  return net;
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::Io, "cannot open " + tmp.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorCode::Io, "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    fail(ErrorCode::Io, "cannot move temp file into " + path.string());
  }
}

void write_file_atomic(const std::filesystem::path& path, const std::string& text) {
  write_file_atomic(path, std::span<const std::uint8_t>(
                              reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void save_weights(const MemberNetwork& net, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_weights(net));
}

MemberNetwork load_weights(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return deserialize_weights(bytes, path.string());
}

}  // namespace wisdomnet

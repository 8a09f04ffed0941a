#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "sketchgen/layers.hpp"

namespace sketchgen {

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::uint32_t crc32(const void* data, std::size_t len,
                           std::uint32_t crc = 0) {
  static const auto table = [] {
    std::array<std::uint32_t, 256> t{};
    for (std::uint32_t i = 0; i < 256; ++i) {
      std::uint32_t c = i;
      for (int k = 0; k < 8; ++k)
        c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      t[i] = c;
    }
    return t;
  }();
  crc ^= 0xFFFFFFFFu;
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i)
    crc = table[(crc ^ p[i]) & 0xFF] ^ (crc >> 8);
  return crc ^ 0xFFFFFFFFu;
}

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(char((v >> (8 * i)) & 0xFF));
}

inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(char((v >> (8 * i)) & 0xFF));
}

inline void put_f32(std::string& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

struct ByteReader {
  const std::string& buf;
  std::size_t pos = 0;
  void need(std::size_t n) const {
    if (pos + n > buf.size())
      throw CheckpointError("checkpoint: truncated file");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= std::uint32_t(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    pos += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= std::uint64_t(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    pos += 8;
    return v;
  }
  float f32() {
    const std::uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s = buf.substr(pos, n);
    pos += n;
    return s;
  }
};

}  // namespace detail

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Container: "SKG1" magic, u32 version, u64 metadata length plus JSON
// metadata, then each tensor as raw little-endian f32 in manifest order,
// and a trailing CRC-32 of everything before it.
struct Checkpoint {
  std::map<std::string, std::string> metadata;
  // name, shape, values; order is the serialization order
  struct Entry {
    std::string name;
    Shape shape;
    std::vector<float> values;
  };
  std::vector<Entry> tensors;

  const Entry* find(const std::string& name) const {
    for (const auto& e : tensors)
      if (e.name == name) return &e;
    return nullptr;
  }
};

inline std::string serialize_checkpoint(const Checkpoint& ckpt) {
  nlohmann::ordered_json meta;
  meta["metadata"] = ckpt.metadata;
  meta["tensors"] = nlohmann::ordered_json::array();
  for (const auto& e : ckpt.tensors)
    meta["tensors"].push_back({{"name", e.name}, {"shape", e.shape}});
  const std::string meta_str = meta.dump();

  std::string out = "SKG1";
  detail::put_u32(out, kCheckpointVersion);
  detail::put_u64(out, meta_str.size());
  out += meta_str;
  for (const auto& e : ckpt.tensors) {
    if (long(e.values.size()) != shape_numel(e.shape))
      throw CheckpointError("checkpoint: entry '" + e.name +
                            "' size does not match its shape");
    for (float v : e.values) detail::put_f32(out, v);
  }
  detail::put_u32(out, detail::crc32(out.data(), out.size()));
  return out;
}

inline Checkpoint deserialize_checkpoint(const std::string& buf) {
  if (buf.size() < 12 + 4 || buf.compare(0, 4, "SKG1") != 0)
    throw CheckpointError("checkpoint: bad magic");
  std::uint32_t stored_crc = 0;
  for (int i = 0; i < 4; ++i)
    stored_crc |= std::uint32_t(static_cast<unsigned char>(
                      buf[buf.size() - 4 + i]))
                  << (8 * i);
  if (detail::crc32(buf.data(), buf.size() - 4) != stored_crc)
    throw CheckpointError("checkpoint: CRC mismatch, file is corrupt");

  detail::ByteReader r{buf};
  r.pos = 4;
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion)
    throw CheckpointError("checkpoint: unsupported version " +
                          std::to_string(version));
  const std::uint64_t meta_len = r.u64();
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(r.bytes(meta_len));
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("checkpoint: bad metadata: ") +
                          e.what());
  }

  Checkpoint ckpt;
  for (auto& [k, v] : meta.at("metadata").items())
    ckpt.metadata[k] = v.get<std::string>();
  for (auto& t : meta.at("tensors")) {
    Checkpoint::Entry e;
    e.name = t.at("name").get<std::string>();
    e.shape = t.at("shape").get<Shape>();
    const long n = shape_numel(e.shape);
    e.values.resize(n);
    for (long i = 0; i < n; ++i) e.values[i] = r.f32();
    ckpt.tensors.push_back(std::move(e));
  }
  if (r.pos != buf.size() - 4)
    throw CheckpointError("checkpoint: trailing bytes after tensor data");
  return ckpt;
}

inline void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  const std::string buf = serialize_checkpoint(ckpt);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw CheckpointError("checkpoint: cannot open " + path);
  f.write(buf.data(), std::streamsize(buf.size()));
  if (!f) throw CheckpointError("checkpoint: write failed for " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CheckpointError("checkpoint: cannot open " + path);
  std::string buf((std::istreambuf_iterator<char>(f)),
                  std::istreambuf_iterator<char>());
  return deserialize_checkpoint(buf);
}

// params <-> checkpoint bridges

template <typename T>
inline void pack_params(Checkpoint& ckpt, const ParamList<T>& params,
                        const std::string& prefix = "") {
  for (const auto& [name, p] : params) {
    Checkpoint::Entry e;
    e.name = prefix + name;
    e.shape = p.shape();
    e.values.reserve(p.size());
    for (long i = 0; i < p.size(); ++i) e.values.push_back(float(p.data()[i]));
    ckpt.tensors.push_back(std::move(e));
  }
}

template <typename T>
inline void unpack_params(const Checkpoint& ckpt, ParamList<T>& params,
                          const std::string& prefix = "") {
  for (auto& [name, p] : params) {
    const auto* e = ckpt.find(prefix + name);
    if (!e)
      throw CheckpointError("checkpoint: missing tensor '" + prefix + name +
                            "'");
    if (e->shape != p.shape())
      throw CheckpointError("checkpoint: shape mismatch for '" + prefix +
                            name + "': file has " + shape_str(e->shape) +
                            ", model expects " + shape_str(p.shape()));
    for (long i = 0; i < p.size(); ++i) p.data()[i] = T(e->values[i]);
  }
}

}  // namespace sketchgen

#include "ipg/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "ipg/digest.hpp"

namespace ipg::model {

namespace {

constexpr char kMagic[4] = {'I', 'P', 'G', 'M'};

void put_u16(std::string& out, uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& out, float v) {
  uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

class Reader {
 public:
  Reader(const uint8_t* data, size_t size) : data_(data), size_(size) {}

  size_t pos() const { return pos_; }
  size_t remaining() const { return size_ - pos_; }

  const uint8_t* take(size_t n) {
    if (remaining() < n)
      throw CheckpointError(CheckpointError::Kind::Truncated, "checkpoint file is truncated");
    const uint8_t* p = data_ + pos_;
    pos_ += n;
    return p;
  }

  uint16_t u16() {
    const uint8_t* p = take(2);
    return static_cast<uint16_t>(p[0] | (p[1] << 8));
  }

  uint32_t u32() {
    const uint8_t* p = take(4);
    return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
           (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
  }

  float f32() {
    uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }

 private:
  const uint8_t* data_;
  size_t size_;
  size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const InfillModel<float>& model, const std::string& path) {
  std::string payload;
  payload.append(kMagic, 4);
  put_u16(payload, kCheckpointVersion);

  const std::string config = model.config.to_json();
  put_u32(payload, static_cast<uint32_t>(config.size()));
  payload += config;

  for (const auto& [name, p] : model.params.entries()) {
    put_u32(payload, static_cast<uint32_t>(name.size()));
    payload += name;
    put_u32(payload, static_cast<uint32_t>(p.value.shape.size()));
    for (size_t d : p.value.shape) put_u32(payload, static_cast<uint32_t>(d));
    for (float v : p.value.v) put_f32(payload, v);
  }

  auto digest = sha256(payload.data(), payload.size());

  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write checkpoint: " + path);
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  out.write(reinterpret_cast<const char*>(digest.data()), static_cast<std::streamsize>(digest.size()));
  if (!out) throw InputError("failed writing checkpoint: " + path);
}

InfillModel<float> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open checkpoint: " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (bytes.size() < 4 + 2 + 32)
    throw CheckpointError(CheckpointError::Kind::Truncated, "checkpoint file is truncated");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw CheckpointError(CheckpointError::Kind::BadMagic, "not a checkpoint: " + path);

  const size_t payload_size = bytes.size() - 32;
  Reader r(reinterpret_cast<const uint8_t*>(bytes.data()), payload_size);
  r.take(4);  // magic
  uint16_t version = r.u16();
  if (version != kCheckpointVersion)
    throw CheckpointError(CheckpointError::Kind::BadVersion,
                          "unsupported checkpoint version " + std::to_string(version));

  uint32_t config_len = r.u32();
  const uint8_t* config_bytes = r.take(config_len);
  ModelConfig config =
      ModelConfig::from_json(std::string(reinterpret_cast<const char*>(config_bytes), config_len));

  nn::ParamStore<float> store;
  while (r.remaining() > 0) {
    uint32_t name_len = r.u32();
    const uint8_t* name_bytes = r.take(name_len);
    std::string name(reinterpret_cast<const char*>(name_bytes), name_len);
    uint32_t rank = r.u32();
    std::vector<size_t> shape(rank);
    size_t count = 1;
    for (uint32_t i = 0; i < rank; ++i) {
      shape[i] = r.u32();
      count *= shape[i];
    }
    if (count > r.remaining() / 4 + 1)
      throw CheckpointError(CheckpointError::Kind::Truncated, "checkpoint file is truncated");
    auto& value = store.add(name, std::move(shape));
    for (size_t i = 0; i < count; ++i) value.v[i] = r.f32();
  }

  auto digest = sha256(bytes.data(), payload_size);
  if (std::memcmp(digest.data(), bytes.data() + payload_size, 32) != 0)
    throw CheckpointError(CheckpointError::Kind::DigestMismatch,
                          "checkpoint digest mismatch (file is corrupt)");

  return InfillModel<float>::adopt(config, std::move(store));
}

}  // namespace ipg::model

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <zlib.h>

#include <json.hpp>

#include "binlite/error.hpp"
#include "binlite/model.hpp"

namespace binlite {

namespace {

constexpr char kMagic[4] = {'B', 'N', 'L', 'T'};
constexpr std::uint16_t kVersion = 1;

struct ByteWriter {
  std::vector<std::uint8_t> buf;

  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    buf.insert(buf.end(), b, b + n);
  }
  void u8(std::uint8_t v) { buf.push_back(v); }
  void u16(std::uint16_t v) {
    buf.push_back(static_cast<std::uint8_t>(v));
    buf.push_back(static_cast<std::uint8_t>(v >> 8));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void f32(float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    u32(bits);
  }
  void str16(const std::string& s) {
    u16(static_cast<std::uint16_t>(s.size()));
    bytes(s.data(), s.size());
  }
};

struct ByteReader {
  const std::uint8_t* p;
  std::size_t n;
  std::size_t off = 0;

  void need(std::size_t k) const {
    if (off + k > n) throw TruncatedError("model file ends inside a record");
  }
  const std::uint8_t* take(std::size_t k) {
    need(k);
    const std::uint8_t* out = p + off;
    off += k;
    return out;
  }
  std::uint8_t u8() { return *take(1); }
  std::uint16_t u16() {
    const auto* b = take(2);
    return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
  }
  std::uint32_t u32() {
    const auto* b = take(4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  float f32() {
    const std::uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
  std::string str16() {
    const std::uint16_t len = u16();
    const auto* b = take(len);
    return std::string(reinterpret_cast<const char*>(b), len);
  }
};

void write_layer_spec(ByteWriter& w, const LayerSpec& s) {
  w.u8(static_cast<std::uint8_t>(s.kind));
  switch (s.kind) {
    case LayerKind::conv:
    case LayerKind::pointwise_conv:
    case LayerKind::depthwise_conv:
      w.u16(static_cast<std::uint16_t>(s.conv.kernel_h));
      w.u16(static_cast<std::uint16_t>(s.conv.kernel_w));
      w.u8(static_cast<std::uint8_t>(s.conv.stride));
      w.u8(static_cast<std::uint8_t>(s.conv.padding));
      w.u32(static_cast<std::uint32_t>(s.conv.in_channels));
      w.u32(static_cast<std::uint32_t>(s.conv.out_channels));
      w.u8(s.use_bias ? 1 : 0);
      break;
    case LayerKind::batchnorm:
      w.u32(static_cast<std::uint32_t>(s.channels));
      w.f32(s.bn_eps);
      w.f32(s.bn_momentum);
      break;
    case LayerKind::dense:
      w.u32(static_cast<std::uint32_t>(s.in_features));
      w.u32(static_cast<std::uint32_t>(s.units));
      break;
    case LayerKind::dropout:
      w.f32(s.drop_rate);
      break;
    case LayerKind::maxpool:
    case LayerKind::meanpool:
      w.u16(static_cast<std::uint16_t>(s.window));
      w.u16(static_cast<std::uint16_t>(s.stride));
      break;
    case LayerKind::residual_add:
      w.i32(s.skip_from);
      break;
    default:
      break;
  }
  w.u8(s.trainable ? 1 : 0);
}

LayerSpec read_layer_spec(ByteReader& r) {
  LayerSpec s;
  const std::uint8_t kind = r.u8();
  if (kind > static_cast<std::uint8_t>(LayerKind::residual_add))
    throw TruncatedError("model file names an unknown layer kind");
  s.kind = static_cast<LayerKind>(kind);
  switch (s.kind) {
    case LayerKind::conv:
    case LayerKind::pointwise_conv:
    case LayerKind::depthwise_conv:
      s.conv.kernel_h = r.u16();
      s.conv.kernel_w = r.u16();
      s.conv.stride = r.u8();
      s.conv.padding = static_cast<Padding>(r.u8());
      s.conv.in_channels = static_cast<int>(r.u32());
      s.conv.out_channels = static_cast<int>(r.u32());
      s.use_bias = r.u8() != 0;
      break;
    case LayerKind::batchnorm:
      s.channels = static_cast<int>(r.u32());
      s.bn_eps = r.f32();
      s.bn_momentum = r.f32();
      break;
    case LayerKind::dense:
      s.in_features = static_cast<int>(r.u32());
      s.units = static_cast<int>(r.u32());
      break;
    case LayerKind::dropout:
      s.drop_rate = r.f32();
      break;
    case LayerKind::maxpool:
    case LayerKind::meanpool:
      s.window = r.u16();
      s.stride = r.u16();
      break;
    case LayerKind::residual_add:
      s.skip_from = r.i32();
      break;
    default:
      break;
  }
  s.trainable = r.u8() != 0;
  return s;
}

void write_tensor_record(ByteWriter& w, const std::string& name, Dtype dtype,
                         const std::vector<int>& shape, const void* payload,
                         std::size_t payload_bytes, float scale) {
  w.str16(name);
  w.u8(static_cast<std::uint8_t>(dtype));
  w.u8(static_cast<std::uint8_t>(shape.size()));
  for (int e : shape) w.u32(static_cast<std::uint32_t>(e));
  if (dtype == Dtype::i8) w.f32(scale);
  w.bytes(payload, payload_bytes);
}

} // namespace

void save_model(const ModelGraph& g, const std::string& path) {
  ByteWriter w;
  w.bytes(kMagic, 4);
  w.u16(kVersion);
  w.u16(0); // flags

  nlohmann::json meta;
  meta["arch"] = g.meta.arch;
  meta["seed"] = g.meta.seed;
  meta["width_multiplier"] = g.meta.width_multiplier;
  meta["input_shape"] = g.input_shape;
  meta["class_names"] = g.class_names;
  meta["dropout_rates"] = g.meta.dropout_rates;
  meta["normalization"] = g.meta.normalization;
  meta["quantized"] = g.meta.quantized;
  meta["body_end"] = g.body_end;
  const std::string mjson = meta.dump();
  w.u32(static_cast<std::uint32_t>(mjson.size()));
  w.bytes(mjson.data(), mjson.size());

  w.u32(static_cast<std::uint32_t>(g.layers.size()));
  for (const auto& u : g.layers) write_layer_spec(w, u.spec);

  std::uint32_t tensor_count = 0;
  for (const auto& u : g.layers) {
    for (const auto& [name, t] : u.state.params) {
      if (u.qparams.count(name)) continue; // stored from the quantized payload
      if (!t.empty()) ++tensor_count;
    }
    tensor_count += static_cast<std::uint32_t>(u.qparams.size());
    for (const auto& [name, t] : u.state.buffers)
      if (!t.empty()) ++tensor_count;
  }
  w.u32(tensor_count);

  for (std::size_t i = 0; i < g.layers.size(); ++i) {
    const auto& u = g.layers[i];
    const std::string prefix = "L" + std::to_string(i) + ".";
    for (const auto& [name, t] : u.state.params) {
      if (u.qparams.count(name) || t.empty()) continue;
      write_tensor_record(w, prefix + name, Dtype::f32, t.shape(), t.data(),
                          static_cast<std::size_t>(t.numel()) * 4, 0.0f);
    }
    for (const auto& [name, qt] : u.qparams) {
      if (qt.dtype == Dtype::f16)
        write_tensor_record(w, prefix + name, Dtype::f16, qt.shape, qt.half.data(),
                            qt.half.size() * 2, 0.0f);
      else
        write_tensor_record(w, prefix + name, Dtype::i8, qt.shape, qt.q.data(), qt.q.size(),
                            qt.scale);
    }
    for (const auto& [name, t] : u.state.buffers) {
      if (t.empty()) continue;
      write_tensor_record(w, prefix + name, Dtype::f32, t.shape(), t.data(),
                          static_cast<std::size_t>(t.numel()) * 4, 0.0f);
    }
  }

  std::uint32_t crc = static_cast<std::uint32_t>(crc32(0L, Z_NULL, 0));
  crc = static_cast<std::uint32_t>(
      crc32(crc, w.buf.data(), static_cast<uInt>(w.buf.size())));
  w.u32(crc);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(w.buf.data()),
            static_cast<std::streamsize>(w.buf.size()));
  if (!out) throw IoError("short write to '" + path + "'");
}

ModelGraph load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw IoError("cannot open '" + path + "'");
  const std::streamsize size = in.tellg();
  in.seekg(0);
  std::vector<std::uint8_t> buf(static_cast<std::size_t>(size));
  in.read(reinterpret_cast<char*>(buf.data()), size);
  if (!in) throw IoError("short read from '" + path + "'");

  if (buf.size() < 12) throw TruncatedError("model file shorter than header");
  if (std::memcmp(buf.data(), kMagic, 4) != 0)
    throw BadMagicError("'" + path + "' is not a model file (bad magic)");
  const std::uint16_t version =
      static_cast<std::uint16_t>(buf[4] | (static_cast<std::uint16_t>(buf[5]) << 8));
  if (version != kVersion)
    throw BadVersionError("model file version " + std::to_string(version) + ", expected " +
                          std::to_string(kVersion));

  std::uint32_t crc = static_cast<std::uint32_t>(crc32(0L, Z_NULL, 0));
  crc = static_cast<std::uint32_t>(
      crc32(crc, buf.data(), static_cast<uInt>(buf.size() - 4)));
  std::uint32_t stored = 0;
  for (int i = 0; i < 4; ++i)
    stored |= static_cast<std::uint32_t>(buf[buf.size() - 4 + static_cast<std::size_t>(i)])
              << (8 * i);
  if (crc != stored) throw ChecksumError("model file checksum mismatch");

  ByteReader r{buf.data(), buf.size() - 4, 8};

  const std::uint32_t mlen = r.u32();
  const auto* mptr = r.take(mlen);
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(mptr, mptr + mlen);
  } catch (const nlohmann::json::exception&) {
    throw TruncatedError("model metadata block is not valid JSON");
  }

  ModelGraph g;
  g.meta.arch = meta.at("arch").get<std::string>();
  g.meta.seed = meta.at("seed").get<std::uint64_t>();
  g.meta.width_multiplier = meta.at("width_multiplier").get<double>();
  g.input_shape = meta.at("input_shape").get<std::vector<int>>();
  g.class_names = meta.at("class_names").get<std::vector<std::string>>();
  g.meta.dropout_rates = meta.at("dropout_rates").get<std::vector<float>>();
  g.meta.normalization = meta.at("normalization").get<std::string>();
  g.meta.quantized = meta.at("quantized").get<std::string>();
  g.body_end = meta.at("body_end").get<int>();

  const std::uint32_t layer_count = r.u32();
  g.layers.resize(layer_count);
  for (std::uint32_t i = 0; i < layer_count; ++i) g.layers[i].spec = read_layer_spec(r);

  const std::uint32_t tensor_count = r.u32();
  for (std::uint32_t t = 0; t < tensor_count; ++t) {
    const std::string name = r.str16();
    const Dtype dtype = static_cast<Dtype>(r.u8());
    const int rank = r.u8();
    if (rank < 1 || rank > 4) throw TruncatedError("tensor record with invalid rank");
    std::vector<int> shape(static_cast<std::size_t>(rank));
    std::int64_t numel = 1;
    for (auto& e : shape) {
      e = static_cast<int>(r.u32());
      numel *= e;
    }
    const auto dot = name.find('.');
    if (name.empty() || name[0] != 'L' || dot == std::string::npos)
      throw TruncatedError("malformed tensor record name '" + name + "'");
    const std::size_t idx = static_cast<std::size_t>(std::stoul(name.substr(1, dot - 1)));
    if (idx >= g.layers.size()) throw TruncatedError("tensor record for missing layer");
    const std::string pname = name.substr(dot + 1);
    auto& unit = g.layers[idx];
    const bool is_buffer = pname == "running_mean" || pname == "running_var";

    if (dtype == Dtype::f32) {
      const auto* payload = r.take(static_cast<std::size_t>(numel) * 4);
      Tensor tt(shape);
      std::memcpy(tt.data(), payload, static_cast<std::size_t>(numel) * 4);
      (is_buffer ? unit.state.buffers : unit.state.params)[pname] = std::move(tt);
    } else if (dtype == Dtype::f16) {
      const auto* payload = r.take(static_cast<std::size_t>(numel) * 2);
      QuantTensor qt;
      qt.dtype = Dtype::f16;
      qt.shape = shape;
      qt.half.resize(static_cast<std::size_t>(numel));
      std::memcpy(qt.half.data(), payload, static_cast<std::size_t>(numel) * 2);
      unit.qparams[pname] = std::move(qt);
      unit.state.params[pname] = Tensor{}; // cache slot, empty until dequantized
    } else if (dtype == Dtype::i8) {
      const float scale = r.f32();
      const auto* payload = r.take(static_cast<std::size_t>(numel));
      QuantTensor qt;
      qt.dtype = Dtype::i8;
      qt.shape = shape;
      qt.scale = scale;
      qt.q.resize(static_cast<std::size_t>(numel));
      std::memcpy(qt.q.data(), payload, static_cast<std::size_t>(numel));
      unit.qparams[pname] = std::move(qt);
      unit.state.params[pname] = Tensor{};
    } else {
      throw TruncatedError("tensor record with unknown dtype tag");
    }
  }
  if (r.off != r.n) throw TruncatedError("trailing bytes after the last tensor record");
  return g;
}

} // namespace binlite

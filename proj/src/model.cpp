#include "binlite/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "binlite/error.hpp"

namespace binlite {

const char* arch_name(ArchKind a) {
  switch (a) {
    case ArchKind::scratch_cnn: return "scratch_cnn";
    case ArchKind::vgg16: return "vgg16";
    case ArchKind::mobilenet_v2: return "mobilenet_v2";
    case ArchKind::mobilenet_transfer: return "mobilenet_transfer";
  }
  return "?";
}

ArchKind arch_from_name(const std::string& name) {
  if (name == "scratch" || name == "scratch_cnn") return ArchKind::scratch_cnn;
  if (name == "vgg16" || name == "vgg") return ArchKind::vgg16;
  if (name == "mobilenet" || name == "mobilenet_v2") return ArchKind::mobilenet_v2;
  if (name == "transfer" || name == "mobilenet_transfer") return ArchKind::mobilenet_transfer;
  throw ConfigError("unknown architecture '" + name + "'");
}

bool ModelGraph::quantized() const {
  for (const auto& u : layers)
    if (!u.qparams.empty()) return true;
  return false;
}

namespace {

constexpr int kInputSide = 224;

// MobileNetV2 stage plan (expansion, channels, repeats, first stride).
// 19 bottlenecks total; body lands at ~2.29M parameters at width 1.
constexpr struct {
  int t, c, n, s;
} kV2Plan[] = {{1, 16, 1, 1}, {6, 24, 2, 2}, {6, 32, 4, 2}, {6, 64, 5, 2},
               {6, 96, 3, 1}, {6, 160, 3, 2}, {6, 320, 1, 1}};

constexpr int kHeadWidth1 = 2048;
constexpr int kHeadWidth2 = 1536;
constexpr float kScratchDrop = 0.5f;
constexpr float kHeadDrop = 0.3f;

struct Builder {
  ModelGraph g;
  std::vector<int> cur; // [1,h,w,c] shape during construction
  std::vector<std::vector<int>> out_shapes;
  std::uint64_t seed;

  explicit Builder(std::uint64_t s, std::vector<int> input_hwc) : seed(s) {
    g.input_shape = input_hwc;
    cur = {1, input_hwc[0], input_hwc[1], input_hwc[2]};
  }

  int add(LayerSpec spec) {
    if (spec.kind == LayerKind::residual_add) {
      const auto& src = out_shapes[static_cast<std::size_t>(spec.skip_from)];
      if (src != cur) throw ConfigError("residual_add: branch shapes differ");
    } else {
      cur = layer_output_shape(spec, cur);
    }
    LayerUnit u;
    u.spec = spec;
    Rng lr(mix_seed(seed, g.layers.size(), 0xb17eULL));
    init_layer(u.spec, u.state, lr);
    g.layers.push_back(std::move(u));
    out_shapes.push_back(cur);
    return static_cast<int>(g.layers.size()) - 1;
  }

  int channels() const { return cur.back(); }
  int spatial() const { return cur[1]; }

  void conv(int out_ch, int kernel, int stride, bool bias, LayerKind kind = LayerKind::conv) {
    LayerSpec s;
    s.kind = kind;
    s.conv = {kernel, kernel, stride, Padding::same, channels(), out_ch};
    s.use_bias = bias;
    add(s);
  }
  void depthwise(int kernel, int stride) {
    LayerSpec s;
    s.kind = LayerKind::depthwise_conv;
    s.conv = {kernel, kernel, stride, Padding::same, channels(), channels()};
    s.use_bias = false;
    add(s);
  }
  void bn() {
    LayerSpec s;
    s.kind = LayerKind::batchnorm;
    s.channels = channels();
    add(s);
  }
  void act(LayerKind kind) {
    LayerSpec s;
    s.kind = kind;
    add(s);
  }
  void pool(LayerKind kind, int window, int stride) {
    LayerSpec s;
    s.kind = kind;
    s.window = window;
    s.stride = stride;
    add(s);
  }
  void dropout(float rate) {
    LayerSpec s;
    s.kind = LayerKind::dropout;
    s.drop_rate = rate;
    add(s);
  }
  void flatten() {
    LayerSpec s;
    s.kind = LayerKind::flatten;
    add(s);
  }
  void dense(int units) {
    LayerSpec s;
    s.kind = LayerKind::dense;
    s.in_features = cur[1];
    s.units = units;
    add(s);
  }
  void softmax() {
    LayerSpec s;
    s.kind = LayerKind::softmax;
    add(s);
  }
  void bottleneck(int out_ch, int expansion, int stride) {
    const int cin = channels();
    const int block_in = static_cast<int>(g.layers.size()) - 1;
    if (expansion != 1) {
      conv(cin * expansion, 1, 1, false, LayerKind::pointwise_conv);
      bn();
      act(LayerKind::relu6);
    }
    depthwise(3, stride);
    bn();
    act(LayerKind::relu6);
    conv(out_ch, 1, 1, false, LayerKind::pointwise_conv);
    bn();
    if (stride == 1 && cin == out_ch) {
      LayerSpec s;
      s.kind = LayerKind::residual_add;
      s.skip_from = block_in;
      add(s);
    }
  }
};

int scaled(int c, double wm) {
  const int v = static_cast<int>(std::lround(c * wm));
  return std::max(1, v);
}

std::vector<std::string> default_class_names(int k) {
  int digits = 1, m = k - 1;
  while (m >= 10) {
    m /= 10;
    ++digits;
  }
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    std::string num = std::to_string(i);
    names.push_back("class_" + std::string(static_cast<std::size_t>(digits) - num.size(), '0') +
                    num);
  }
  return names;
}

void build_v2_body(Builder& b, double wm) {
  b.conv(scaled(32, wm), 3, 2, false);
  b.bn();
  b.act(LayerKind::relu6);
  int cin = b.channels();
  for (const auto& st : kV2Plan) {
    const int cout = scaled(st.c, wm);
    for (int i = 0; i < st.n; ++i) {
      b.bottleneck(cout, st.t, i == 0 ? st.s : 1);
      cin = cout;
    }
  }
  (void)cin;
  b.conv(scaled(1280, wm), 1, 1, false, LayerKind::pointwise_conv);
  b.bn();
  b.act(LayerKind::relu6);
  b.pool(LayerKind::meanpool, b.spatial(), 1); // global average pool
}

} // namespace

ModelGraph build_preset(const ArchPreset& preset, std::uint64_t seed) {
  if (preset.width_multiplier <= 0.0 || preset.width_multiplier > 1.0)
    throw ConfigError("width_multiplier must lie in (0, 1]");
  if (preset.num_classes < 2) throw ConfigError("num_classes must be >= 2");
  const double wm = preset.width_multiplier;
  const int k = preset.num_classes;

  Builder b(seed, {kInputSide, kInputSide, 3});
  b.g.meta.arch = arch_name(preset.name);
  b.g.meta.seed = seed;
  b.g.meta.width_multiplier = wm;

  switch (preset.name) {
    case ArchKind::scratch_cnn: {
      for (int f : {32, 64, 128}) {
        const int ch = scaled(f, wm);
        b.conv(ch, 3, 1, false);
        b.bn();
        b.act(LayerKind::relu);
        b.conv(ch, 3, 1, false);
        b.bn();
        b.act(LayerKind::relu);
        b.pool(LayerKind::meanpool, 2, 2);
        b.dropout(kScratchDrop);
      }
      b.g.body_end = static_cast<int>(b.g.layers.size());
      b.flatten();
      b.dense(k);
      b.softmax();
      b.g.meta.dropout_rates = {kScratchDrop};
      break;
    }
    case ArchKind::vgg16: {
      const int cfg[] = {64, 64, -1, 128, 128, -1, 256, 256, 256, -1,
                         512, 512, 512, -1, 512, 512, 512, -1};
      for (int c : cfg) {
        if (c < 0) {
          b.pool(LayerKind::maxpool, 2, 2);
        } else {
          b.conv(scaled(c, wm), 3, 1, true);
          b.act(LayerKind::relu);
        }
      }
      b.g.body_end = static_cast<int>(b.g.layers.size());
      b.flatten();
      b.dense(scaled(4096, wm));
      b.act(LayerKind::relu);
      b.dense(scaled(4096, wm));
      b.act(LayerKind::relu);
      b.dense(k);
      b.softmax();
      break;
    }
    case ArchKind::mobilenet_v2: {
      build_v2_body(b, wm);
      b.g.body_end = static_cast<int>(b.g.layers.size());
      b.flatten();
      b.dense(k);
      b.softmax();
      break;
    }
    case ArchKind::mobilenet_transfer: {
      build_v2_body(b, wm);
      b.g.body_end = static_cast<int>(b.g.layers.size());
      b.flatten();
      b.dense(kHeadWidth1);
      b.bn();
      b.dropout(kHeadDrop);
      b.dense(kHeadWidth2);
      b.bn();
      b.dropout(kHeadDrop);
      b.dense(k);
      b.softmax();
      b.g.meta.dropout_rates = {kHeadDrop, kHeadDrop};
      freeze(b.g, FreezeSel::body);
      break;
    }
  }

  b.g.class_names = default_class_names(k);
  if (b.g.layers.back().spec.kind != LayerKind::softmax || b.cur[1] != k)
    throw ConfigError("preset did not terminate in a softmax of num_classes width");
  return std::move(b.g);
}

std::int64_t param_count(const ModelGraph& g, bool trainable_only) {
  std::int64_t n = 0;
  for (const auto& u : g.layers) {
    if (trainable_only && !u.spec.trainable) continue;
    n += layer_param_count(u.spec);
  }
  return n;
}

std::int64_t param_count_body(const ModelGraph& g) {
  std::int64_t n = 0;
  for (int i = 0; i < g.body_end; ++i)
    n += layer_param_count(g.layers[static_cast<std::size_t>(i)].spec);
  return n;
}

ModelGraph& freeze(ModelGraph& g, FreezeSel sel) {
  for (std::size_t i = 0; i < g.layers.size(); ++i) {
    bool trainable = true;
    if (sel == FreezeSel::all)
      trainable = false;
    else if (sel == FreezeSel::body)
      trainable = static_cast<int>(i) >= g.body_end;
    g.layers[i].spec.trainable = trainable;
  }
  return g;
}

void copy_body_params(ModelGraph& dst, const ModelGraph& src) {
  if (dst.body_end != src.body_end) throw ConfigError("backbone layer counts differ");
  for (int i = 0; i < dst.body_end; ++i) {
    auto& d = dst.layers[static_cast<std::size_t>(i)];
    const auto& s = src.layers[static_cast<std::size_t>(i)];
    if (d.spec.kind != s.spec.kind) throw ConfigError("backbone layer kinds differ");
    for (auto& [name, p] : d.state.params) {
      const auto it = s.state.params.find(name);
      if (it == s.state.params.end() || !it->second.same_shape(p))
        throw ShapeError("backbone parameter '" + name + "' incompatible at layer " +
                         std::to_string(i));
      p = it->second;
    }
    for (auto& [name, buf] : d.state.buffers) buf = s.state.buffers.at(name);
  }
}

std::vector<std::vector<int>> shape_walk(const ModelGraph& g, int n) {
  std::vector<std::vector<int>> shapes;
  std::vector<int> cur = {n, g.input_shape[0], g.input_shape[1], g.input_shape[2]};
  for (const auto& u : g.layers) {
    if (u.spec.kind != LayerKind::residual_add) cur = layer_output_shape(u.spec, cur);
    shapes.push_back(cur);
  }
  return shapes;
}

Tensor run_forward(ModelGraph& g, const Tensor& batch, Mode mode, Rng* rng, int cache_from) {
  if (batch.rank() != 4 || batch.extent(1) != g.input_shape[0] ||
      batch.extent(2) != g.input_shape[1] || batch.extent(3) != g.input_shape[2])
    throw ShapeError("input batch does not match the model input shape");

  const int L = static_cast<int>(g.layers.size());
  std::vector<char> save(static_cast<std::size_t>(L), 0);
  for (const auto& u : g.layers)
    if (u.spec.kind == LayerKind::residual_add) save[static_cast<std::size_t>(u.spec.skip_from)] = 1;

  std::vector<Tensor> saved(static_cast<std::size_t>(L));
  Tensor cur = batch;
  for (int i = 0; i < L; ++i) {
    auto& u = g.layers[static_cast<std::size_t>(i)];
    const bool want_cache = (mode == Mode::train) && i >= cache_from;
    if (u.spec.kind == LayerKind::residual_add) {
      const Tensor& skip = saved[static_cast<std::size_t>(u.spec.skip_from)];
      if (!skip.same_shape(cur)) throw ShapeError("residual_add: branch shapes differ");
      Tensor y(cur.shape());
      const std::int64_t m = cur.numel();
      const float* a = cur.data();
      const float* b = skip.data();
      float* o = y.data();
      for (std::int64_t j = 0; j < m; ++j) o[j] = a[j] + b[j];
      if (want_cache) u.state.has_cache = true;
      cur = std::move(y);
    } else {
      cur = forward(u.spec, u.state, cur, mode, rng, want_cache);
    }
    if (save[static_cast<std::size_t>(i)]) saved[static_cast<std::size_t>(i)] = cur;
  }
  return cur;
}

Tensor predict(const ModelGraph& g, const Tensor& batch) {
  // infer mode touches no layer state, so the graph stays logically const
  auto& mut = const_cast<ModelGraph&>(g);
  return run_forward(mut, batch, Mode::infer, nullptr, static_cast<int>(g.layers.size()));
}

} // namespace binlite

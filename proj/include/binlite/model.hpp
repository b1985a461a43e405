#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "binlite/layers.hpp"
#include "binlite/quant.hpp"

namespace binlite {

enum class ArchKind : std::uint8_t {
  scratch_cnn = 0,
  vgg16 = 1,
  mobilenet_v2 = 2,
  mobilenet_transfer = 3,
};

const char* arch_name(ArchKind a);
ArchKind arch_from_name(const std::string& name);

struct ArchPreset {
  ArchKind name = ArchKind::scratch_cnn;
  double width_multiplier = 1.0; // in (0,1]
  int num_classes = 2;
};

struct ModelMeta {
  std::string arch;
  std::uint64_t seed = 0;
  double width_multiplier = 1.0;
  std::vector<float> dropout_rates;
  std::string normalization = "resize224_bilinear_scale255";
  std::string quantized = "none"; // none | f16 | i8
};

// One layer of the graph: spec + live f32 state + (after quantization)
// the stored payloads. When a qparam exists for a name, the matching state
// param acts as its dequantize-once cache and may be empty until materialized.
struct LayerUnit {
  LayerSpec spec;
  LayerState state;
  std::map<std::string, QuantTensor> qparams;
};

// Ordered sequence of layers plus everything needed to run and serialize
// them. Immutable after build except through training steps; predict is
// read-only.
struct ModelGraph {
  std::vector<LayerUnit> layers;
  std::vector<int> input_shape;         // [h,w,c]
  std::vector<std::string> class_names; // sorted, unique
  ModelMeta meta;
  int body_end = 0; // layers [0, body_end) form the backbone for freeze(body)

  bool quantized() const;
};

// Build one of the preset architectures, seed-deterministic. Validates
// shape compatibility end to end and that the final softmax width matches
// num_classes.
ModelGraph build_preset(const ArchPreset& preset, std::uint64_t seed);

// Exact parameter element count (batchnorm running stats are buffers, not
// parameters). trainable_only filters by the layer flag.
std::int64_t param_count(const ModelGraph& g, bool trainable_only = false);
// Count over the body/head partition, used for reporting.
std::int64_t param_count_body(const ModelGraph& g);

enum class FreezeSel : std::uint8_t { body = 0, all = 1, none = 2 };

// Set trainable flags. Frozen batchnorm layers stop updating running stats
// and behave as infer-mode affine maps even during training.
ModelGraph& freeze(ModelGraph& g, FreezeSel sel);

// Copy backbone parameters and buffers (layers [0, body_end)) from a
// compatible source graph, e.g. a pretrained mobilenet_v2 into a
// mobilenet_transfer of the same width.
void copy_body_params(ModelGraph& dst, const ModelGraph& src);

// Infer-mode forward for a batch [n,h,w,c] -> probabilities [n,k].
// Requires an f32 or dequantize-cached graph; thread-safe across callers.
Tensor predict(const ModelGraph& g, const Tensor& batch);

// Shared executor. mode=train records backward caches for layers at index
// >= cache_from (pass 0 for all, graph size for none). Residual skips are
// routed here. Returns the final layer output.
Tensor run_forward(ModelGraph& g, const Tensor& batch, Mode mode, Rng* rng, int cache_from);

// Per-layer output shapes for a batch size of n (validation + inspect).
std::vector<std::vector<int>> shape_walk(const ModelGraph& g, int n);

// Bit-exact binary serialization (format: magic BNLT, version, JSON
// metadata, layer table, tensor records, trailing CRC32).
void save_model(const ModelGraph& g, const std::string& path);
ModelGraph load_model(const std::string& path);

} // namespace binlite

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "binlite/rng.hpp"
#include "binlite/tensor.hpp"

namespace binlite {

enum class LayerKind : std::uint8_t {
  conv = 0,
  depthwise_conv = 1,
  pointwise_conv = 2,
  batchnorm = 3,
  relu = 4,
  relu6 = 5,
  dense = 6,
  dropout = 7,
  maxpool = 8,
  meanpool = 9,
  flatten = 10,
  softmax = 11,
  residual_add = 12,
};

const char* layer_kind_name(LayerKind k);

struct LayerSpec {
  LayerKind kind = LayerKind::relu;
  ConvSpec conv;              // conv / depthwise_conv / pointwise_conv
  bool use_bias = true;       // conv family and dense
  int in_features = 0;        // dense
  int units = 0;              // dense
  float drop_rate = 0.0f;     // dropout, in [0,1)
  int window = 0, stride = 0; // pools
  int channels = 0;           // batchnorm
  float bn_eps = 1e-5f;
  float bn_momentum = 0.9f;   // running-stats momentum
  int skip_from = -1;         // residual_add: index of the layer whose output is added
  bool trainable = true;
};

enum class Mode : std::uint8_t { train = 0, infer = 1 };

// Parameters, running buffers and the forward cache for one layer.
// Single-writer: forward/backward mutate only their own state.
template <typename T>
struct LayerStateT {
  std::map<std::string, TensorT<T>> params;  // weights, bias, gamma, beta
  std::map<std::string, TensorT<T>> buffers; // running_mean, running_var

  bool has_cache = false;
  TensorT<T> cached_input;        // conv family, dense, relu, relu6
  TensorT<T> cached_aux;          // batchnorm x-hat, dropout mask, softmax output
  std::vector<T> cached_stats;    // batchnorm per-channel inv-std
  std::vector<std::int32_t> cached_argmax; // maxpool
  std::vector<int> cached_in_shape;        // pools, flatten
  TensorT<T> skip_input;          // residual_add second operand, set by the executor

  void clear_cache() {
    has_cache = false;
    cached_input = {};
    cached_aux = {};
    cached_stats.clear();
    cached_argmax.clear();
    cached_in_shape.clear();
  }
};

using LayerState = LayerStateT<float>;

// Allocate and initialize parameters/buffers for the layer: He-uniform for
// conv/dense weights, zeros for bias/beta, ones for gamma/running_var.
template <typename T>
void init_layer(const LayerSpec& spec, LayerStateT<T>& state, Rng& rng);

// Output shape of the layer for a batched input shape [n,...].
std::vector<int> layer_output_shape(const LayerSpec& spec, const std::vector<int>& in_shape);

// Number of parameter elements (buffers excluded).
std::int64_t layer_param_count(const LayerSpec& spec);

// Forward pass. In train mode the backward cache is recorded unless
// want_cache is false (used to skip storage below the first trainable
// layer). Infer mode never mutates state. Dropout in train mode requires rng.
template <typename T>
TensorT<T> forward(const LayerSpec& spec, LayerStateT<T>& state, const TensorT<T>& input,
                   Mode mode, Rng* rng, bool want_cache = true);

template <typename T>
struct Gradients {
  TensorT<T> input_grad;
  TensorT<T> skip_grad; // residual_add only
  std::vector<std::pair<std::string, TensorT<T>>> param_grads; // empty when frozen
};

// Gradients of a scalar loss w.r.t. input and trainable parameters, given
// the gradient w.r.t. this layer's output. Requires a train-mode forward
// cache. Frozen layers still propagate input_grad but report no param grads.
// want_input_grad=false skips the input-gradient computation for the layer
// at the bottom of a backward walk (the tensor comes back empty).
template <typename T>
Gradients<T> backward(const LayerSpec& spec, LayerStateT<T>& state, const TensorT<T>& upstream,
                      bool want_input_grad = true);

// Central finite differences against the analytic backward through a scalar
// reduction of the outputs (sum by default, or a fixed weighting). Perturbs
// every trainable parameter element and every input element; returns the
// worst relative error. f64 only; epsilon must lie in [1e-7, 1e-3].
double grad_check(const LayerSpec& spec, LayerStateT<double>& state, const DTensor& input,
                  double epsilon, const DTensor* upstream_weights = nullptr,
                  std::uint64_t rng_seed = 0x5eedULL);

} // namespace binlite

#include "binlite/layers.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include "binlite/error.hpp"
#include "binlite/kernels.hpp"

namespace binlite {

const char* layer_kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::conv: return "conv";
    case LayerKind::depthwise_conv: return "depthwise_conv";
    case LayerKind::pointwise_conv: return "pointwise_conv";
    case LayerKind::batchnorm: return "batchnorm";
    case LayerKind::relu: return "relu";
    case LayerKind::relu6: return "relu6";
    case LayerKind::dense: return "dense";
    case LayerKind::dropout: return "dropout";
    case LayerKind::maxpool: return "maxpool";
    case LayerKind::meanpool: return "meanpool";
    case LayerKind::flatten: return "flatten";
    case LayerKind::softmax: return "softmax";
    case LayerKind::residual_add: return "residual_add";
  }
  return "?";
}

namespace {

template <typename T>
void he_uniform(TensorT<T>& t, std::int64_t fan_in, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
  for (std::int64_t i = 0; i < t.numel(); ++i)
    t[i] = static_cast<T>(rng.uniform(-limit, limit));
}

template <typename T>
const TensorT<T>& param(const LayerStateT<T>& st, const std::string& name) {
  auto it = st.params.find(name);
  if (it == st.params.end() || it->second.empty())
    throw StateError("layer parameter '" + name + "' missing (not initialized or not dequantized)");
  return it->second;
}

} // namespace

template <typename T>
void init_layer(const LayerSpec& spec, LayerStateT<T>& state, Rng& rng) {
  switch (spec.kind) {
    case LayerKind::conv:
    case LayerKind::pointwise_conv: {
      const auto& c = spec.conv;
      TensorT<T> w({c.kernel_h, c.kernel_w, c.in_channels, c.out_channels});
      he_uniform(w, static_cast<std::int64_t>(c.kernel_h) * c.kernel_w * c.in_channels, rng);
      state.params["weights"] = std::move(w);
      if (spec.use_bias) state.params["bias"] = TensorT<T>({c.out_channels});
      break;
    }
    case LayerKind::depthwise_conv: {
      const auto& c = spec.conv;
      TensorT<T> w({c.kernel_h, c.kernel_w, c.in_channels});
      he_uniform(w, static_cast<std::int64_t>(c.kernel_h) * c.kernel_w, rng);
      state.params["weights"] = std::move(w);
      break;
    }
    case LayerKind::dense: {
      TensorT<T> w({spec.in_features, spec.units});
      he_uniform(w, spec.in_features, rng);
      state.params["weights"] = std::move(w);
      state.params["bias"] = TensorT<T>({spec.units});
      break;
    }
    case LayerKind::batchnorm: {
      state.params["gamma"] = TensorT<T>::full({spec.channels}, T(1));
      state.params["beta"] = TensorT<T>({spec.channels});
      state.buffers["running_mean"] = TensorT<T>({spec.channels});
      state.buffers["running_var"] = TensorT<T>::full({spec.channels}, T(1));
      break;
    }
    default:
      break;
  }
}

std::vector<int> layer_output_shape(const LayerSpec& spec, const std::vector<int>& in) {
  auto need_rank = [&](std::size_t r) {
    if (in.size() != r)
      throw ShapeError(std::string(layer_kind_name(spec.kind)) + ": expected rank " +
                       std::to_string(r) + " input, got rank " + std::to_string(in.size()));
  };
  switch (spec.kind) {
    case LayerKind::conv:
    case LayerKind::pointwise_conv: {
      need_rank(4);
      if (in[3] != spec.conv.in_channels)
        throw ShapeError("conv: input has " + std::to_string(in[3]) + " channels, spec wants " +
                         std::to_string(spec.conv.in_channels));
      const auto g = conv_geometry(spec.conv, in[1], in[2]);
      return {in[0], g.out_h, g.out_w, spec.conv.out_channels};
    }
    case LayerKind::depthwise_conv: {
      need_rank(4);
      if (in[3] != spec.conv.in_channels)
        throw ShapeError("depthwise_conv: channel mismatch");
      const auto g = conv_geometry(spec.conv, in[1], in[2]);
      return {in[0], g.out_h, g.out_w, in[3]};
    }
    case LayerKind::batchnorm:
      if (in.back() != spec.channels) throw ShapeError("batchnorm: channel mismatch");
      return in;
    case LayerKind::relu:
    case LayerKind::relu6:
    case LayerKind::dropout:
    case LayerKind::residual_add:
      return in;
    case LayerKind::dense:
      need_rank(2);
      if (in[1] != spec.in_features)
        throw ShapeError("dense: input features " + std::to_string(in[1]) + " != " +
                         std::to_string(spec.in_features));
      return {in[0], spec.units};
    case LayerKind::maxpool:
    case LayerKind::meanpool: {
      need_rank(4);
      if (spec.window > in[1] || spec.window > in[2])
        throw ShapeError("pool: window exceeds spatial extent");
      return {in[0], (in[1] - spec.window) / spec.stride + 1,
              (in[2] - spec.window) / spec.stride + 1, in[3]};
    }
    case LayerKind::flatten: {
      if (in.size() < 2) throw ShapeError("flatten: input must be batched");
      int d = 1;
      for (std::size_t i = 1; i < in.size(); ++i) d *= in[i];
      return {in[0], d};
    }
    case LayerKind::softmax:
      need_rank(2);
      return in;
  }
  throw ConfigError("unknown layer kind");
}

std::int64_t layer_param_count(const LayerSpec& spec) {
  switch (spec.kind) {
    case LayerKind::conv:
    case LayerKind::pointwise_conv:
      return static_cast<std::int64_t>(spec.conv.kernel_h) * spec.conv.kernel_w *
                 spec.conv.in_channels * spec.conv.out_channels +
             (spec.use_bias ? spec.conv.out_channels : 0);
    case LayerKind::depthwise_conv:
      return static_cast<std::int64_t>(spec.conv.kernel_h) * spec.conv.kernel_w *
             spec.conv.in_channels;
    case LayerKind::dense:
      return static_cast<std::int64_t>(spec.in_features) * spec.units + spec.units;
    case LayerKind::batchnorm:
      return 2LL * spec.channels;
    default:
      return 0;
  }
}

namespace {

template <typename T>
TensorT<T> conv_forward(const LayerSpec& spec, LayerStateT<T>& state, const TensorT<T>& x,
                        Mode mode, bool want_cache) {
  const auto out_shape = layer_output_shape(spec, x.shape());
  const auto& w = param(state, "weights");
  const T* bias = nullptr;
  if (spec.use_bias) bias = param(state, "bias").data();
  const auto g = conv_geometry(spec.conv, x.extent(1), x.extent(2));
  TensorT<T> y(out_shape);
  kernels::conv2d_fwd(x.data(), x.extent(0), x.extent(1), x.extent(2), spec.conv.in_channels,
                      w.data(), spec.conv.kernel_h, spec.conv.kernel_w, spec.conv.out_channels,
                      bias, spec.conv.stride, g.pad_top, g.pad_left, out_shape[1], out_shape[2],
                      y.data());
  if (mode == Mode::train && want_cache) {
    state.cached_input = x;
    state.has_cache = true;
  }
  return y;
}

template <typename T>
Gradients<T> conv_backward(const LayerSpec& spec, LayerStateT<T>& state,
                           const TensorT<T>& upstream, bool want_input_grad) {
  const auto& x = state.cached_input;
  const auto& w = param(state, "weights");
  const auto g = conv_geometry(spec.conv, x.extent(1), x.extent(2));
  Gradients<T> out;
  if (want_input_grad) {
    out.input_grad = TensorT<T>(x.shape());
    kernels::conv2d_bwd_input(upstream.data(), x.extent(0), upstream.extent(1),
                              upstream.extent(2), spec.conv.out_channels, w.data(),
                              spec.conv.kernel_h, spec.conv.kernel_w, spec.conv.in_channels,
                              spec.conv.stride, g.pad_top, g.pad_left, x.extent(1), x.extent(2),
                              out.input_grad.data());
  }
  if (spec.trainable) {
    TensorT<T> dw(w.shape());
    TensorT<T> db;
    if (spec.use_bias) db = TensorT<T>({spec.conv.out_channels});
    kernels::conv2d_bwd_params(x.data(), x.extent(0), x.extent(1), x.extent(2),
                               spec.conv.in_channels, upstream.data(), upstream.extent(1),
                               upstream.extent(2), spec.conv.out_channels, spec.conv.kernel_h,
                               spec.conv.kernel_w, spec.conv.stride, g.pad_top, g.pad_left,
                               dw.data(), spec.use_bias ? db.data() : nullptr);
    out.param_grads.emplace_back("weights", std::move(dw));
    if (spec.use_bias) out.param_grads.emplace_back("bias", std::move(db));
  }
  return out;
}

template <typename T>
TensorT<T> batchnorm_forward(const LayerSpec& spec, LayerStateT<T>& state, const TensorT<T>& x,
                             Mode mode, bool want_cache) {
  layer_output_shape(spec, x.shape());
  const int c = spec.channels;
  const std::int64_t total = x.numel();
  const std::int64_t m = total / c;
  const auto& gamma = param(state, "gamma");
  const auto& beta = param(state, "beta");
  TensorT<T> y(x.shape());
  const T eps = static_cast<T>(spec.bn_eps);

  const std::int64_t rows = m;
  const int nt = kernels::effective_threads();

  const bool use_batch_stats = (mode == Mode::train) && spec.trainable;
  if (!use_batch_stats) {
    const auto& rm = state.buffers.at("running_mean");
    const auto& rv = state.buffers.at("running_var");
    std::vector<T> scale(c), shift(c);
    for (int cc = 0; cc < c; ++cc) {
      const T istd = T(1) / std::sqrt(rv[cc] + eps);
      scale[cc] = gamma[cc] * istd;
      shift[cc] = beta[cc] - rm[cc] * scale[cc];
    }
    const T* xp = x.data();
    T* yp = y.data();
    const T* sc = scale.data();
    const T* sh = shift.data();
#pragma omp parallel for num_threads(nt) schedule(static)
    for (std::int64_t r = 0; r < rows; ++r)
      for (int cc = 0; cc < c; ++cc) yp[r * c + cc] = xp[r * c + cc] * sc[cc] + sh[cc];
    if (mode == Mode::train && want_cache) state.has_cache = true; // frozen pass-through
    return y;
  }

  // batch statistics (biased variance): per-image partial sums accumulated
  // in a fixed order, so the result is identical for every thread count
  const int n_img = x.extent(0);
  const std::int64_t rows_per_img = rows / n_img;
  std::vector<double> psum(static_cast<std::size_t>(n_img) * c, 0.0);
  std::vector<double> psq(static_cast<std::size_t>(n_img) * c, 0.0);
  {
    const T* xp = x.data();
#pragma omp parallel for num_threads(nt) schedule(static)
    for (int img = 0; img < n_img; ++img) {
      double* ps = psum.data() + static_cast<std::size_t>(img) * c;
      double* pq = psq.data() + static_cast<std::size_t>(img) * c;
      const T* base = xp + static_cast<std::int64_t>(img) * rows_per_img * c;
      for (std::int64_t r = 0; r < rows_per_img; ++r)
        for (int cc = 0; cc < c; ++cc) {
          const double v = static_cast<double>(base[r * c + cc]);
          ps[cc] += v;
          pq[cc] += v * v;
        }
    }
  }
  std::vector<double> sum(c, 0.0), sqsum(c, 0.0);
  for (int img = 0; img < n_img; ++img)
    for (int cc = 0; cc < c; ++cc) {
      sum[cc] += psum[static_cast<std::size_t>(img) * c + cc];
      sqsum[cc] += psq[static_cast<std::size_t>(img) * c + cc];
    }
  std::vector<T> mean(c), istd(c), var(c);
  for (int cc = 0; cc < c; ++cc) {
    const double mu = sum[cc] / static_cast<double>(m);
    double v = sqsum[cc] / static_cast<double>(m) - mu * mu;
    if (v < 0) v = 0;
    mean[cc] = static_cast<T>(mu);
    var[cc] = static_cast<T>(v);
    istd[cc] = static_cast<T>(1.0 / std::sqrt(v + static_cast<double>(eps)));
  }

  TensorT<T> xhat(x.shape());
  {
    const T* xp = x.data();
    T* hp = xhat.data();
    T* yp = y.data();
    const T* mu = mean.data();
    const T* is = istd.data();
    const T* ga = gamma.data();
    const T* be = beta.data();
#pragma omp parallel for num_threads(nt) schedule(static)
    for (std::int64_t r = 0; r < rows; ++r)
      for (int cc = 0; cc < c; ++cc) {
        const T h = (xp[r * c + cc] - mu[cc]) * is[cc];
        hp[r * c + cc] = h;
        yp[r * c + cc] = ga[cc] * h + be[cc];
      }
  }

  auto& rm = state.buffers.at("running_mean");
  auto& rv = state.buffers.at("running_var");
  const T mom = static_cast<T>(spec.bn_momentum);
  for (int cc = 0; cc < c; ++cc) {
    rm[cc] = mom * rm[cc] + (T(1) - mom) * mean[cc];
    rv[cc] = mom * rv[cc] + (T(1) - mom) * var[cc];
  }

  if (want_cache) {
    state.cached_aux = std::move(xhat);
    state.cached_stats.assign(istd.begin(), istd.end());
    state.has_cache = true;
  }
  return y;
}

template <typename T>
Gradients<T> batchnorm_backward(const LayerSpec& spec, LayerStateT<T>& state,
                                const TensorT<T>& du) {
  const int c = spec.channels;
  const std::int64_t total = du.numel();
  const std::int64_t m = total / c;
  const auto& gamma = param(state, "gamma");
  Gradients<T> out;
  out.input_grad = TensorT<T>(du.shape());

  if (!spec.trainable) {
    // frozen: deterministic affine map through running statistics
    const auto& rv = state.buffers.at("running_var");
    std::vector<T> scale(c);
    for (int cc = 0; cc < c; ++cc)
      scale[cc] = gamma[cc] / std::sqrt(rv[cc] + static_cast<T>(spec.bn_eps));
    const std::int64_t rows0 = total / c;
    for (std::int64_t r = 0; r < rows0; ++r)
      for (int cc = 0; cc < c; ++cc)
        out.input_grad[r * c + cc] = du[r * c + cc] * scale[cc];
    return out;
  }

  const auto& xhat = state.cached_aux;
  const std::int64_t rows = total / c;
  std::vector<double> dbeta(c, 0.0), dgamma(c, 0.0);
  for (std::int64_t r = 0; r < rows; ++r)
    for (int cc = 0; cc < c; ++cc) {
      dbeta[cc] += static_cast<double>(du[r * c + cc]);
      dgamma[cc] += static_cast<double>(du[r * c + cc]) * static_cast<double>(xhat[r * c + cc]);
    }
  std::vector<double> coeff(c), db_m(c), dg_m(c);
  for (int cc = 0; cc < c; ++cc) {
    coeff[cc] = static_cast<double>(gamma[cc]) * static_cast<double>(state.cached_stats[cc]);
    db_m[cc] = dbeta[cc] / static_cast<double>(m);
    dg_m[cc] = dgamma[cc] / static_cast<double>(m);
  }
  {
    const T* dup = du.data();
    const T* hp = xhat.data();
    T* op = out.input_grad.data();
    const int nt = kernels::effective_threads();
#pragma omp parallel for num_threads(nt) schedule(static)
    for (std::int64_t r = 0; r < rows; ++r)
      for (int cc = 0; cc < c; ++cc) {
        const double term = static_cast<double>(dup[r * c + cc]) - db_m[cc] -
                            static_cast<double>(hp[r * c + cc]) * dg_m[cc];
        op[r * c + cc] = static_cast<T>(coeff[cc] * term);
      }
  }
  TensorT<T> dg({c}), db({c});
  for (int cc = 0; cc < c; ++cc) {
    dg[cc] = static_cast<T>(dgamma[cc]);
    db[cc] = static_cast<T>(dbeta[cc]);
  }
  out.param_grads.emplace_back("gamma", std::move(dg));
  out.param_grads.emplace_back("beta", std::move(db));
  return out;
}

} // namespace

template <typename T>
TensorT<T> forward(const LayerSpec& spec, LayerStateT<T>& state, const TensorT<T>& input,
                   Mode mode, Rng* rng, bool want_cache) {
  const bool train = (mode == Mode::train);
  switch (spec.kind) {
    case LayerKind::conv:
    case LayerKind::pointwise_conv:
      return conv_forward(spec, state, input, mode, want_cache);

    case LayerKind::depthwise_conv: {
      const auto out_shape = layer_output_shape(spec, input.shape());
      const auto& w = param(state, "weights");
      const auto g = conv_geometry(spec.conv, input.extent(1), input.extent(2));
      TensorT<T> y(out_shape);
      kernels::depthwise_fwd(input.data(), input.extent(0), input.extent(1), input.extent(2),
                             spec.conv.in_channels, w.data(), spec.conv.kernel_h,
                             spec.conv.kernel_w, spec.conv.stride, g.pad_top, g.pad_left,
                             out_shape[1], out_shape[2], y.data());
      if (train && want_cache) {
        state.cached_input = input;
        state.has_cache = true;
      }
      return y;
    }

    case LayerKind::batchnorm:
      return batchnorm_forward(spec, state, input, mode, want_cache);

    case LayerKind::relu: {
      TensorT<T> y(input.shape());
      const std::int64_t n = input.numel();
      const T* xp = input.data();
      T* yp = y.data();
      const int nt = kernels::effective_threads();
#pragma omp parallel for num_threads(nt) schedule(static)
      for (std::int64_t i = 0; i < n; ++i) yp[i] = xp[i] > T(0) ? xp[i] : T(0);
      if (train && want_cache) {
        state.cached_input = input;
        state.has_cache = true;
      }
      return y;
    }

    case LayerKind::relu6: {
      TensorT<T> y(input.shape());
      const std::int64_t n = input.numel();
      const T* xp = input.data();
      T* yp = y.data();
      const int nt = kernels::effective_threads();
#pragma omp parallel for num_threads(nt) schedule(static)
      for (std::int64_t i = 0; i < n; ++i) yp[i] = std::min(std::max(xp[i], T(0)), T(6));
      if (train && want_cache) {
        state.cached_input = input;
        state.has_cache = true;
      }
      return y;
    }

    case LayerKind::dense: {
      layer_output_shape(spec, input.shape());
      const auto& w = param(state, "weights");
      const auto& b = param(state, "bias");
      const int n = input.extent(0);
      TensorT<T> y({n, spec.units});
      kernels::matmul(input.data(), n, spec.in_features, w.data(), spec.units, y.data());
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < spec.units; ++j) y.at(i, j) += b[j];
      if (train && want_cache) {
        state.cached_input = input;
        state.has_cache = true;
      }
      return y;
    }

    case LayerKind::dropout: {
      if (!train) return input; // inference identity
      if (!rng) throw ConfigError("dropout: train-mode forward requires an rng");
      const T keep = T(1) - static_cast<T>(spec.drop_rate);
      TensorT<T> mask(input.shape());
      TensorT<T> y(input.shape());
      const T inv_keep = T(1) / keep;
      const std::int64_t n = input.numel();
      for (std::int64_t i = 0; i < n; ++i) {
        const T m = rng->u01() < spec.drop_rate ? T(0) : inv_keep;
        mask[i] = m;
        y[i] = input[i] * m;
      }
      if (want_cache) {
        state.cached_aux = std::move(mask);
        state.has_cache = true;
      }
      return y;
    }

    case LayerKind::maxpool:
    case LayerKind::meanpool: {
      const auto out_shape = layer_output_shape(spec, input.shape());
      TensorT<T> y(out_shape);
      const int n = input.extent(0), h = input.extent(1), w = input.extent(2),
                c = input.extent(3);
      if (spec.kind == LayerKind::maxpool) {
        std::vector<std::int32_t> argmax(static_cast<std::size_t>(y.numel()));
        kernels::pool_max_fwd(input.data(), n, h, w, c, spec.window, spec.stride, out_shape[1],
                              out_shape[2], y.data(), argmax.data());
        if (train && want_cache) {
          state.cached_argmax = std::move(argmax);
          state.cached_in_shape = input.shape();
          state.has_cache = true;
        }
      } else {
        kernels::pool_mean_fwd(input.data(), n, h, w, c, spec.window, spec.stride, out_shape[1],
                               out_shape[2], y.data());
        if (train && want_cache) {
          state.cached_in_shape = input.shape();
          state.has_cache = true;
        }
      }
      return y;
    }

    case LayerKind::flatten: {
      const auto out_shape = layer_output_shape(spec, input.shape());
      if (train && want_cache) {
        state.cached_in_shape = input.shape();
        state.has_cache = true;
      }
      return input.reshaped(out_shape);
    }

    case LayerKind::softmax: {
      layer_output_shape(spec, input.shape());
      const int n = input.extent(0), k = input.extent(1);
      TensorT<T> y(input.shape());
      for (int i = 0; i < n; ++i) {
        const T* row = input.data() + static_cast<std::int64_t>(i) * k;
        T* out = y.data() + static_cast<std::int64_t>(i) * k;
        T mx = row[0];
        for (int j = 1; j < k; ++j) mx = std::max(mx, row[j]);
        T sum = T(0);
        for (int j = 0; j < k; ++j) {
          out[j] = std::exp(row[j] - mx);
          sum += out[j];
        }
        const T inv = T(1) / sum;
        for (int j = 0; j < k; ++j) out[j] *= inv;
      }
      if (train && want_cache) {
        state.cached_aux = y;
        state.has_cache = true;
      }
      return y;
    }

    case LayerKind::residual_add: {
      if (state.skip_input.empty() || !state.skip_input.same_shape(input))
        throw ShapeError("residual_add: skip input missing or shape mismatch");
      TensorT<T> y(input.shape());
      const std::int64_t n = input.numel();
      for (std::int64_t i = 0; i < n; ++i) y[i] = input[i] + state.skip_input[i];
      if (train && want_cache) state.has_cache = true;
      return y;
    }
  }
  throw ConfigError("unknown layer kind");
}

template <typename T>
Gradients<T> backward(const LayerSpec& spec, LayerStateT<T>& state, const TensorT<T>& upstream,
                      bool want_input_grad) {
  if (!state.has_cache && spec.kind != LayerKind::residual_add)
    throw StateError(std::string(layer_kind_name(spec.kind)) +
                     ": backward without a train-mode forward cache");
  switch (spec.kind) {
    case LayerKind::conv:
    case LayerKind::pointwise_conv:
      return conv_backward(spec, state, upstream, want_input_grad);

    case LayerKind::depthwise_conv: {
      const auto& x = state.cached_input;
      const auto& w = param(state, "weights");
      const auto g = conv_geometry(spec.conv, x.extent(1), x.extent(2));
      Gradients<T> out;
      if (want_input_grad) {
        out.input_grad = TensorT<T>(x.shape());
        kernels::depthwise_bwd_input(upstream.data(), x.extent(0), upstream.extent(1),
                                     upstream.extent(2), spec.conv.in_channels, w.data(),
                                     spec.conv.kernel_h, spec.conv.kernel_w, spec.conv.stride,
                                     g.pad_top, g.pad_left, x.extent(1), x.extent(2),
                                     out.input_grad.data());
      }
      if (spec.trainable) {
        TensorT<T> dw(w.shape());
        kernels::depthwise_bwd_params(x.data(), x.extent(0), x.extent(1), x.extent(2),
                                      spec.conv.in_channels, upstream.data(), upstream.extent(1),
                                      upstream.extent(2), spec.conv.kernel_h, spec.conv.kernel_w,
                                      spec.conv.stride, g.pad_top, g.pad_left, dw.data());
        out.param_grads.emplace_back("weights", std::move(dw));
      }
      return out;
    }

    case LayerKind::batchnorm:
      return batchnorm_backward(spec, state, upstream);

    case LayerKind::relu: {
      const auto& x = state.cached_input;
      Gradients<T> out;
      out.input_grad = TensorT<T>(x.shape());
      const std::int64_t n = x.numel();
      for (std::int64_t i = 0; i < n; ++i)
        out.input_grad[i] = x[i] > T(0) ? upstream[i] : T(0); // gradient 0 at x == 0
      return out;
    }

    case LayerKind::relu6: {
      const auto& x = state.cached_input;
      Gradients<T> out;
      out.input_grad = TensorT<T>(x.shape());
      const std::int64_t n = x.numel();
      for (std::int64_t i = 0; i < n; ++i)
        out.input_grad[i] = (x[i] > T(0) && x[i] < T(6)) ? upstream[i] : T(0);
      return out;
    }

    case LayerKind::dense: {
      const auto& x = state.cached_input;
      const auto& w = param(state, "weights");
      const int n = x.extent(0);
      Gradients<T> out;
      if (want_input_grad) {
        out.input_grad = TensorT<T>(x.shape());
        kernels::matmul_nt(upstream.data(), n, spec.units, w.data(), spec.in_features,
                           out.input_grad.data());
      }
      if (spec.trainable) {
        TensorT<T> dw({spec.in_features, spec.units});
        kernels::matmul_tn(x.data(), n, spec.in_features, upstream.data(), spec.units, dw.data());
        TensorT<T> db({spec.units});
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < spec.units; ++j) db[j] += upstream.at(i, j);
        out.param_grads.emplace_back("weights", std::move(dw));
        out.param_grads.emplace_back("bias", std::move(db));
      }
      return out;
    }

    case LayerKind::dropout: {
      const auto& mask = state.cached_aux;
      Gradients<T> out;
      out.input_grad = TensorT<T>(mask.shape());
      const std::int64_t n = mask.numel();
      for (std::int64_t i = 0; i < n; ++i) out.input_grad[i] = upstream[i] * mask[i];
      return out;
    }

    case LayerKind::maxpool: {
      const auto& ish = state.cached_in_shape;
      Gradients<T> out;
      out.input_grad = TensorT<T>(ish);
      kernels::pool_max_bwd(upstream.data(), ish[0], upstream.extent(1), upstream.extent(2),
                            ish[3], state.cached_argmax.data(), ish[1], ish[2],
                            out.input_grad.data());
      return out;
    }

    case LayerKind::meanpool: {
      const auto& ish = state.cached_in_shape;
      Gradients<T> out;
      out.input_grad = TensorT<T>(ish);
      kernels::pool_mean_bwd(upstream.data(), ish[0], upstream.extent(1), upstream.extent(2),
                             ish[3], spec.window, spec.stride, ish[1], ish[2],
                             out.input_grad.data());
      return out;
    }

    case LayerKind::flatten: {
      Gradients<T> out;
      out.input_grad = upstream.reshaped(state.cached_in_shape);
      return out;
    }

    case LayerKind::softmax: {
      const auto& y = state.cached_aux;
      const int n = y.extent(0), k = y.extent(1);
      Gradients<T> out;
      out.input_grad = TensorT<T>(y.shape());
      for (int i = 0; i < n; ++i) {
        const T* yrow = y.data() + static_cast<std::int64_t>(i) * k;
        const T* urow = upstream.data() + static_cast<std::int64_t>(i) * k;
        T dot = T(0);
        for (int j = 0; j < k; ++j) dot += urow[j] * yrow[j];
        T* orow = out.input_grad.data() + static_cast<std::int64_t>(i) * k;
        for (int j = 0; j < k; ++j) orow[j] = yrow[j] * (urow[j] - dot);
      }
      return out;
    }

    case LayerKind::residual_add: {
      Gradients<T> out;
      out.input_grad = upstream;
      out.skip_grad = upstream;
      return out;
    }
  }
  throw ConfigError("unknown layer kind");
}

template void init_layer<float>(const LayerSpec&, LayerStateT<float>&, Rng&);
template void init_layer<double>(const LayerSpec&, LayerStateT<double>&, Rng&);
template TensorT<float> forward<float>(const LayerSpec&, LayerStateT<float>&,
                                       const TensorT<float>&, Mode, Rng*, bool);
template TensorT<double> forward<double>(const LayerSpec&, LayerStateT<double>&,
                                         const TensorT<double>&, Mode, Rng*, bool);
template Gradients<float> backward<float>(const LayerSpec&, LayerStateT<float>&,
                                          const TensorT<float>&, bool);
template Gradients<double> backward<double>(const LayerSpec&, LayerStateT<double>&,
                                            const TensorT<double>&, bool);

} // namespace binlite

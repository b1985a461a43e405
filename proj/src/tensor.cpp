#include "binlite/tensor.hpp"

#include <string>

#include "binlite/kernels.hpp"

namespace binlite {

ConvGeometry conv_geometry(const ConvSpec& spec, int in_h, int in_w) {
  if (spec.kernel_h < 1 || spec.kernel_w < 1 || spec.stride < 1)
    throw ConfigError("conv: kernel extents and stride must be positive");
  ConvGeometry g;
  if (spec.padding == Padding::same) {
    g.out_h = (in_h + spec.stride - 1) / spec.stride;
    g.out_w = (in_w + spec.stride - 1) / spec.stride;
    const int pad_h = std::max(0, (g.out_h - 1) * spec.stride + spec.kernel_h - in_h);
    const int pad_w = std::max(0, (g.out_w - 1) * spec.stride + spec.kernel_w - in_w);
    g.pad_top = pad_h / 2;
    g.pad_left = pad_w / 2;
  } else {
    g.out_h = (in_h - spec.kernel_h) / spec.stride + 1;
    g.out_w = (in_w - spec.kernel_w) / spec.stride + 1;
  }
  if (g.out_h < 1 || g.out_w < 1)
    throw ShapeError("conv: output extent < 1 for input " + std::to_string(in_h) + "x" +
                     std::to_string(in_w));
  return g;
}

template <typename T>
TensorT<T> matmul(const TensorT<T>& a, const TensorT<T>& b) {
  if (a.rank() != 2 || b.rank() != 2) throw ShapeError("matmul: operands must be rank-2");
  if (a.extent(1) != b.extent(0))
    throw ShapeError("matmul: inner dimensions disagree (" + std::to_string(a.extent(1)) +
                     " vs " + std::to_string(b.extent(0)) + ")");
  TensorT<T> c({a.extent(0), b.extent(1)});
  kernels::matmul(a.data(), a.extent(0), a.extent(1), b.data(), b.extent(1), c.data());
  return c;
}

template <typename T>
TensorT<T> conv2d(const TensorT<T>& input, const ConvSpec& spec, const TensorT<T>& kernels,
                  const TensorT<T>& bias) {
  if (input.rank() != 3) throw ShapeError("conv2d: input must be [h,w,c]");
  if (kernels.rank() != 4 || kernels.extent(0) != spec.kernel_h ||
      kernels.extent(1) != spec.kernel_w || kernels.extent(2) != spec.in_channels ||
      kernels.extent(3) != spec.out_channels)
    throw ShapeError("conv2d: kernel tensor does not match spec");
  if (input.extent(2) != spec.in_channels)
    throw ShapeError("conv2d: input channels do not match spec");
  if (!bias.empty() && (bias.rank() != 1 || bias.extent(0) != spec.out_channels))
    throw ShapeError("conv2d: bias must be [out_channels]");
  const auto g = conv_geometry(spec, input.extent(0), input.extent(1));
  TensorT<T> out({g.out_h, g.out_w, spec.out_channels});
  kernels::conv2d_fwd(input.data(), 1, input.extent(0), input.extent(1), spec.in_channels,
                      kernels.data(), spec.kernel_h, spec.kernel_w, spec.out_channels,
                      bias.empty() ? nullptr : bias.data(), spec.stride, g.pad_top, g.pad_left,
                      g.out_h, g.out_w, out.data());
  return out;
}

template <typename T>
TensorT<T> depthwise_conv2d(const TensorT<T>& input, const ConvSpec& spec,
                            const TensorT<T>& kernels) {
  if (input.rank() != 3) throw ShapeError("depthwise_conv2d: input must be [h,w,c]");
  if (spec.out_channels != spec.in_channels)
    throw ShapeError("depthwise_conv2d: out_channels must equal in_channels");
  if (kernels.rank() != 3 || kernels.extent(0) != spec.kernel_h ||
      kernels.extent(1) != spec.kernel_w || kernels.extent(2) != spec.in_channels)
    throw ShapeError("depthwise_conv2d: kernel tensor must be [kh,kw,c] matching spec");
  if (input.extent(2) != spec.in_channels)
    throw ShapeError("depthwise_conv2d: input channels do not match spec");
  const auto g = conv_geometry(spec, input.extent(0), input.extent(1));
  TensorT<T> out({g.out_h, g.out_w, spec.in_channels});
  kernels::depthwise_fwd(input.data(), 1, input.extent(0), input.extent(1), spec.in_channels,
                         kernels.data(), spec.kernel_h, spec.kernel_w, spec.stride, g.pad_top,
                         g.pad_left, g.out_h, g.out_w, out.data());
  return out;
}

template <typename T>
TensorT<T> pool2d(const TensorT<T>& input, int window, int stride, PoolMode mode) {
  if (input.rank() != 3) throw ShapeError("pool2d: input must be [h,w,c]");
  if (window < 1 || stride < 1) throw ConfigError("pool2d: window and stride must be positive");
  const int h = input.extent(0), w = input.extent(1), c = input.extent(2);
  if (window > h || window > w) throw ShapeError("pool2d: window exceeds spatial extent");
  const int oh = (h - window) / stride + 1;
  const int ow = (w - window) / stride + 1;
  TensorT<T> out({oh, ow, c});
  if (mode == PoolMode::max) {
    std::vector<std::int32_t> argmax(static_cast<std::size_t>(oh) * ow * c);
    kernels::pool_max_fwd(input.data(), 1, h, w, c, window, stride, oh, ow, out.data(),
                          argmax.data());
  } else {
    kernels::pool_mean_fwd(input.data(), 1, h, w, c, window, stride, oh, ow, out.data());
  }
  return out;
}

template TensorT<float> matmul<float>(const TensorT<float>&, const TensorT<float>&);
template TensorT<double> matmul<double>(const TensorT<double>&, const TensorT<double>&);
template TensorT<float> conv2d<float>(const TensorT<float>&, const ConvSpec&,
                                      const TensorT<float>&, const TensorT<float>&);
template TensorT<double> conv2d<double>(const TensorT<double>&, const ConvSpec&,
                                        const TensorT<double>&, const TensorT<double>&);
template TensorT<float> depthwise_conv2d<float>(const TensorT<float>&, const ConvSpec&,
                                                const TensorT<float>&);
template TensorT<double> depthwise_conv2d<double>(const TensorT<double>&, const ConvSpec&,
                                                  const TensorT<double>&);
template TensorT<float> pool2d<float>(const TensorT<float>&, int, int, PoolMode);
template TensorT<double> pool2d<double>(const TensorT<double>&, int, int, PoolMode);

} // namespace binlite

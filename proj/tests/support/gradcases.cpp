#include "support/gradcases.hpp"

#include <cmath>

#include "binlite/layers.hpp"
#include "support/test_util.hpp"

namespace testutil {

namespace {

using namespace binlite;

// Random tensor with every element pushed away from the listed kink points,
// so central differences at eps=1e-5 never straddle one.
DTensor kink_free(std::vector<int> shape, std::uint64_t seed, double lo, double hi,
                  const std::vector<double>& kinks, double margin = 1e-3) {
  DTensor t = random_tensor<double>(std::move(shape), seed, lo, hi);
  for (std::int64_t i = 0; i < t.numel(); ++i)
    for (double k : kinks)
      if (std::fabs(t[i] - k) < margin) t[i] = k + (t[i] >= k ? margin : -margin);
  return t;
}

struct Suite {
  double eps;
  std::vector<GradCaseResult> out;

  void run(const std::string& name, const LayerSpec& spec, const DTensor& input,
           std::uint64_t seed, const DTensor* weights = nullptr,
           const DTensor* skip = nullptr) {
    LayerStateT<double> st;
    Rng rng(seed);
    init_layer(spec, st, rng);
    if (skip) st.skip_input = *skip;
    out.push_back({name, grad_check(spec, st, input, eps, weights, seed ^ 0x9e37ULL)});
  }
};

LayerSpec conv_spec(LayerKind kind, int k, int stride, Padding pad, int ci, int co,
                    bool bias = true) {
  LayerSpec s;
  s.kind = kind;
  s.conv = {k, k, stride, pad, ci, co};
  s.use_bias = bias;
  return s;
}

} // namespace

std::vector<GradCaseResult> run_grad_suite(double epsilon) {
  Suite s{epsilon, {}};

  // conv
  s.run("conv_3x3_same", conv_spec(LayerKind::conv, 3, 1, Padding::same, 2, 4),
        random_tensor<double>({2, 6, 6, 2}, 101), 11);
  s.run("conv_1ch", conv_spec(LayerKind::conv, 3, 1, Padding::same, 1, 2),
        random_tensor<double>({1, 5, 5, 1}, 102), 12);
  s.run("conv_5x5", conv_spec(LayerKind::conv, 5, 1, Padding::same, 3, 2),
        random_tensor<double>({2, 7, 5, 3}, 103), 13);
  s.run("conv_stride2", conv_spec(LayerKind::conv, 3, 2, Padding::same, 2, 3),
        random_tensor<double>({2, 6, 6, 2}, 104), 14);
  s.run("conv_valid_nobias", conv_spec(LayerKind::conv, 3, 1, Padding::valid, 2, 2, false),
        random_tensor<double>({2, 8, 8, 2}, 105), 15);

  // pointwise_conv
  s.run("pointwise_a", conv_spec(LayerKind::pointwise_conv, 1, 1, Padding::same, 3, 6),
        random_tensor<double>({2, 4, 4, 3}, 111), 21);
  s.run("pointwise_b", conv_spec(LayerKind::pointwise_conv, 1, 1, Padding::same, 6, 2, false),
        random_tensor<double>({1, 5, 5, 6}, 112), 22);
  s.run("pointwise_c", conv_spec(LayerKind::pointwise_conv, 1, 1, Padding::same, 1, 4),
        random_tensor<double>({3, 3, 3, 1}, 113), 23);
  s.run("pointwise_d", conv_spec(LayerKind::pointwise_conv, 1, 1, Padding::same, 4, 4, false),
        random_tensor<double>({2, 6, 3, 4}, 114), 24);
  s.run("pointwise_e", conv_spec(LayerKind::pointwise_conv, 1, 2, Padding::same, 2, 3),
        random_tensor<double>({2, 6, 6, 2}, 115), 25);

  // depthwise_conv
  for (int i = 0; i < 5; ++i) {
    const int c = 1 + i;
    const int stride = i == 3 ? 2 : 1;
    s.run("depthwise_" + std::to_string(i),
          conv_spec(LayerKind::depthwise_conv, 3, stride, Padding::same, c, c, false),
          random_tensor<double>({2, 5 + i, 5, c}, 120 + static_cast<std::uint64_t>(i)),
          30 + static_cast<std::uint64_t>(i));
  }

  // batchnorm (4-d and 2-d inputs)
  for (int i = 0; i < 5; ++i) {
    LayerSpec spec;
    spec.kind = LayerKind::batchnorm;
    DTensor input;
    if (i < 3) {
      const int c = 2 + i;
      spec.channels = c;
      input = random_tensor<double>({4 + i, 3, 3, c}, 130 + static_cast<std::uint64_t>(i));
    } else {
      spec.channels = 5;
      input = random_tensor<double>({8, 5}, 130 + static_cast<std::uint64_t>(i));
    }
    s.run("batchnorm_" + std::to_string(i), spec, input, 40 + static_cast<std::uint64_t>(i));
    const DTensor w =
        random_tensor<double>(input.shape(), 330 + static_cast<std::uint64_t>(i), -1.0, 1.0);
    s.run("batchnorm_weighted_" + std::to_string(i), spec, input,
          40 + static_cast<std::uint64_t>(i), &w);
  }

  // relu / relu6 (inputs kept away from the kinks)
  for (int i = 0; i < 5; ++i) {
    LayerSpec spec;
    spec.kind = LayerKind::relu;
    const std::vector<int> shape = i % 2 ? std::vector<int>{3, 4, 5} : std::vector<int>{2, 3, 4, 2};
    s.run("relu_" + std::to_string(i), spec,
          kink_free(shape, 140 + static_cast<std::uint64_t>(i), -2, 2, {0.0}),
          50 + static_cast<std::uint64_t>(i));
    spec.kind = LayerKind::relu6;
    s.run("relu6_" + std::to_string(i), spec,
          kink_free(shape, 145 + static_cast<std::uint64_t>(i), -1, 7, {0.0, 6.0}),
          55 + static_cast<std::uint64_t>(i));
  }

  // dense
  for (int i = 0; i < 5; ++i) {
    LayerSpec spec;
    spec.kind = LayerKind::dense;
    spec.in_features = 3 + i;
    spec.units = 2 + (i * 2) % 5;
    s.run("dense_" + std::to_string(i), spec,
          random_tensor<double>({2 + i, spec.in_features}, 150 + static_cast<std::uint64_t>(i)),
          60 + static_cast<std::uint64_t>(i));
  }

  // dropout (rng fixed per evaluation by grad_check)
  for (int i = 0; i < 5; ++i) {
    LayerSpec spec;
    spec.kind = LayerKind::dropout;
    spec.drop_rate = 0.2f + 0.1f * static_cast<float>(i);
    const std::vector<int> shape = i % 2 ? std::vector<int>{4, 6} : std::vector<int>{2, 3, 2, 3};
    s.run("dropout_" + std::to_string(i), spec,
          random_tensor<double>(shape, 160 + static_cast<std::uint64_t>(i)),
          70 + static_cast<std::uint64_t>(i));
  }

  // pools
  for (int i = 0; i < 5; ++i) {
    LayerSpec spec;
    spec.kind = LayerKind::maxpool;
    spec.window = i < 3 ? 2 : 3;
    spec.stride = 1 + i % 3;
    const std::vector<int> shape = {2, 5 + i, 5, 2 + i % 2};
    s.run("maxpool_" + std::to_string(i), spec,
          random_tensor<double>(shape, 170 + static_cast<std::uint64_t>(i)),
          80 + static_cast<std::uint64_t>(i));
    spec.kind = LayerKind::meanpool;
    s.run("meanpool_" + std::to_string(i), spec,
          random_tensor<double>(shape, 175 + static_cast<std::uint64_t>(i)),
          85 + static_cast<std::uint64_t>(i));
  }

  // flatten
  for (int i = 0; i < 5; ++i) {
    LayerSpec spec;
    spec.kind = LayerKind::flatten;
    s.run("flatten_" + std::to_string(i), spec,
          random_tensor<double>({2, 2 + i, 3, 2}, 180 + static_cast<std::uint64_t>(i)),
          90 + static_cast<std::uint64_t>(i));
  }

  // softmax: sum reduction per the contract, plus weighted upstreams that
  // actually exercise the Jacobian
  for (int i = 0; i < 5; ++i) {
    LayerSpec spec;
    spec.kind = LayerKind::softmax;
    const DTensor input =
        random_tensor<double>({2 + i, 3 + i}, 190 + static_cast<std::uint64_t>(i));
    s.run("softmax_" + std::to_string(i), spec, input, 95 + static_cast<std::uint64_t>(i));
    const DTensor w =
        random_tensor<double>(input.shape(), 290 + static_cast<std::uint64_t>(i), -1.0, 1.0);
    s.run("softmax_weighted_" + std::to_string(i), spec, input,
          95 + static_cast<std::uint64_t>(i), &w);
  }

  // residual_add (skip branch held fixed)
  for (int i = 0; i < 5; ++i) {
    LayerSpec spec;
    spec.kind = LayerKind::residual_add;
    spec.skip_from = 0;
    const std::vector<int> shape = {2, 3 + i, 3, 2};
    const DTensor input = random_tensor<double>(shape, 200 + static_cast<std::uint64_t>(i));
    const DTensor skip = random_tensor<double>(shape, 205 + static_cast<std::uint64_t>(i));
    s.run("residual_" + std::to_string(i), spec, input, 99 + static_cast<std::uint64_t>(i),
          nullptr, &skip);
  }

  return s.out;
}

} // namespace testutil

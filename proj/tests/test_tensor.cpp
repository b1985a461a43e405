#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "binlite/kernels.hpp"
#include "binlite/tensor.hpp"
#include "support/oracles.hpp"
#include "support/test_util.hpp"

using namespace binlite;
using testutil::max_abs_diff;
using testutil::max_rel_diff;
using testutil::random_tensor;

TEST_CASE("fill and shape validation") {
  auto t = fill<float>({2, 3}, 0.0f);
  CHECK(t.numel() == 6);
  for (std::int64_t i = 0; i < 6; ++i) CHECK(t[i] == 0.0f);

  auto d = fill<double>({1}, 1.5);
  CHECK(d.numel() == 1);
  CHECK(d[0] == 1.5);

  CHECK_THROWS_AS(fill<float>({2, 0}, 0.0f), ShapeError);
  CHECK_THROWS_AS(fill<float>({-1}, 0.0f), ShapeError);
  CHECK_THROWS_AS(fill<float>({1, 1, 1, 1, 1}, 0.0f), ShapeError);
  CHECK_THROWS_AS(fill<float>({}, 0.0f), ShapeError);
}

TEST_CASE("matmul hand cases") {
  Tensor eye({2, 2});
  eye.at(0, 0) = 1;
  eye.at(1, 1) = 1;
  Tensor m({2, 2});
  m.at(0, 0) = 1;
  m.at(0, 1) = 2;
  m.at(1, 0) = 3;
  m.at(1, 1) = 4;
  auto r = matmul(eye, m);
  CHECK(testutil::bitwise_equal(r, m));

  Tensor a({1, 2});
  a.at(0, 0) = 1;
  a.at(0, 1) = 2;
  Tensor b({2, 1});
  b.at(0, 0) = 3;
  b.at(1, 0) = 4;
  CHECK(matmul(a, b).at(0, 0) == doctest::Approx(11.0f));

  Tensor bad({3, 2});
  CHECK_THROWS_AS(matmul(a, bad), ShapeError);
}

TEST_CASE("matmul random case matches triple-loop oracle") {
  auto a = random_tensor<float>({7, 5}, 11);
  auto b = random_tensor<float>({5, 3}, 12);
  CHECK(max_rel_diff(matmul(a, b), oracle::matmul(a, b)) < 1e-6);
}

TEST_CASE("matmul associativity at f64") {
  auto a = random_tensor<double>({5, 5}, 21);
  auto b = random_tensor<double>({5, 5}, 22);
  auto c = random_tensor<double>({5, 5}, 23);
  auto left = matmul(matmul(a, b), c);
  auto right = matmul(a, matmul(b, c));
  CHECK(max_rel_diff(left, right) < 1e-9);
}

TEST_CASE("conv2d shape arithmetic for the 224 case") {
  ConvSpec spec{3, 3, 1, Padding::same, 3, 32};
  auto input = random_tensor<float>({224, 224, 3}, 31);
  auto kernels = random_tensor<float>({3, 3, 3, 32}, 32);
  auto bias = Tensor({32});
  auto out = conv2d(input, spec, kernels, bias);
  CHECK(out.shape() == std::vector<int>{224, 224, 32});
}

TEST_CASE("conv2d all-ones valid 3x3") {
  ConvSpec spec{3, 3, 1, Padding::valid, 1, 1};
  auto input = Tensor::full({3, 3, 1}, 1.0f);
  auto kernels = Tensor::full({3, 3, 1, 1}, 1.0f);
  auto out = conv2d(input, spec, kernels, Tensor({1}));
  CHECK(out.shape() == std::vector<int>{1, 1, 1});
  CHECK(out[0] == doctest::Approx(9.0f));
}

TEST_CASE("conv2d random case matches six-loop oracle") {
  ConvSpec spec{3, 3, 1, Padding::same, 2, 16};
  auto input = random_tensor<float>({8, 8, 2}, 41);
  auto kernels = random_tensor<float>({3, 3, 2, 16}, 42);
  auto bias = random_tensor<float>({16}, 43);
  CHECK(max_rel_diff(conv2d(input, spec, kernels, bias),
                     oracle::conv2d(input, spec, kernels, bias)) < 1e-5);

  ConvSpec strided{3, 3, 2, Padding::same, 2, 5};
  auto k2 = random_tensor<float>({3, 3, 2, 5}, 44);
  auto b2 = random_tensor<float>({5}, 45);
  CHECK(max_rel_diff(conv2d(input, strided, k2, b2),
                     oracle::conv2d(input, strided, k2, b2)) < 1e-5);

  ConvSpec valid{5, 5, 1, Padding::valid, 2, 4};
  auto k3 = random_tensor<float>({5, 5, 2, 4}, 46);
  CHECK(max_rel_diff(conv2d(input, valid, k3, Tensor({4})),
                     oracle::conv2d(input, valid, k3, Tensor({4}))) < 1e-5);
}

TEST_CASE("conv2d error contracts") {
  ConvSpec spec{3, 3, 1, Padding::same, 4, 8};
  auto input = random_tensor<float>({6, 6, 2}, 51); // wrong channel count
  auto kernels = random_tensor<float>({3, 3, 4, 8}, 52);
  CHECK_THROWS_AS(conv2d(input, spec, kernels, Tensor({8})), ShapeError);

  ConvSpec too_big{9, 9, 1, Padding::valid, 2, 8};
  auto in2 = random_tensor<float>({6, 6, 2}, 53);
  auto k2 = random_tensor<float>({9, 9, 2, 8}, 54);
  CHECK_THROWS_AS(conv2d(in2, too_big, k2, Tensor({8})), ShapeError);
}

TEST_CASE("conv2d same/stride-1 preserves spatial shape for k in {1,3,5}") {
  for (int k : {1, 3, 5}) {
    ConvSpec spec{k, k, 1, Padding::same, 3, 4};
    auto input = random_tensor<float>({11, 9, 3}, 60 + k);
    auto kernels = random_tensor<float>({k, k, 3, 4}, 70 + k);
    auto out = conv2d(input, spec, kernels, Tensor({4}));
    CHECK(out.extent(0) == 11);
    CHECK(out.extent(1) == 9);
  }
}

TEST_CASE("conv2d linearity with zero bias") {
  ConvSpec spec{3, 3, 1, Padding::same, 2, 6};
  auto x = random_tensor<float>({7, 7, 2}, 81);
  auto y = random_tensor<float>({7, 7, 2}, 82);
  auto kernels = random_tensor<float>({3, 3, 2, 6}, 83);
  Tensor bias({6});
  const float a = 1.7f, b = -0.6f;

  Tensor mix({7, 7, 2});
  for (std::int64_t i = 0; i < mix.numel(); ++i) mix[i] = a * x[i] + b * y[i];
  auto lhs = conv2d(mix, spec, kernels, bias);
  auto cx = conv2d(x, spec, kernels, bias);
  auto cy = conv2d(y, spec, kernels, bias);
  Tensor rhs({7, 7, 6});
  for (std::int64_t i = 0; i < rhs.numel(); ++i) rhs[i] = a * cx[i] + b * cy[i];
  CHECK(max_rel_diff(lhs, rhs) < 1e-5);
}

TEST_CASE("depthwise identity kernel and oracle") {
  ConvSpec spec{3, 3, 1, Padding::same, 2, 2};
  auto input = random_tensor<float>({4, 4, 2}, 91);
  Tensor kernels({3, 3, 2});
  kernels.at(1, 1, 0) = 1.0f; // center tap only
  kernels.at(1, 1, 1) = 1.0f;
  auto out = depthwise_conv2d(input, spec, kernels);
  CHECK(testutil::bitwise_equal(out, input));

  ConvSpec spec3{3, 3, 1, Padding::same, 3, 3};
  auto in3 = random_tensor<float>({8, 8, 3}, 92);
  auto k3 = random_tensor<float>({3, 3, 3}, 93);
  CHECK(max_rel_diff(depthwise_conv2d(in3, spec3, k3),
                     oracle::depthwise_conv2d(in3, spec3, k3)) < 1e-6);

  Tensor wrong({3, 3, 4});
  CHECK_THROWS_AS(depthwise_conv2d(in3, spec3, wrong), ShapeError);
}

TEST_CASE("depthwise equals per-channel conv2d composition") {
  ConvSpec spec{3, 3, 1, Padding::same, 3, 3};
  auto input = random_tensor<float>({8, 8, 3}, 101);
  auto kernels = random_tensor<float>({3, 3, 3}, 102);
  auto dw = depthwise_conv2d(input, spec, kernels);

  // per-channel conv2d with block-diagonal kernels
  Tensor block({3, 3, 3, 3});
  for (int ky = 0; ky < 3; ++ky)
    for (int kx = 0; kx < 3; ++kx)
      for (int c = 0; c < 3; ++c) block.at(ky, kx, c, c) = kernels.at(ky, kx, c);
  auto composed = conv2d(input, ConvSpec{3, 3, 1, Padding::same, 3, 3}, block, Tensor({3}));
  CHECK(max_rel_diff(dw, composed) < 1e-6);
}

TEST_CASE("pool2d hand cases and oracle") {
  Tensor t({2, 2, 1});
  t.at(0, 0, 0) = 1;
  t.at(0, 1, 0) = 2;
  t.at(1, 0, 0) = 3;
  t.at(1, 1, 0) = 4;
  CHECK(pool2d(t, 2, 2, PoolMode::max).at(0, 0, 0) == doctest::Approx(4.0f));
  CHECK(pool2d(t, 2, 2, PoolMode::mean).at(0, 0, 0) == doctest::Approx(2.5f));

  auto r = random_tensor<float>({6, 6, 4}, 111);
  CHECK(max_abs_diff(pool2d(r, 2, 2, PoolMode::max), oracle::pool2d(r, 2, 2, PoolMode::max)) ==
        0.0);
  CHECK(max_rel_diff(pool2d(r, 2, 2, PoolMode::mean), oracle::pool2d(r, 2, 2, PoolMode::mean)) <
        1e-6);
  CHECK(max_rel_diff(pool2d(r, 3, 2, PoolMode::mean), oracle::pool2d(r, 3, 2, PoolMode::mean)) <
        1e-6);

  CHECK_THROWS_AS(pool2d(r, 7, 1, PoolMode::max), ShapeError);
}

TEST_CASE("mean pool of a constant tensor is that constant exactly") {
  auto t = Tensor::full({8, 8, 3}, 0.73f);
  auto p = pool2d(t, 2, 2, PoolMode::mean);
  for (std::int64_t i = 0; i < p.numel(); ++i) CHECK(p[i] == 0.73f);
}

TEST_CASE("OpenMP kernels match serial twins bitwise across thread counts") {
  const int m = 37, k = 29, n = 23;
  auto a = random_tensor<float>({m, k}, 121);
  auto b = random_tensor<float>({k, n}, 122);
  Tensor ref({m, n});
  kernels::serial::matmul(a.data(), m, k, b.data(), n, ref.data());
  for (int t : {1, 2, 4}) {
    kernels::ThreadGuard guard(t);
    Tensor out({m, n});
    kernels::matmul(a.data(), m, k, b.data(), n, out.data());
    CHECK(testutil::bitwise_equal(ref, out));
  }

  auto x = random_tensor<float>({2, 13, 11, 5}, 123);
  auto ker = random_tensor<float>({3, 3, 5, 7}, 124);
  auto bias = random_tensor<float>({7}, 125);
  Tensor yref({2, 13, 11, 7});
  kernels::serial::conv2d_fwd(x.data(), 2, 13, 11, 5, ker.data(), 3, 3, 7, bias.data(), 1, 1, 1,
                              13, 11, yref.data());
  for (int t : {2, 4}) {
    kernels::ThreadGuard guard(t);
    Tensor y({2, 13, 11, 7});
    kernels::conv2d_fwd(x.data(), 2, 13, 11, 5, ker.data(), 3, 3, 7, bias.data(), 1, 1, 1, 13,
                        11, y.data());
    CHECK(testutil::bitwise_equal(yref, y));
  }
}

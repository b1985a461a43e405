#include <algorithm>
#include <cmath>

#include "binlite/error.hpp"
#include "binlite/layers.hpp"

namespace binlite {

namespace {

// Scalar reduction of a train-mode forward pass with a fixed rng seed, so
// stochastic layers (dropout) see the identical mask on every evaluation.
double reduced_forward(const LayerSpec& spec, const LayerStateT<double>& base,
                       const DTensor& input, const DTensor& weights, std::uint64_t seed) {
  LayerStateT<double> st = base; // running stats must not drift across evaluations
  Rng rng(seed);
  DTensor y = forward(spec, st, input, Mode::train, &rng);
  double s = 0.0;
  for (std::int64_t i = 0; i < y.numel(); ++i) s += weights[i] * y[i];
  return s;
}

// Relative error with an absolute floor at the finite-difference noise
// level: central differences carry rounding noise ~ |f|*eps_f64/epsilon plus
// O(epsilon^2) truncation, so comparisons where both sides sit below that
// carry no information.
double rel_err(double a, double b, double atol) {
  const double denom = std::max(std::fabs(a), std::fabs(b));
  if (denom < atol) return 0.0;
  return std::fabs(a - b) / denom;
}

} // namespace

double grad_check(const LayerSpec& spec, LayerStateT<double>& state, const DTensor& input,
                  double epsilon, const DTensor* upstream_weights, std::uint64_t rng_seed) {
  if (epsilon < 1e-7 || epsilon > 1e-3)
    throw ConfigError("grad_check: epsilon must lie in [1e-7, 1e-3]");

  LayerStateT<double> base = state;

  // analytic gradients
  LayerStateT<double> st = base;
  Rng rng(rng_seed);
  DTensor y = forward(spec, st, input, Mode::train, &rng);
  DTensor weights =
      upstream_weights ? *upstream_weights : TensorT<double>::full(y.shape(), 1.0);
  if (!weights.same_shape(y)) throw ShapeError("grad_check: upstream weight shape mismatch");
  Gradients<double> an = backward(spec, st, weights);

  const double f0 = reduced_forward(spec, base, input, weights, rng_seed);
  const double atol =
      10.0 * (2.2e-16 * std::max(1.0, std::fabs(f0)) / epsilon + epsilon * epsilon);

  double worst = 0.0;

  auto fd_probe = [&](DTensor& target, std::int64_t idx, double analytic) {
    const double orig = target[idx];
    target[idx] = orig + epsilon;
    const double fp = reduced_forward(spec, base, input, weights, rng_seed);
    target[idx] = orig - epsilon;
    const double fm = reduced_forward(spec, base, input, weights, rng_seed);
    target[idx] = orig;
    const double fd = (fp - fm) / (2.0 * epsilon);
    worst = std::max(worst, rel_err(analytic, fd, atol));
  };

  // parameters (trainable layers only; frozen layers report no param grads)
  for (const auto& [name, grad] : an.param_grads) {
    auto& p = base.params.at(name);
    for (std::int64_t i = 0; i < p.numel(); ++i) fd_probe(p, i, grad[i]);
  }

  // input elements
  DTensor x = input;
  for (std::int64_t i = 0; i < x.numel(); ++i) {
    const double orig = x[i];
    x[i] = orig + epsilon;
    const double fp = reduced_forward(spec, base, x, weights, rng_seed);
    x[i] = orig - epsilon;
    const double fm = reduced_forward(spec, base, x, weights, rng_seed);
    x[i] = orig;
    const double fd = (fp - fm) / (2.0 * epsilon);
    worst = std::max(worst, rel_err(an.input_grad[i], fd, atol));
  }

  return worst;
}

} // namespace binlite

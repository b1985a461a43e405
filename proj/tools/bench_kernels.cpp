// Compares the serial reference kernels against the OpenMP versions:
// throughput per thread count plus a bitwise-equality check of the outputs.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include <omp.h>

#include "binlite/kernels.hpp"
#include "binlite/rng.hpp"

using namespace binlite;

namespace {

double now_ms() {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

std::vector<float> random_vec(std::size_t n, std::uint64_t seed) {
  std::vector<float> v(n);
  Rng rng(seed);
  for (auto& x : v) x = static_cast<float>(rng.uniform(-1.0, 1.0));
  return v;
}

bool bitwise_equal(const std::vector<float>& a, const std::vector<float>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * 4) == 0;
}

struct Case {
  std::string name;
  double gflop = 0;
  // runs the kernel into out; serial flag picks the reference path
  void (*run)(bool serial, std::vector<float>& out);
};

// matmul 512x512x512
std::vector<float> mm_a, mm_b;
void run_matmul(bool serial, std::vector<float>& out) {
  out.assign(512 * 512, 0.0f);
  if (serial)
    kernels::serial::matmul(mm_a.data(), 512, 512, mm_b.data(), 512, out.data());
  else
    kernels::matmul(mm_a.data(), 512, 512, mm_b.data(), 512, out.data());
}

// conv 112x112x32 -> 32, 3x3
std::vector<float> cv_x, cv_k, cv_bias;
void run_conv(bool serial, std::vector<float>& out) {
  out.assign(static_cast<std::size_t>(112) * 112 * 32, 0.0f);
  if (serial)
    kernels::serial::conv2d_fwd(cv_x.data(), 1, 112, 112, 32, cv_k.data(), 3, 3, 32,
                                cv_bias.data(), 1, 1, 1, 112, 112, out.data());
  else
    kernels::conv2d_fwd(cv_x.data(), 1, 112, 112, 32, cv_k.data(), 3, 3, 32, cv_bias.data(), 1,
                        1, 1, 112, 112, out.data());
}

// depthwise 112x112x64, 3x3
std::vector<float> dw_x, dw_k;
void run_depthwise(bool serial, std::vector<float>& out) {
  out.assign(static_cast<std::size_t>(112) * 112 * 64, 0.0f);
  if (serial)
    kernels::serial::depthwise_fwd(dw_x.data(), 1, 112, 112, 64, dw_k.data(), 3, 3, 1, 1, 1, 112,
                                   112, out.data());
  else
    kernels::depthwise_fwd(dw_x.data(), 1, 112, 112, 64, dw_k.data(), 3, 3, 1, 1, 1, 112, 112,
                           out.data());
}

} // namespace

int main(int argc, char** argv) {
  const bool quick = argc > 1 && std::string(argv[1]) == "--quick";
  const int reps = quick ? 2 : 10;

  mm_a = random_vec(512 * 512, 1);
  mm_b = random_vec(512 * 512, 2);
  cv_x = random_vec(static_cast<std::size_t>(112) * 112 * 32, 3);
  cv_k = random_vec(3 * 3 * 32 * 32, 4);
  cv_bias = random_vec(32, 5);
  dw_x = random_vec(static_cast<std::size_t>(112) * 112 * 64, 6);
  dw_k = random_vec(3 * 3 * 64, 7);

  const Case cases[] = {
      {"matmul 512^3", 2.0 * 512 * 512 * 512 * 1e-9, run_matmul},
      {"conv 112x112x32->32 3x3", 2.0 * 112 * 112 * 9 * 32 * 32 * 1e-9, run_conv},
      {"depthwise 112x112x64 3x3", 2.0 * 112 * 112 * 9 * 64 * 1e-9, run_depthwise},
  };

  std::vector<int> thread_counts = {1, 2};
  const int hw = omp_get_max_threads();
  if (hw > 2) thread_counts.push_back(hw);

  std::printf("%-26s %-10s %-12s %-12s %-8s\n", "kernel", "threads", "ms/iter", "GFLOP/s",
              "match");
  bool all_match = true;
  for (const auto& c : cases) {
    std::vector<float> ref;
    c.run(true, ref);
    double t0 = now_ms();
    for (int r = 0; r < reps; ++r) c.run(true, ref);
    const double serial_ms = (now_ms() - t0) / reps;
    std::printf("%-26s %-10s %-12.3f %-12.2f %-8s\n", c.name.c_str(), "serial", serial_ms,
                c.gflop / (serial_ms * 1e-3), "-");

    for (int t : thread_counts) {
      kernels::ThreadGuard guard(t);
      std::vector<float> out;
      c.run(false, out);
      const bool match = bitwise_equal(ref, out);
      all_match = all_match && match;
      t0 = now_ms();
      for (int r = 0; r < reps; ++r) c.run(false, out);
      const double ms = (now_ms() - t0) / reps;
      std::printf("%-26s %-10d %-12.3f %-12.2f %-8s\n", c.name.c_str(), t, ms,
                  c.gflop / (ms * 1e-3), match ? "bitwise" : "DIFFERS");
    }
  }
  if (!all_match) {
    std::printf("FAIL: an OpenMP kernel diverged from the serial reference\n");
    return 1;
  }
  std::printf("all OpenMP kernels match the serial reference bitwise\n");
  return 0;
}

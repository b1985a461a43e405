#include "binlite/infer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "binlite/error.hpp"
#include "binlite/kernels.hpp"
#include "binlite/rng.hpp"

namespace binlite {

namespace {

bool has_quantizable_weights(LayerKind k) {
  return k == LayerKind::conv || k == LayerKind::pointwise_conv ||
         k == LayerKind::depthwise_conv || k == LayerKind::dense;
}

double now_ms() {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

} // namespace

ModelGraph quantize(const ModelGraph& g, Dtype mode) {
  if (mode != Dtype::f16 && mode != Dtype::i8)
    throw ConfigError("quantize: mode must be f16 or i8");
  if (g.quantized()) throw ConfigError("quantize: graph is already quantized");
  ModelGraph out = g;
  for (auto& u : out.layers) {
    if (!has_quantizable_weights(u.spec.kind)) continue;
    auto it = u.state.params.find("weights");
    if (it == u.state.params.end() || it->second.empty()) continue;
    u.qparams["weights"] = quantize_tensor(it->second, mode);
    it->second = Tensor{}; // payload is authoritative; cache refilled on demand
  }
  out.meta.quantized = dtype_name(mode);
  return out;
}

void dequantize_once(ModelGraph& g) {
  for (auto& u : g.layers) {
    for (auto& [name, qt] : u.qparams) {
      auto& slot = u.state.params[name];
      if (slot.empty()) slot = dequantize_tensor(qt);
    }
  }
}

InferResult infer(ModelGraph& g, const Tensor& batch, int threads) {
  if (threads < 1) throw ConfigError("infer: thread count must be >= 1");
  dequantize_once(g);
  kernels::ThreadGuard guard(threads);
  InferResult out;
  const double t0 = now_ms();
  out.probs = run_forward(g, batch, Mode::infer, nullptr, static_cast<int>(g.layers.size()));
  out.latency_ms = now_ms() - t0;
  return out;
}

BenchReport bench(ModelGraph& g, const std::vector<int>& thread_counts, int iters, int warmup,
                  std::int64_t model_file_bytes) {
  if (iters < 10) throw ConfigError("bench: iters must be >= 10");
  if (warmup < 1) throw ConfigError("bench: warmup must be >= 1");
  if (thread_counts.empty()) throw ConfigError("bench: need at least one thread count");
  for (std::size_t i = 0; i < thread_counts.size(); ++i) {
    if (thread_counts[i] < 1) throw ConfigError("bench: thread counts must be >= 1");
    if (i > 0 && thread_counts[i] <= thread_counts[i - 1])
      throw ConfigError("bench: thread counts must be strictly increasing");
  }

  dequantize_once(g);
  Tensor input({1, g.input_shape[0], g.input_shape[1], g.input_shape[2]});
  Rng rng(0xbe7cULL);
  for (std::int64_t i = 0; i < input.numel(); ++i)
    input[i] = static_cast<float>(rng.u01());

  BenchReport report;
  report.model_file_bytes = model_file_bytes;
  report.dtype = g.meta.quantized == "none" ? "f32" : g.meta.quantized;

  for (int t : thread_counts) {
    for (int i = 0; i < warmup; ++i) infer(g, input, t);
    std::vector<double> lat(static_cast<std::size_t>(iters));
    for (int i = 0; i < iters; ++i) lat[static_cast<std::size_t>(i)] = infer(g, input, t).latency_ms;
    std::sort(lat.begin(), lat.end());
    double sum = 0.0;
    for (double v : lat) sum += v;
    auto pct = [&](double q) {
      const auto idx = static_cast<std::size_t>(
          std::llround(q * static_cast<double>(lat.size() - 1)));
      return lat[idx];
    };
    report.records.push_back({t, sum / static_cast<double>(iters), pct(0.5), pct(0.95), iters});
  }
  return report;
}

std::string bench_table(const BenchReport& r) {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof line, "%-8s %-12s %-12s %-12s %-8s\n", "threads", "mean_ms",
                "p50_ms", "p95_ms", "iters");
  out += line;
  for (const auto& rec : r.records) {
    std::snprintf(line, sizeof line, "%-8d %-12.3f %-12.3f %-12.3f %-8d\n", rec.threads,
                  rec.mean_ms, rec.p50_ms, rec.p95_ms, rec.iters);
    out += line;
  }
  std::snprintf(line, sizeof line, "model: dtype=%s file_bytes=%lld\n", r.dtype.c_str(),
                static_cast<long long>(r.model_file_bytes));
  out += line;
  return out;
}

std::string bench_json(const BenchReport& r) {
  nlohmann::json j;
  j["dtype"] = r.dtype;
  j["model_file_bytes"] = r.model_file_bytes;
  j["records"] = nlohmann::json::array();
  for (const auto& rec : r.records) {
    j["records"].push_back({{"threads", rec.threads},
                            {"mean_ms", rec.mean_ms},
                            {"p50_ms", rec.p50_ms},
                            {"p95_ms", rec.p95_ms},
                            {"iters", rec.iters}});
  }
  return j.dump(2);
}

} // namespace binlite

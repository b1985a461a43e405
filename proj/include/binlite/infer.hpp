#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "binlite/model.hpp"

namespace binlite {

// Post-training quantization of the weight tensors (conv kernels, dense
// weights). Biases and batchnorm parameters/buffers stay f32; activations
// stay f32 everywhere. Throws ConfigError on an already-quantized graph.
ModelGraph quantize(const ModelGraph& g, Dtype mode);

// Materialize every f32 dequantize cache. Idempotent; must be called (or
// triggered via infer) before concurrent use of a quantized graph.
void dequantize_once(ModelGraph& g);

struct InferResult {
  Tensor probs;
  double latency_ms = 0.0;
};

// Forward pass with an explicit worker count. Work is partitioned over
// output rows/images with a fixed per-element accumulation order, so the
// numerical result is identical for every thread count. Latency covers the
// forward pass only.
InferResult infer(ModelGraph& g, const Tensor& batch, int threads);

struct BenchRecord {
  int threads = 0;
  double mean_ms = 0.0;
  double p50_ms = 0.0;
  double p95_ms = 0.0;
  int iters = 0;
};

struct BenchReport {
  std::vector<BenchRecord> records;
  std::int64_t model_file_bytes = 0;
  std::string dtype; // f32 | f16 | i8
};

// Latency sweep over thread counts: warmup runs discarded, then `iters`
// timed single-image inferences per count. Reports the curve; asserts
// nothing about its shape.
BenchReport bench(ModelGraph& g, const std::vector<int>& thread_counts, int iters, int warmup,
                  std::int64_t model_file_bytes = 0);

std::string bench_table(const BenchReport& r);
std::string bench_json(const BenchReport& r);

} // namespace binlite

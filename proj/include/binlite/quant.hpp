#pragma once

#include <cstdint>
#include <vector>

#include "binlite/tensor.hpp"

namespace binlite {

enum class Dtype : std::uint8_t { f32 = 0, f16 = 1, i8 = 2 };

const char* dtype_name(Dtype d);

// IEEE 754 binary16 conversion, round-to-nearest-even.
std::uint16_t f32_to_f16(float v);
float f16_to_f32(std::uint16_t h);

// Quantized parameter payload. i8 uses a per-tensor symmetric scheme:
// scale = max|w|/127, values in [-127,127] (-128 unused). The f32 working
// copy ("dequantize-once cache") lives in the owning layer state and is
// materialized from this payload.
struct QuantTensor {
  Dtype dtype = Dtype::f16;
  std::vector<int> shape;
  std::vector<std::uint16_t> half; // f16 payload
  std::vector<std::int8_t> q;      // i8 payload
  float scale = 1.0f;              // i8 only

  std::int64_t numel() const {
    std::int64_t n = 1;
    for (int e : shape) n *= e;
    return shape.empty() ? 0 : n;
  }
};

// Encode an f32 tensor. i8 mode: scale = max|w|/127 (1.0 for an all-zero
// tensor), q = round(w/scale) clamped to [-127,127].
QuantTensor quantize_tensor(const Tensor& t, Dtype mode);

// Decode back to f32 (f16 widening / scale * payload).
Tensor dequantize_tensor(const QuantTensor& qt);

} // namespace binlite

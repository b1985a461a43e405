#include "binlite/quant.hpp"

#include <cmath>
#include <cstring>

#include "binlite/error.hpp"

namespace binlite {

const char* dtype_name(Dtype d) {
  switch (d) {
    case Dtype::f32: return "f32";
    case Dtype::f16: return "f16";
    case Dtype::i8: return "i8";
  }
  return "?";
}

std::uint16_t f32_to_f16(float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  const std::uint32_t sign = (bits >> 16) & 0x8000u;
  const std::int32_t exp = static_cast<std::int32_t>((bits >> 23) & 0xff) - 127 + 15;
  std::uint32_t mant = bits & 0x7fffffu;

  if (exp >= 0x1f) {
    // overflow to inf; NaN keeps a payload bit
    if (((bits >> 23) & 0xff) == 0xff && mant)
      return static_cast<std::uint16_t>(sign | 0x7e00u);
    return static_cast<std::uint16_t>(sign | 0x7c00u);
  }
  if (exp <= 0) {
    if (exp < -10) return static_cast<std::uint16_t>(sign); // underflow to zero
    // subnormal: shift with round-to-nearest-even
    mant |= 0x800000u;
    const int shift = 14 - exp;
    const std::uint32_t q = mant >> shift;
    const std::uint32_t rem = mant & ((1u << shift) - 1);
    const std::uint32_t half = 1u << (shift - 1);
    std::uint32_t out = q;
    if (rem > half || (rem == half && (q & 1))) ++out;
    return static_cast<std::uint16_t>(sign | out);
  }
  // normal: keep 10 mantissa bits, round-to-nearest-even
  std::uint32_t out = (static_cast<std::uint32_t>(exp) << 10) | (mant >> 13);
  const std::uint32_t rem = mant & 0x1fffu;
  if (rem > 0x1000u || (rem == 0x1000u && (out & 1))) ++out; // may carry into exponent: correct
  return static_cast<std::uint16_t>(sign | out);
}

float f16_to_f32(std::uint16_t h) {
  const std::uint32_t sign = static_cast<std::uint32_t>(h & 0x8000u) << 16;
  const std::uint32_t exp = (h >> 10) & 0x1f;
  const std::uint32_t mant = h & 0x3ffu;
  std::uint32_t bits;
  if (exp == 0) {
    if (mant == 0) {
      bits = sign;
    } else {
      // subnormal half -> normal float
      int e = -1;
      std::uint32_t m = mant;
      do {
        ++e;
        m <<= 1;
      } while ((m & 0x400u) == 0);
      bits = sign | (static_cast<std::uint32_t>(127 - 15 - e) << 23) | ((m & 0x3ffu) << 13);
    }
  } else if (exp == 0x1f) {
    bits = sign | 0x7f800000u | (mant << 13);
  } else {
    bits = sign | ((exp - 15 + 127) << 23) | (mant << 13);
  }
  float out;
  std::memcpy(&out, &bits, 4);
  return out;
}

QuantTensor quantize_tensor(const Tensor& t, Dtype mode) {
  QuantTensor qt;
  qt.dtype = mode;
  qt.shape = t.shape();
  const std::int64_t n = t.numel();
  if (mode == Dtype::f16) {
    qt.half.resize(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) qt.half[static_cast<std::size_t>(i)] = f32_to_f16(t[i]);
  } else if (mode == Dtype::i8) {
    float amax = 0.0f;
    for (std::int64_t i = 0; i < n; ++i) amax = std::max(amax, std::fabs(t[i]));
    qt.scale = amax > 0.0f ? amax / 127.0f : 1.0f;
    qt.q.resize(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) {
      const long r = std::lroundf(t[i] / qt.scale);
      qt.q[static_cast<std::size_t>(i)] =
          static_cast<std::int8_t>(std::min(127L, std::max(-127L, r)));
    }
  } else {
    throw ConfigError("quantize_tensor: mode must be f16 or i8");
  }
  return qt;
}

Tensor dequantize_tensor(const QuantTensor& qt) {
  Tensor t(qt.shape);
  const std::int64_t n = t.numel();
  if (qt.dtype == Dtype::f16) {
    for (std::int64_t i = 0; i < n; ++i) t[i] = f16_to_f32(qt.half[static_cast<std::size_t>(i)]);
  } else if (qt.dtype == Dtype::i8) {
    for (std::int64_t i = 0; i < n; ++i)
      t[i] = qt.scale * static_cast<float>(qt.q[static_cast<std::size_t>(i)]);
  } else {
    throw ConfigError("dequantize_tensor: payload must be f16 or i8");
  }
  return t;
}

} // namespace binlite

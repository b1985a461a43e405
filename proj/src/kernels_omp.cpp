#include "binlite/kernels.hpp"

#include <cstdint>
#include <vector>

#include <omp.h>

// OpenMP kernels. Work is partitioned over independent output elements
// (rows, images, kernel taps); every element keeps a fixed serial
// accumulation order, so results are bitwise identical for any thread
// count and match the plain serial twins.
//
// Inner loops are register-blocked over the dense (contiguous) axis with a
// compile-time block width, which keeps the accumulators out of memory
// without changing any per-element summation order.

namespace binlite::kernels {

namespace {

thread_local int g_threads = 0;

int resolve_threads() {
  const int t = g_threads;
  return t > 0 ? t : omp_get_max_threads();
}

template <typename T, int BLK>
inline void axpy_block(const T av, const T* brow, T* acc) {
  for (int b = 0; b < BLK; ++b) acc[b] += av * brow[b];
}

// c_row[jb .. jb+BLK) = sum_k a_k * B[k, jb .. jb+BLK) with acc in registers
template <typename T, int BLK, typename AF>
inline void matmul_row_block(AF a_at, int k, const T* bbase, std::int64_t bstride, T* out) {
  T acc[BLK] = {};
  for (int kk = 0; kk < k; ++kk) axpy_block<T, BLK>(a_at(kk), bbase + kk * bstride, acc);
  for (int b = 0; b < BLK; ++b) out[b] = acc[b];
}

template <typename T, typename AF>
inline void matmul_row(AF a_at, int k, const T* b, int n, T* crow) {
  int j = 0;
  for (; j + 16 <= n; j += 16) matmul_row_block<T, 16>(a_at, k, b + j, n, crow + j);
  if (j + 8 <= n) {
    matmul_row_block<T, 8>(a_at, k, b + j, n, crow + j);
    j += 8;
  }
  if (j + 4 <= n) {
    matmul_row_block<T, 4>(a_at, k, b + j, n, crow + j);
    j += 4;
  }
  for (; j < n; ++j) {
    T acc = T(0);
    for (int kk = 0; kk < k; ++kk) acc += a_at(kk) * b[static_cast<std::int64_t>(kk) * n + j];
    crow[j] = acc;
  }
}

} // namespace

int compute_threads() { return g_threads; }
void set_compute_threads(int n) { g_threads = n < 0 ? 0 : n; }
int effective_threads() { return resolve_threads(); }

template <typename T>
void matmul(const T* a, int m, int k, const T* b, int n, T* c) {
  const int nt = resolve_threads();
#pragma omp parallel for num_threads(nt) schedule(static) if (nt > 1 && m > 1)
  for (int i = 0; i < m; ++i) {
    const T* arow = a + static_cast<std::int64_t>(i) * k;
    matmul_row([arow](int kk) { return arow[kk]; }, k, b, n,
               c + static_cast<std::int64_t>(i) * n);
  }
}

template <typename T>
void matmul_tn(const T* a, int k, int m, const T* b, int n, T* c) {
  const int nt = resolve_threads();
#pragma omp parallel for num_threads(nt) schedule(static) if (nt > 1 && m > 1)
  for (int i = 0; i < m; ++i) {
    matmul_row([a, m, i](int kk) { return a[static_cast<std::int64_t>(kk) * m + i]; }, k, b, n,
               c + static_cast<std::int64_t>(i) * n);
  }
}

template <typename T>
void matmul_nt(const T* a, int m, int k, const T* b, int n, T* c) {
  const int nt = resolve_threads();
#pragma omp parallel for num_threads(nt) schedule(static) if (nt > 1 && m > 1)
  for (int i = 0; i < m; ++i) {
    const T* arow = a + static_cast<std::int64_t>(i) * k;
    T* crow = c + static_cast<std::int64_t>(i) * n;
    for (int j = 0; j < n; ++j) {
      const T* brow = b + static_cast<std::int64_t>(j) * k;
      T acc = T(0);
      for (int kk = 0; kk < k; ++kk) acc += arow[kk] * brow[kk];
      crow[j] = acc;
    }
  }
}

namespace {

// One output pixel of a conv, channels [cbase, cbase+BLK): accumulators stay
// in registers across the (ky,kx,ci) tap scan.
template <typename T, int BLK>
inline void conv_pixel_block(const T* xi, const T* ker, int kh, int kw, int ci, int co, int h,
                             int w, int oy, int ox, int stride, int pad_top, int pad_left,
                             const T* bias, int cbase, T* out) {
  T acc[BLK];
  for (int b = 0; b < BLK; ++b) acc[b] = bias ? bias[cbase + b] : T(0);
  for (int ky = 0; ky < kh; ++ky) {
    const int iy = oy * stride - pad_top + ky;
    if (iy < 0 || iy >= h) continue;
    for (int kx = 0; kx < kw; ++kx) {
      const int ix = ox * stride - pad_left + kx;
      if (ix < 0 || ix >= w) continue;
      const T* xpix = xi + (static_cast<std::int64_t>(iy) * w + ix) * ci;
      const T* krow = ker + (static_cast<std::int64_t>(ky) * kw + kx) * ci * co + cbase;
      for (int cc = 0; cc < ci; ++cc)
        axpy_block<T, BLK>(xpix[cc], krow + static_cast<std::int64_t>(cc) * co, acc);
    }
  }
  for (int b = 0; b < BLK; ++b) out[cbase + b] = acc[b];
}

template <typename T>
inline void conv_pixel(const T* xi, const T* ker, int kh, int kw, int ci, int co, int h, int w,
                       int oy, int ox, int stride, int pad_top, int pad_left, const T* bias,
                       T* out) {
  int cb = 0;
  for (; cb + 16 <= co; cb += 16)
    conv_pixel_block<T, 16>(xi, ker, kh, kw, ci, co, h, w, oy, ox, stride, pad_top, pad_left,
                            bias, cb, out);
  if (cb + 8 <= co) {
    conv_pixel_block<T, 8>(xi, ker, kh, kw, ci, co, h, w, oy, ox, stride, pad_top, pad_left,
                           bias, cb, out);
    cb += 8;
  }
  if (cb + 4 <= co) {
    conv_pixel_block<T, 4>(xi, ker, kh, kw, ci, co, h, w, oy, ox, stride, pad_top, pad_left,
                           bias, cb, out);
    cb += 4;
  }
  for (; cb < co; ++cb)
    conv_pixel_block<T, 1>(xi, ker, kh, kw, ci, co, h, w, oy, ox, stride, pad_top, pad_left,
                           bias, cb, out);
}

} // namespace

template <typename T>
void conv2d_fwd(const T* x, int n, int h, int w, int ci, const T* ker, int kh, int kw, int co,
                const T* bias, int stride, int pad_top, int pad_left, int oh, int ow, T* y) {
  const int nt = resolve_threads();
#pragma omp parallel for num_threads(nt) schedule(static) collapse(2) \
    if (nt > 1 && n * oh > 1)
  for (int img = 0; img < n; ++img) {
    for (int oy = 0; oy < oh; ++oy) {
      const T* xi = x + static_cast<std::int64_t>(img) * h * w * ci;
      T* yrow = y + (static_cast<std::int64_t>(img) * oh + oy) * ow * co;
      for (int ox = 0; ox < ow; ++ox)
        conv_pixel(xi, ker, kh, kw, ci, co, h, w, oy, ox, stride, pad_top, pad_left, bias,
                   yrow + static_cast<std::int64_t>(ox) * co);
    }
  }
}

namespace {

// dx pixel over [cbase, cbase+BLK) against the [kh,kw,co,ci] transposed kernel
template <typename T, int BLK>
inline void convbwd_pixel_block(const T* dyi, const T* kt, int kh, int kw, int co, int ci,
                                int oh, int ow, int iy, int ix, int stride, int pad_top,
                                int pad_left, int cbase, T* acc_out) {
  T acc[BLK] = {};
  for (int ky = 0; ky < kh; ++ky) {
    const int ty = iy + pad_top - ky;
    if (ty < 0 || ty % stride != 0) continue;
    const int oy = ty / stride;
    if (oy >= oh) continue;
    for (int kx = 0; kx < kw; ++kx) {
      const int tx = ix + pad_left - kx;
      if (tx < 0 || tx % stride != 0) continue;
      const int ox = tx / stride;
      if (ox >= ow) continue;
      const T* dyp = dyi + (static_cast<std::int64_t>(oy) * ow + ox) * co;
      const T* krow = kt + (static_cast<std::int64_t>(ky) * kw + kx) * co * ci + cbase;
      for (int c = 0; c < co; ++c)
        axpy_block<T, BLK>(dyp[c], krow + static_cast<std::int64_t>(c) * ci, acc);
    }
  }
  for (int b = 0; b < BLK; ++b) acc_out[cbase + b] = acc[b];
}

} // namespace

template <typename T>
void conv2d_bwd_input(const T* dy, int n, int oh, int ow, int co, const T* ker, int kh, int kw,
                      int ci, int stride, int pad_top, int pad_left, int h, int w, T* dx) {
  // transposed kernel [kh,kw,co,ci] so the blocked axis is contiguous
  std::vector<T> kt(static_cast<std::size_t>(kh) * kw * co * ci);
  for (int ky = 0; ky < kh; ++ky)
    for (int kx = 0; kx < kw; ++kx)
      for (int cc = 0; cc < ci; ++cc)
        for (int c = 0; c < co; ++c)
          kt[((static_cast<std::int64_t>(ky) * kw + kx) * co + c) * ci + cc] =
              ker[((static_cast<std::int64_t>(ky) * kw + kx) * ci + cc) * co + c];
  const T* ktp = kt.data();

  const int nt = resolve_threads();
#pragma omp parallel for num_threads(nt) schedule(static) collapse(2) if (nt > 1 && n * h > 1)
  for (int img = 0; img < n; ++img) {
    for (int iy = 0; iy < h; ++iy) {
      const T* dyi = dy + static_cast<std::int64_t>(img) * oh * ow * co;
      T* dxrow = dx + (static_cast<std::int64_t>(img) * h + iy) * w * ci;
      for (int ix = 0; ix < w; ++ix) {
        T* acc = dxrow + static_cast<std::int64_t>(ix) * ci;
        int cb = 0;
        for (; cb + 16 <= ci; cb += 16)
          convbwd_pixel_block<T, 16>(dyi, ktp, kh, kw, co, ci, oh, ow, iy, ix, stride, pad_top,
                                     pad_left, cb, acc);
        if (cb + 8 <= ci) {
          convbwd_pixel_block<T, 8>(dyi, ktp, kh, kw, co, ci, oh, ow, iy, ix, stride, pad_top,
                                    pad_left, cb, acc);
          cb += 8;
        }
        if (cb + 4 <= ci) {
          convbwd_pixel_block<T, 4>(dyi, ktp, kh, kw, co, ci, oh, ow, iy, ix, stride, pad_top,
                                    pad_left, cb, acc);
          cb += 4;
        }
        for (; cb < ci; ++cb)
          convbwd_pixel_block<T, 1>(dyi, ktp, kh, kw, co, ci, oh, ow, iy, ix, stride, pad_top,
                                    pad_left, cb, acc);
      }
    }
  }
}

namespace {

// dker row for one tap, channels [cbase, cbase+BLK): accumulators persist
// across the whole (img,oy,ox) scan.
template <typename T, int BLK>
inline void convdw_tap_block(const T* x, const T* dy, int n, int h, int w, int ci, int oh,
                             int ow, int co, int ky, int kx, int cc, int stride, int pad_top,
                             int pad_left, int cbase, T* drow) {
  T acc[BLK] = {};
  for (int img = 0; img < n; ++img) {
    const T* xi = x + static_cast<std::int64_t>(img) * h * w * ci;
    const T* dyi = dy + static_cast<std::int64_t>(img) * oh * ow * co;
    for (int oy = 0; oy < oh; ++oy) {
      const int iy = oy * stride - pad_top + ky;
      if (iy < 0 || iy >= h) continue;
      for (int ox = 0; ox < ow; ++ox) {
        const int ix = ox * stride - pad_left + kx;
        if (ix < 0 || ix >= w) continue;
        const T xv = xi[(static_cast<std::int64_t>(iy) * w + ix) * ci + cc];
        const T* dyp = dyi + (static_cast<std::int64_t>(oy) * ow + ox) * co + cbase;
        axpy_block<T, BLK>(xv, dyp, acc);
      }
    }
  }
  for (int b = 0; b < BLK; ++b) drow[cbase + b] = acc[b];
}

} // namespace

template <typename T>
void conv2d_bwd_params(const T* x, int n, int h, int w, int ci, const T* dy, int oh, int ow,
                       int co, int kh, int kw, int stride, int pad_top, int pad_left, T* dker,
                       T* dbias) {
  const int taps = kh * kw * ci;
  const int nt = resolve_threads();
#pragma omp parallel for num_threads(nt) schedule(static) if (nt > 1 && taps > 1)
  for (int tap = 0; tap < taps; ++tap) {
    const int ky = tap / (kw * ci);
    const int kx = (tap / ci) % kw;
    const int cc = tap % ci;
    T* drow = dker + static_cast<std::int64_t>(tap) * co;
    int cb = 0;
    for (; cb + 16 <= co; cb += 16)
      convdw_tap_block<T, 16>(x, dy, n, h, w, ci, oh, ow, co, ky, kx, cc, stride, pad_top,
                              pad_left, cb, drow);
    if (cb + 8 <= co) {
      convdw_tap_block<T, 8>(x, dy, n, h, w, ci, oh, ow, co, ky, kx, cc, stride, pad_top,
                             pad_left, cb, drow);
      cb += 8;
    }
    if (cb + 4 <= co) {
      convdw_tap_block<T, 4>(x, dy, n, h, w, ci, oh, ow, co, ky, kx, cc, stride, pad_top,
                             pad_left, cb, drow);
      cb += 4;
    }
    for (; cb < co; ++cb)
      convdw_tap_block<T, 1>(x, dy, n, h, w, ci, oh, ow, co, ky, kx, cc, stride, pad_top,
                             pad_left, cb, drow);
  }
  if (dbias) {
    for (int c = 0; c < co; ++c) dbias[c] = T(0);
    for (int img = 0; img < n; ++img) {
      const T* dyi = dy + static_cast<std::int64_t>(img) * oh * ow * co;
      for (std::int64_t p = 0; p < static_cast<std::int64_t>(oh) * ow; ++p)
        for (int c = 0; c < co; ++c) dbias[c] += dyi[p * co + c];
    }
  }
}

namespace {

template <typename T, int BLK>
inline void depthwise_pixel_block(const T* xi, const T* ker, int kh, int kw, int c, int h,
                                  int w, int oy, int ox, int stride, int pad_top, int pad_left,
                                  int cbase, T* out) {
  T acc[BLK] = {};
  for (int ky = 0; ky < kh; ++ky) {
    const int iy = oy * stride - pad_top + ky;
    if (iy < 0 || iy >= h) continue;
    for (int kx = 0; kx < kw; ++kx) {
      const int ix = ox * stride - pad_left + kx;
      if (ix < 0 || ix >= w) continue;
      const T* xpix = xi + (static_cast<std::int64_t>(iy) * w + ix) * c + cbase;
      const T* krow = ker + (static_cast<std::int64_t>(ky) * kw + kx) * c + cbase;
      for (int b = 0; b < BLK; ++b) acc[b] += xpix[b] * krow[b];
    }
  }
  for (int b = 0; b < BLK; ++b) out[cbase + b] = acc[b];
}

template <typename T, int BLK>
inline void depthwise_bwd_pixel_block(const T* dyi, const T* ker, int kh, int kw, int c, int oh,
                                      int ow, int iy, int ix, int stride, int pad_top,
                                      int pad_left, int cbase, T* acc_out) {
  T acc[BLK] = {};
  for (int ky = 0; ky < kh; ++ky) {
    const int ty = iy + pad_top - ky;
    if (ty < 0 || ty % stride != 0) continue;
    const int oy = ty / stride;
    if (oy >= oh) continue;
    for (int kx = 0; kx < kw; ++kx) {
      const int tx = ix + pad_left - kx;
      if (tx < 0 || tx % stride != 0) continue;
      const int ox = tx / stride;
      if (ox >= ow) continue;
      const T* dyp = dyi + (static_cast<std::int64_t>(oy) * ow + ox) * c + cbase;
      const T* krow = ker + (static_cast<std::int64_t>(ky) * kw + kx) * c + cbase;
      for (int b = 0; b < BLK; ++b) acc[b] += dyp[b] * krow[b];
    }
  }
  for (int b = 0; b < BLK; ++b) acc_out[cbase + b] = acc[b];
}

template <typename F>
inline void over_channel_blocks(int c, F f) {
  int cb = 0;
  for (; cb + 16 <= c; cb += 16) f(cb, std::integral_constant<int, 16>{});
  if (cb + 8 <= c) {
    f(cb, std::integral_constant<int, 8>{});
    cb += 8;
  }
  if (cb + 4 <= c) {
    f(cb, std::integral_constant<int, 4>{});
    cb += 4;
  }
  for (; cb < c; ++cb) f(cb, std::integral_constant<int, 1>{});
}

} // namespace

template <typename T>
void depthwise_fwd(const T* x, int n, int h, int w, int c, const T* ker, int kh, int kw,
                   int stride, int pad_top, int pad_left, int oh, int ow, T* y) {
  const int nt = resolve_threads();
#pragma omp parallel for num_threads(nt) schedule(static) collapse(2) if (nt > 1 && n * oh > 1)
  for (int img = 0; img < n; ++img) {
    for (int oy = 0; oy < oh; ++oy) {
      const T* xi = x + static_cast<std::int64_t>(img) * h * w * c;
      T* yrow = y + (static_cast<std::int64_t>(img) * oh + oy) * ow * c;
      for (int ox = 0; ox < ow; ++ox) {
        T* out = yrow + static_cast<std::int64_t>(ox) * c;
        over_channel_blocks(c, [&](int cb, auto blk) {
          depthwise_pixel_block<T, decltype(blk)::value>(xi, ker, kh, kw, c, h, w, oy, ox,
                                                         stride, pad_top, pad_left, cb, out);
        });
      }
    }
  }
}

template <typename T>
void depthwise_bwd_input(const T* dy, int n, int oh, int ow, int c, const T* ker, int kh, int kw,
                         int stride, int pad_top, int pad_left, int h, int w, T* dx) {
  const int nt = resolve_threads();
#pragma omp parallel for num_threads(nt) schedule(static) collapse(2) if (nt > 1 && n * h > 1)
  for (int img = 0; img < n; ++img) {
    for (int iy = 0; iy < h; ++iy) {
      const T* dyi = dy + static_cast<std::int64_t>(img) * oh * ow * c;
      T* dxrow = dx + (static_cast<std::int64_t>(img) * h + iy) * w * c;
      for (int ix = 0; ix < w; ++ix) {
        T* acc = dxrow + static_cast<std::int64_t>(ix) * c;
        over_channel_blocks(c, [&](int cb, auto blk) {
          depthwise_bwd_pixel_block<T, decltype(blk)::value>(dyi, ker, kh, kw, c, oh, ow, iy, ix,
                                                             stride, pad_top, pad_left, cb, acc);
        });
      }
    }
  }
}

namespace {

template <typename T, int BLK>
inline void depthwise_tap_block(const T* x, const T* dy, int n, int h, int w, int c, int oh,
                                int ow, int ky, int kx, int stride, int pad_top, int pad_left,
                                int cbase, T* drow) {
  T acc[BLK] = {};
  for (int img = 0; img < n; ++img) {
    const T* xi = x + static_cast<std::int64_t>(img) * h * w * c;
    const T* dyi = dy + static_cast<std::int64_t>(img) * oh * ow * c;
    for (int oy = 0; oy < oh; ++oy) {
      const int iy = oy * stride - pad_top + ky;
      if (iy < 0 || iy >= h) continue;
      for (int ox = 0; ox < ow; ++ox) {
        const int ix = ox * stride - pad_left + kx;
        if (ix < 0 || ix >= w) continue;
        const T* xpix = xi + (static_cast<std::int64_t>(iy) * w + ix) * c + cbase;
        const T* dyp = dyi + (static_cast<std::int64_t>(oy) * ow + ox) * c + cbase;
        for (int b = 0; b < BLK; ++b) acc[b] += xpix[b] * dyp[b];
      }
    }
  }
  for (int b = 0; b < BLK; ++b) drow[cbase + b] = acc[b];
}

} // namespace

template <typename T>
void depthwise_bwd_params(const T* x, int n, int h, int w, int c, const T* dy, int oh, int ow,
                          int kh, int kw, int stride, int pad_top, int pad_left, T* dker) {
  const int taps = kh * kw;
  const int nt = resolve_threads();
#pragma omp parallel for num_threads(nt) schedule(static) if (nt > 1 && taps > 1)
  for (int tap = 0; tap < taps; ++tap) {
    const int ky = tap / kw;
    const int kx = tap % kw;
    T* drow = dker + static_cast<std::int64_t>(tap) * c;
    over_channel_blocks(c, [&](int cb, auto blk) {
      depthwise_tap_block<T, decltype(blk)::value>(x, dy, n, h, w, c, oh, ow, ky, kx, stride,
                                                   pad_top, pad_left, cb, drow);
    });
  }
}

template <typename T>
void pool_max_fwd(const T* x, int n, int h, int w, int c, int window, int stride, int oh, int ow,
                  T* y, std::int32_t* argmax) {
  const int nt = resolve_threads();
  if (nt == 1 || n == 1) {
    serial::pool_max_fwd(x, n, h, w, c, window, stride, oh, ow, y, argmax);
    return;
  }
#pragma omp parallel for num_threads(nt) schedule(static)
  for (int img = 0; img < n; ++img) {
    serial::pool_max_fwd(x + static_cast<std::int64_t>(img) * h * w * c, 1, h, w, c, window,
                         stride, oh, ow, y + static_cast<std::int64_t>(img) * oh * ow * c,
                         argmax + static_cast<std::int64_t>(img) * oh * ow * c);
  }
}

template <typename T>
void pool_max_bwd(const T* dy, int n, int oh, int ow, int c, const std::int32_t* argmax, int h,
                  int w, T* dx) {
  const int nt = resolve_threads();
  if (nt == 1 || n == 1) {
    serial::pool_max_bwd(dy, n, oh, ow, c, argmax, h, w, dx);
    return;
  }
#pragma omp parallel for num_threads(nt) schedule(static)
  for (int img = 0; img < n; ++img) {
    serial::pool_max_bwd(dy + static_cast<std::int64_t>(img) * oh * ow * c, 1, oh, ow, c,
                         argmax + static_cast<std::int64_t>(img) * oh * ow * c, h, w,
                         dx + static_cast<std::int64_t>(img) * h * w * c);
  }
}

template <typename T>
void pool_mean_fwd(const T* x, int n, int h, int w, int c, int window, int stride, int oh, int ow,
                   T* y) {
  const int nt = resolve_threads();
  if (nt == 1 || n == 1) {
    serial::pool_mean_fwd(x, n, h, w, c, window, stride, oh, ow, y);
    return;
  }
#pragma omp parallel for num_threads(nt) schedule(static)
  for (int img = 0; img < n; ++img) {
    serial::pool_mean_fwd(x + static_cast<std::int64_t>(img) * h * w * c, 1, h, w, c, window,
                          stride, oh, ow, y + static_cast<std::int64_t>(img) * oh * ow * c);
  }
}

template <typename T>
void pool_mean_bwd(const T* dy, int n, int oh, int ow, int c, int window, int stride, int h, int w,
                   T* dx) {
  const int nt = resolve_threads();
  if (nt == 1 || n == 1) {
    serial::pool_mean_bwd(dy, n, oh, ow, c, window, stride, h, w, dx);
    return;
  }
#pragma omp parallel for num_threads(nt) schedule(static)
  for (int img = 0; img < n; ++img) {
    serial::pool_mean_bwd(dy + static_cast<std::int64_t>(img) * oh * ow * c, 1, oh, ow, c, window,
                          stride, h, w, dx + static_cast<std::int64_t>(img) * h * w * c);
  }
}

#define BINLITE_INSTANTIATE_OMP(T)                                                                \
  template void matmul<T>(const T*, int, int, const T*, int, T*);                                 \
  template void matmul_tn<T>(const T*, int, int, const T*, int, T*);                              \
  template void matmul_nt<T>(const T*, int, int, const T*, int, T*);                              \
  template void conv2d_fwd<T>(const T*, int, int, int, int, const T*, int, int, int, const T*,   \
                              int, int, int, int, int, T*);                                       \
  template void conv2d_bwd_input<T>(const T*, int, int, int, int, const T*, int, int, int, int,  \
                                    int, int, int, int, T*);                                      \
  template void conv2d_bwd_params<T>(const T*, int, int, int, int, const T*, int, int, int, int, \
                                     int, int, int, int, T*, T*);                                 \
  template void depthwise_fwd<T>(const T*, int, int, int, int, const T*, int, int, int, int,     \
                                 int, int, int, T*);                                              \
  template void depthwise_bwd_input<T>(const T*, int, int, int, int, const T*, int, int, int,    \
                                       int, int, int, int, T*);                                   \
  template void depthwise_bwd_params<T>(const T*, int, int, int, int, const T*, int, int, int,   \
                                        int, int, int, int, T*);                                  \
  template void pool_max_fwd<T>(const T*, int, int, int, int, int, int, int, int, T*,            \
                                std::int32_t*);                                                   \
  template void pool_max_bwd<T>(const T*, int, int, int, int, const std::int32_t*, int, int,     \
                                T*);                                                              \
  template void pool_mean_fwd<T>(const T*, int, int, int, int, int, int, int, int, T*);          \
  template void pool_mean_bwd<T>(const T*, int, int, int, int, int, int, int, int, T*);

BINLITE_INSTANTIATE_OMP(float)
BINLITE_INSTANTIATE_OMP(double)

#undef BINLITE_INSTANTIATE_OMP

} // namespace binlite::kernels

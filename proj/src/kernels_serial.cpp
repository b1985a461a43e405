#include "binlite/kernels.hpp"

#include <cstdint>
#include <vector>

// Plain single-threaded kernels. These keep the exact summation order the
// parallel versions use (per output element: ascending k, (ky,kx,ci),
// (ky,kx,co), ...), so they double as a drop-in reference when benchmarking
// or debugging the OpenMP path.

namespace binlite::kernels::serial {

template <typename T>
void matmul(const T* a, int m, int k, const T* b, int n, T* c) {
  for (int i = 0; i < m; ++i) {
    T* crow = c + static_cast<std::int64_t>(i) * n;
    for (int j = 0; j < n; ++j) crow[j] = T(0);
    const T* arow = a + static_cast<std::int64_t>(i) * k;
    for (int kk = 0; kk < k; ++kk) {
      const T av = arow[kk];
      const T* brow = b + static_cast<std::int64_t>(kk) * n;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

template <typename T>
void matmul_tn(const T* a, int k, int m, const T* b, int n, T* c) {
  for (int i = 0; i < m; ++i) {
    T* crow = c + static_cast<std::int64_t>(i) * n;
    for (int j = 0; j < n; ++j) crow[j] = T(0);
    for (int kk = 0; kk < k; ++kk) {
      const T av = a[static_cast<std::int64_t>(kk) * m + i];
      const T* brow = b + static_cast<std::int64_t>(kk) * n;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

template <typename T>
void matmul_nt(const T* a, int m, int k, const T* b, int n, T* c) {
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

template <typename T>
void conv2d_fwd(const T* x, int n, int h, int w, int ci, const T* ker, int kh, int kw, int co,
                const T* bias, int stride, int pad_top, int pad_left, int oh, int ow, T* y) {
  for (int img = 0; img < n; ++img) {
    const T* xi = x + static_cast<std::int64_t>(img) * h * w * ci;
    T* yi = y + static_cast<std::int64_t>(img) * oh * ow * co;
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        T* out = yi + (static_cast<std::int64_t>(oy) * ow + ox) * co;
        for (int c = 0; c < co; ++c) out[c] = bias ? bias[c] : T(0);
        for (int ky = 0; ky < kh; ++ky) {
          const int iy = oy * stride - pad_top + ky;
          if (iy < 0 || iy >= h) continue;
          for (int kx = 0; kx < kw; ++kx) {
            const int ix = ox * stride - pad_left + kx;
            if (ix < 0 || ix >= w) continue;
            const T* xpix = xi + (static_cast<std::int64_t>(iy) * w + ix) * ci;
            const T* krow = ker + (static_cast<std::int64_t>(ky) * kw + kx) * ci * co;
            for (int cc = 0; cc < ci; ++cc) {
              const T xv = xpix[cc];
              const T* kcc = krow + static_cast<std::int64_t>(cc) * co;
              for (int c = 0; c < co; ++c) out[c] += xv * kcc[c];
            }
          }
        }
      }
    }
  }
}

template <typename T>
void conv2d_bwd_input(const T* dy, int n, int oh, int ow, int co, const T* ker, int kh, int kw,
                      int ci, int stride, int pad_top, int pad_left, int h, int w, T* dx) {
  // transposed kernel [kh,kw,co,ci] so the inner loop is contiguous
  std::vector<T> kt(static_cast<std::size_t>(kh) * kw * co * ci);
  for (int ky = 0; ky < kh; ++ky)
    for (int kx = 0; kx < kw; ++kx)
      for (int cc = 0; cc < ci; ++cc)
        for (int c = 0; c < co; ++c)
          kt[((static_cast<std::int64_t>(ky) * kw + kx) * co + c) * ci + cc] =
              ker[((static_cast<std::int64_t>(ky) * kw + kx) * ci + cc) * co + c];

  for (int img = 0; img < n; ++img) {
    const T* dyi = dy + static_cast<std::int64_t>(img) * oh * ow * co;
    T* dxi = dx + static_cast<std::int64_t>(img) * h * w * ci;
    for (int iy = 0; iy < h; ++iy) {
      for (int ix = 0; ix < w; ++ix) {
        T* acc = dxi + (static_cast<std::int64_t>(iy) * w + ix) * ci;
        for (int cc = 0; cc < ci; ++cc) acc[cc] = T(0);
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
            const T* krow = kt.data() + (static_cast<std::int64_t>(ky) * kw + kx) * co * ci;
            for (int c = 0; c < co; ++c) {
              const T dv = dyp[c];
              const T* kcc = krow + static_cast<std::int64_t>(c) * ci;
              for (int cc = 0; cc < ci; ++cc) acc[cc] += dv * kcc[cc];
            }
          }
        }
      }
    }
  }
}

template <typename T>
void conv2d_bwd_params(const T* x, int n, int h, int w, int ci, const T* dy, int oh, int ow,
                       int co, int kh, int kw, int stride, int pad_top, int pad_left, T* dker,
                       T* dbias) {
  for (int ky = 0; ky < kh; ++ky) {
    for (int kx = 0; kx < kw; ++kx) {
      for (int cc = 0; cc < ci; ++cc) {
        T* drow = dker + ((static_cast<std::int64_t>(ky) * kw + kx) * ci + cc) * co;
        for (int c = 0; c < co; ++c) drow[c] = T(0);
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
              const T* dyp = dyi + (static_cast<std::int64_t>(oy) * ow + ox) * co;
              for (int c = 0; c < co; ++c) drow[c] += xv * dyp[c];
            }
          }
        }
      }
    }
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

template <typename T>
void depthwise_fwd(const T* x, int n, int h, int w, int c, const T* ker, int kh, int kw,
                   int stride, int pad_top, int pad_left, int oh, int ow, T* y) {
  for (int img = 0; img < n; ++img) {
    const T* xi = x + static_cast<std::int64_t>(img) * h * w * c;
    T* yi = y + static_cast<std::int64_t>(img) * oh * ow * c;
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        T* out = yi + (static_cast<std::int64_t>(oy) * ow + ox) * c;
        for (int cc = 0; cc < c; ++cc) out[cc] = T(0);
        for (int ky = 0; ky < kh; ++ky) {
          const int iy = oy * stride - pad_top + ky;
          if (iy < 0 || iy >= h) continue;
          for (int kx = 0; kx < kw; ++kx) {
            const int ix = ox * stride - pad_left + kx;
            if (ix < 0 || ix >= w) continue;
            const T* xpix = xi + (static_cast<std::int64_t>(iy) * w + ix) * c;
            const T* krow = ker + (static_cast<std::int64_t>(ky) * kw + kx) * c;
            for (int cc = 0; cc < c; ++cc) out[cc] += xpix[cc] * krow[cc];
          }
        }
      }
    }
  }
}

template <typename T>
void depthwise_bwd_input(const T* dy, int n, int oh, int ow, int c, const T* ker, int kh, int kw,
                         int stride, int pad_top, int pad_left, int h, int w, T* dx) {
  for (int img = 0; img < n; ++img) {
    const T* dyi = dy + static_cast<std::int64_t>(img) * oh * ow * c;
    T* dxi = dx + static_cast<std::int64_t>(img) * h * w * c;
    for (int iy = 0; iy < h; ++iy) {
      for (int ix = 0; ix < w; ++ix) {
        T* acc = dxi + (static_cast<std::int64_t>(iy) * w + ix) * c;
        for (int cc = 0; cc < c; ++cc) acc[cc] = T(0);
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
            const T* dyp = dyi + (static_cast<std::int64_t>(oy) * ow + ox) * c;
            const T* krow = ker + (static_cast<std::int64_t>(ky) * kw + kx) * c;
            for (int cc = 0; cc < c; ++cc) acc[cc] += dyp[cc] * krow[cc];
          }
        }
      }
    }
  }
}

template <typename T>
void depthwise_bwd_params(const T* x, int n, int h, int w, int c, const T* dy, int oh, int ow,
                          int kh, int kw, int stride, int pad_top, int pad_left, T* dker) {
  for (int ky = 0; ky < kh; ++ky) {
    for (int kx = 0; kx < kw; ++kx) {
      T* drow = dker + (static_cast<std::int64_t>(ky) * kw + kx) * c;
      for (int cc = 0; cc < c; ++cc) drow[cc] = T(0);
      for (int img = 0; img < n; ++img) {
        const T* xi = x + static_cast<std::int64_t>(img) * h * w * c;
        const T* dyi = dy + static_cast<std::int64_t>(img) * oh * ow * c;
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * stride - pad_top + ky;
          if (iy < 0 || iy >= h) continue;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * stride - pad_left + kx;
            if (ix < 0 || ix >= w) continue;
            const T* xpix = xi + (static_cast<std::int64_t>(iy) * w + ix) * c;
            const T* dyp = dyi + (static_cast<std::int64_t>(oy) * ow + ox) * c;
            for (int cc = 0; cc < c; ++cc) drow[cc] += xpix[cc] * dyp[cc];
          }
        }
      }
    }
  }
}

template <typename T>
void pool_max_fwd(const T* x, int n, int h, int w, int c, int window, int stride, int oh, int ow,
                  T* y, std::int32_t* argmax) {
  for (int img = 0; img < n; ++img) {
    const T* xi = x + static_cast<std::int64_t>(img) * h * w * c;
    T* yi = y + static_cast<std::int64_t>(img) * oh * ow * c;
    std::int32_t* ai = argmax + static_cast<std::int64_t>(img) * oh * ow * c;
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        for (int cc = 0; cc < c; ++cc) {
          T best = xi[(static_cast<std::int64_t>(oy) * stride * w + ox * stride) * c + cc];
          std::int32_t besti =
              static_cast<std::int32_t>((oy * stride * w + ox * stride) * c + cc);
          for (int ky = 0; ky < window; ++ky) {
            for (int kx = 0; kx < window; ++kx) {
              const int iy = oy * stride + ky;
              const int ix = ox * stride + kx;
              const T v = xi[(static_cast<std::int64_t>(iy) * w + ix) * c + cc];
              if (v > best) {
                best = v;
                besti = static_cast<std::int32_t>((iy * w + ix) * c + cc);
              }
            }
          }
          yi[(static_cast<std::int64_t>(oy) * ow + ox) * c + cc] = best;
          ai[(static_cast<std::int64_t>(oy) * ow + ox) * c + cc] = besti;
        }
      }
    }
  }
}

template <typename T>
void pool_max_bwd(const T* dy, int n, int oh, int ow, int c, const std::int32_t* argmax, int h,
                  int w, T* dx) {
  const std::int64_t in_sz = static_cast<std::int64_t>(h) * w * c;
  const std::int64_t out_sz = static_cast<std::int64_t>(oh) * ow * c;
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(n) * in_sz; ++i) dx[i] = T(0);
  for (int img = 0; img < n; ++img) {
    const T* dyi = dy + img * out_sz;
    const std::int32_t* ai = argmax + img * out_sz;
    T* dxi = dx + img * in_sz;
    for (std::int64_t i = 0; i < out_sz; ++i) dxi[ai[i]] += dyi[i];
  }
}

template <typename T>
void pool_mean_fwd(const T* x, int n, int h, int w, int c, int window, int stride, int oh, int ow,
                   T* y) {
  const T inv = T(1) / static_cast<T>(window * window);
  for (int img = 0; img < n; ++img) {
    const T* xi = x + static_cast<std::int64_t>(img) * h * w * c;
    T* yi = y + static_cast<std::int64_t>(img) * oh * ow * c;
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        T* out = yi + (static_cast<std::int64_t>(oy) * ow + ox) * c;
        for (int cc = 0; cc < c; ++cc) out[cc] = T(0);
        for (int ky = 0; ky < window; ++ky) {
          for (int kx = 0; kx < window; ++kx) {
            const T* xpix =
                xi + (static_cast<std::int64_t>(oy * stride + ky) * w + ox * stride + kx) * c;
            for (int cc = 0; cc < c; ++cc) out[cc] += xpix[cc];
          }
        }
        for (int cc = 0; cc < c; ++cc) out[cc] *= inv;
      }
    }
  }
}

template <typename T>
void pool_mean_bwd(const T* dy, int n, int oh, int ow, int c, int window, int stride, int h, int w,
                   T* dx) {
  const T inv = T(1) / static_cast<T>(window * window);
  for (int img = 0; img < n; ++img) {
    const T* dyi = dy + static_cast<std::int64_t>(img) * oh * ow * c;
    T* dxi = dx + static_cast<std::int64_t>(img) * h * w * c;
    for (int iy = 0; iy < h; ++iy) {
      for (int ix = 0; ix < w; ++ix) {
        T* acc = dxi + (static_cast<std::int64_t>(iy) * w + ix) * c;
        for (int cc = 0; cc < c; ++cc) acc[cc] = T(0);
        for (int ky = 0; ky < window; ++ky) {
          const int ty = iy - ky;
          if (ty < 0 || ty % stride != 0) continue;
          const int oy = ty / stride;
          if (oy >= oh) continue;
          for (int kx = 0; kx < window; ++kx) {
            const int tx = ix - kx;
            if (tx < 0 || tx % stride != 0) continue;
            const int ox = tx / stride;
            if (ox >= ow) continue;
            const T* dyp = dyi + (static_cast<std::int64_t>(oy) * ow + ox) * c;
            for (int cc = 0; cc < c; ++cc) acc[cc] += dyp[cc] * inv;
          }
        }
      }
    }
  }
}

#define BINLITE_INSTANTIATE_SERIAL(T)                                                             \
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

BINLITE_INSTANTIATE_SERIAL(float)
BINLITE_INSTANTIATE_SERIAL(double)

#undef BINLITE_INSTANTIATE_SERIAL

} // namespace binlite::kernels::serial

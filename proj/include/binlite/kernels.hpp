#pragma once

#include <cstdint>

namespace binlite::kernels {

// Thread count used by the parallel kernels on the calling thread.
// 0 means "OpenMP default". The setting is thread-local so concurrent
// inference calls from distinct threads do not interfere.
int compute_threads();
void set_compute_threads(int n);
// The setting resolved against the OpenMP default (always >= 1).
int effective_threads();

class ThreadGuard {
public:
  explicit ThreadGuard(int n) : prev_(compute_threads()) { set_compute_threads(n); }
  ~ThreadGuard() { set_compute_threads(prev_); }
  ThreadGuard(const ThreadGuard&) = delete;
  ThreadGuard& operator=(const ThreadGuard&) = delete;

private:
  int prev_;
};

// All kernels are pure element-parallel loops: every output element is
// accumulated serially in a fixed order, so results are bitwise identical
// for any thread count. The serial namespace holds plain single-threaded
// twins with the same summation order, kept for testing and benchmarks.

// c[m,n] = a[m,k] * b[k,n]
template <typename T>
void matmul(const T* a, int m, int k, const T* b, int n, T* c);
// c[m,n] = a^T * b with a stored [k,m]
template <typename T>
void matmul_tn(const T* a, int k, int m, const T* b, int n, T* c);
// c[m,n] = a * b^T with b stored [n,k]
template <typename T>
void matmul_nt(const T* a, int m, int k, const T* b, int n, T* c);

// x [n,h,w,ci], kernels [kh,kw,ci,co], bias [co] or nullptr, y [n,oh,ow,co]
template <typename T>
void conv2d_fwd(const T* x, int n, int h, int w, int ci, const T* ker, int kh, int kw, int co,
                const T* bias, int stride, int pad_top, int pad_left, int oh, int ow, T* y);
// dx [n,h,w,ci] written in full (gather form)
template <typename T>
void conv2d_bwd_input(const T* dy, int n, int oh, int ow, int co, const T* ker, int kh, int kw,
                      int ci, int stride, int pad_top, int pad_left, int h, int w, T* dx);
// dker [kh,kw,ci,co] and dbias [co] (dbias may be nullptr) accumulated over the batch
template <typename T>
void conv2d_bwd_params(const T* x, int n, int h, int w, int ci, const T* dy, int oh, int ow,
                       int co, int kh, int kw, int stride, int pad_top, int pad_left, T* dker,
                       T* dbias);

// x [n,h,w,c], kernels [kh,kw,c], y [n,oh,ow,c]
template <typename T>
void depthwise_fwd(const T* x, int n, int h, int w, int c, const T* ker, int kh, int kw,
                   int stride, int pad_top, int pad_left, int oh, int ow, T* y);
template <typename T>
void depthwise_bwd_input(const T* dy, int n, int oh, int ow, int c, const T* ker, int kh, int kw,
                         int stride, int pad_top, int pad_left, int h, int w, T* dx);
template <typename T>
void depthwise_bwd_params(const T* x, int n, int h, int w, int c, const T* dy, int oh, int ow,
                          int kh, int kw, int stride, int pad_top, int pad_left, T* dker);

// Pools over [n,h,w,c], no padding. argmax stores the flat per-image input
// index of the winning element for each output element.
template <typename T>
void pool_max_fwd(const T* x, int n, int h, int w, int c, int window, int stride, int oh, int ow,
                  T* y, std::int32_t* argmax);
template <typename T>
void pool_max_bwd(const T* dy, int n, int oh, int ow, int c, const std::int32_t* argmax, int h,
                  int w, T* dx);
template <typename T>
void pool_mean_fwd(const T* x, int n, int h, int w, int c, int window, int stride, int oh, int ow,
                   T* y);
template <typename T>
void pool_mean_bwd(const T* dy, int n, int oh, int ow, int c, int window, int stride, int h, int w,
                   T* dx);

namespace serial {

template <typename T>
void matmul(const T* a, int m, int k, const T* b, int n, T* c);
template <typename T>
void matmul_tn(const T* a, int k, int m, const T* b, int n, T* c);
template <typename T>
void matmul_nt(const T* a, int m, int k, const T* b, int n, T* c);
template <typename T>
void conv2d_fwd(const T* x, int n, int h, int w, int ci, const T* ker, int kh, int kw, int co,
                const T* bias, int stride, int pad_top, int pad_left, int oh, int ow, T* y);
template <typename T>
void conv2d_bwd_input(const T* dy, int n, int oh, int ow, int co, const T* ker, int kh, int kw,
                      int ci, int stride, int pad_top, int pad_left, int h, int w, T* dx);
template <typename T>
void conv2d_bwd_params(const T* x, int n, int h, int w, int ci, const T* dy, int oh, int ow,
                       int co, int kh, int kw, int stride, int pad_top, int pad_left, T* dker,
                       T* dbias);
template <typename T>
void depthwise_fwd(const T* x, int n, int h, int w, int c, const T* ker, int kh, int kw,
                   int stride, int pad_top, int pad_left, int oh, int ow, T* y);
template <typename T>
void depthwise_bwd_input(const T* dy, int n, int oh, int ow, int c, const T* ker, int kh, int kw,
                         int stride, int pad_top, int pad_left, int h, int w, T* dx);
template <typename T>
void depthwise_bwd_params(const T* x, int n, int h, int w, int c, const T* dy, int oh, int ow,
                          int kh, int kw, int stride, int pad_top, int pad_left, T* dker);
template <typename T>
void pool_max_fwd(const T* x, int n, int h, int w, int c, int window, int stride, int oh, int ow,
                  T* y, std::int32_t* argmax);
template <typename T>
void pool_max_bwd(const T* dy, int n, int oh, int ow, int c, const std::int32_t* argmax, int h,
                  int w, T* dx);
template <typename T>
void pool_mean_fwd(const T* x, int n, int h, int w, int c, int window, int stride, int oh, int ow,
                   T* y);
template <typename T>
void pool_mean_bwd(const T* dy, int n, int oh, int ow, int c, int window, int stride, int h, int w,
                   T* dx);

} // namespace serial

} // namespace binlite::kernels

#pragma once

#include <cstddef>
#include <string>

namespace udn::kernels {

// Data-parallel inner loops behind the differentiation engine. Every entry
// has a scalar reference implementation and, on x86-64 with AVX2, a
// vectorized variant. A lane is picked once at startup; UDN_KERNELS=scalar
// or UDN_KERNELS=avx2 overrides the choice. Non-fused elementwise kernels
// are bit-identical across lanes; fused (axpy, mul_acc, gemm) and reduction
// kernels may differ by FMA/reassociation rounding.
struct Backend {
  const char* name;

  // c[m x n] = a[m x k] * b[k x n], c overwritten
  void (*gemm_nn)(double* c, const double* a, const double* b, std::size_t m,
                  std::size_t k, std::size_t n);
  // d[m x k] += x[m x n] * y[k x n]^T
  void (*gemm_nt_acc)(double* d, const double* x, const double* y,
                      std::size_t m, std::size_t n, std::size_t k);
  // d[k x n] += a[m x k]^T * x[m x n]
  void (*gemm_tn_acc)(double* d, const double* a, const double* x,
                      std::size_t m, std::size_t k, std::size_t n);

  void (*add)(double* dst, const double* a, const double* b, std::size_t n);
  void (*sub)(double* dst, const double* a, const double* b, std::size_t n);
  void (*mul)(double* dst, const double* a, const double* b, std::size_t n);
  // dst += a * x
  void (*axpy)(double* dst, double a, const double* x, std::size_t n);
  // dst += x .* y
  void (*mul_acc)(double* dst, const double* x, const double* y,
                  std::size_t n);
  // dst += c (broadcast)
  void (*acc_const)(double* dst, double c, std::size_t n);
  void (*scale)(double* dst, const double* src, double a, std::size_t n);
  void (*relu)(double* dst, const double* src, std::size_t n);
  // dx += dy where x > 0
  void (*relu_grad_acc)(double* dx, const double* x, const double* dy,
                        std::size_t n);
  // dst[i,j] = x[i,j] + v[j]
  void (*add_rowvec)(double* dst, const double* x, const double* v,
                     std::size_t rows, std::size_t cols);
  // dst[j] += sum_i x[i,j]
  void (*colsum_acc)(double* dst, const double* x, std::size_t rows,
                     std::size_t cols);

  double (*sum)(const double* x, std::size_t n);
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*sum_sq)(const double* x, std::size_t n);
  double (*max)(const double* x, std::size_t n);  // requires n >= 1
};

const Backend& scalar();

#if defined(__x86_64__) || defined(_M_X64)
bool avx2_supported();
const Backend& avx2();
#endif

// The runtime-selected lane.
const Backend& active();

}  // namespace udn::kernels

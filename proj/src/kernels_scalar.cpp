#include <cstddef>

#include "udn/kernels.hpp"

// Reference lane. Straightforward loops, ikj order for gemm_nn so the
// per-element accumulation order matches the vectorized lane up to FMA
// rounding.

namespace udn::kernels {
namespace {

void s_gemm_nn(double* c, const double* a, const double* b, std::size_t m,
               std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    for (std::size_t j = 0; j < n; ++j) ci[j] = 0.0;
    for (std::size_t p = 0; p < k; ++p) {
      double aip = a[i * k + p];
      const double* bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
}

void s_gemm_nt_acc(double* d, const double* x, const double* y, std::size_t m,
                   std::size_t n, std::size_t k) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* xi = x + i * n;
    for (std::size_t c = 0; c < k; ++c) {
      const double* yc = y + c * n;
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += xi[j] * yc[j];
      d[i * k + c] += acc;
    }
  }
}

void s_gemm_tn_acc(double* d, const double* a, const double* x, std::size_t m,
                   std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* xi = x + i * n;
    for (std::size_t c = 0; c < k; ++c) {
      double aic = a[i * k + c];
      double* dc = d + c * n;
      for (std::size_t j = 0; j < n; ++j) dc[j] += aic * xi[j];
    }
  }
}

void s_add(double* dst, const double* a, const double* b, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] = a[i] + b[i];
}

void s_sub(double* dst, const double* a, const double* b, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] = a[i] - b[i];
}

void s_mul(double* dst, const double* a, const double* b, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] = a[i] * b[i];
}

void s_axpy(double* dst, double a, const double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] += a * x[i];
}

void s_mul_acc(double* dst, const double* x, const double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] += x[i] * y[i];
}

void s_acc_const(double* dst, double c, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] += c;
}

void s_scale(double* dst, const double* src, double a, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] = a * src[i];
}

void s_relu(double* dst, const double* src, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] = src[i] > 0.0 ? src[i] : 0.0;
}

void s_relu_grad_acc(double* dx, const double* x, const double* dy,
                     std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    if (x[i] > 0.0) dx[i] += dy[i];
}

void s_add_rowvec(double* dst, const double* x, const double* v,
                  std::size_t rows, std::size_t cols) {
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) dst[i * cols + j] = x[i * cols + j] + v[j];
}

void s_colsum_acc(double* dst, const double* x, std::size_t rows,
                  std::size_t cols) {
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) dst[j] += x[i * cols + j];
}

double s_sum(const double* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i];
  return acc;
}

double s_dot(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double s_sum_sq(const double* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * x[i];
  return acc;
}

double s_max(const double* x, std::size_t n) {
  double m = x[0];
  for (std::size_t i = 1; i < n; ++i)
    if (x[i] > m) m = x[i];
  return m;
}

}  // namespace

const Backend& scalar() {
  static const Backend backend = {
      "scalar",       s_gemm_nn, s_gemm_nt_acc, s_gemm_tn_acc, s_add,
      s_sub,          s_mul,     s_axpy,        s_mul_acc,     s_acc_const,
      s_scale,        s_relu,    s_relu_grad_acc, s_add_rowvec, s_colsum_acc,
      s_sum,          s_dot,     s_sum_sq,      s_max,
  };
  return backend;
}

}  // namespace udn::kernels

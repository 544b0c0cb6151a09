#include "udn/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <cstddef>

// AVX2/FMA lane, 4 doubles per vector. Scalar tails handle n % 4.
// This translation unit is the only one compiled with -mavx2 -mfma; callers
// must check avx2_supported() before dispatching here.

namespace udn::kernels {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d h = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, h));
}

void v_gemm_nn(double* c, const double* a, const double* b, std::size_t m,
               std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) _mm256_storeu_pd(ci + j, _mm256_setzero_pd());
    for (; j < n; ++j) ci[j] = 0.0;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a[i * k + p];
      const double* bp = b + p * n;
      const __m256d va = _mm256_set1_pd(aip);
      j = 0;
      for (; j + 4 <= n; j += 4) {
        __m256d vc = _mm256_loadu_pd(ci + j);
        vc = _mm256_fmadd_pd(va, _mm256_loadu_pd(bp + j), vc);
        _mm256_storeu_pd(ci + j, vc);
      }
      for (; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
}

void v_gemm_nt_acc(double* d, const double* x, const double* y, std::size_t m,
                   std::size_t n, std::size_t k) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* xi = x + i * n;
    for (std::size_t c = 0; c < k; ++c) {
      const double* yc = y + c * n;
      __m256d vacc = _mm256_setzero_pd();
      std::size_t j = 0;
      for (; j + 4 <= n; j += 4)
        vacc = _mm256_fmadd_pd(_mm256_loadu_pd(xi + j),
                               _mm256_loadu_pd(yc + j), vacc);
      double acc = hsum(vacc);
      for (; j < n; ++j) acc += xi[j] * yc[j];
      d[i * k + c] += acc;
    }
  }
}

void v_gemm_tn_acc(double* d, const double* a, const double* x, std::size_t m,
                   std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* xi = x + i * n;
    for (std::size_t c = 0; c < k; ++c) {
      const double aic = a[i * k + c];
      const __m256d va = _mm256_set1_pd(aic);
      double* dc = d + c * n;
      std::size_t j = 0;
      for (; j + 4 <= n; j += 4) {
        __m256d vd = _mm256_loadu_pd(dc + j);
        vd = _mm256_fmadd_pd(va, _mm256_loadu_pd(xi + j), vd);
        _mm256_storeu_pd(dc + j, vd);
      }
      for (; j < n; ++j) dc[j] += aic * xi[j];
    }
  }
}

void v_add(double* dst, const double* a, const double* b, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(dst + i, _mm256_add_pd(_mm256_loadu_pd(a + i),
                                            _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) dst[i] = a[i] + b[i];
}

void v_sub(double* dst, const double* a, const double* b, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(dst + i, _mm256_sub_pd(_mm256_loadu_pd(a + i),
                                            _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) dst[i] = a[i] - b[i];
}

void v_mul(double* dst, const double* a, const double* b, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(dst + i, _mm256_mul_pd(_mm256_loadu_pd(a + i),
                                            _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) dst[i] = a[i] * b[i];
}

void v_axpy(double* dst, double a, const double* x, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vd = _mm256_loadu_pd(dst + i);
    vd = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vd);
    _mm256_storeu_pd(dst + i, vd);
  }
  for (; i < n; ++i) dst[i] += a * x[i];
}

void v_mul_acc(double* dst, const double* x, const double* y, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vd = _mm256_loadu_pd(dst + i);
    vd = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), vd);
    _mm256_storeu_pd(dst + i, vd);
  }
  for (; i < n; ++i) dst[i] += x[i] * y[i];
}

void v_acc_const(double* dst, double c, std::size_t n) {
  const __m256d vc = _mm256_set1_pd(c);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(dst + i, _mm256_add_pd(_mm256_loadu_pd(dst + i), vc));
  for (; i < n; ++i) dst[i] += c;
}

void v_scale(double* dst, const double* src, double a, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(dst + i, _mm256_mul_pd(va, _mm256_loadu_pd(src + i)));
  for (; i < n; ++i) dst[i] = a * src[i];
}

void v_relu(double* dst, const double* src, std::size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(dst + i, _mm256_max_pd(zero, _mm256_loadu_pd(src + i)));
  for (; i < n; ++i) dst[i] = src[i] > 0.0 ? src[i] : 0.0;
}

void v_relu_grad_acc(double* dx, const double* x, const double* dy,
                     std::size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(x + i), zero, _CMP_GT_OQ);
    __m256d gated = _mm256_and_pd(mask, _mm256_loadu_pd(dy + i));
    _mm256_storeu_pd(dx + i, _mm256_add_pd(_mm256_loadu_pd(dx + i), gated));
  }
  for (; i < n; ++i)
    if (x[i] > 0.0) dx[i] += dy[i];
}

void v_add_rowvec(double* dst, const double* x, const double* v,
                  std::size_t rows, std::size_t cols) {
  for (std::size_t i = 0; i < rows; ++i) {
    const double* xi = x + i * cols;
    double* di = dst + i * cols;
    std::size_t j = 0;
    for (; j + 4 <= cols; j += 4)
      _mm256_storeu_pd(di + j, _mm256_add_pd(_mm256_loadu_pd(xi + j),
                                             _mm256_loadu_pd(v + j)));
    for (; j < cols; ++j) di[j] = xi[j] + v[j];
  }
}

void v_colsum_acc(double* dst, const double* x, std::size_t rows,
                  std::size_t cols) {
  for (std::size_t i = 0; i < rows; ++i) {
    const double* xi = x + i * cols;
    std::size_t j = 0;
    for (; j + 4 <= cols; j += 4)
      _mm256_storeu_pd(dst + j, _mm256_add_pd(_mm256_loadu_pd(dst + j),
                                              _mm256_loadu_pd(xi + j)));
    for (; j < cols; ++j) dst[j] += xi[j];
  }
}

double v_sum(const double* x, std::size_t n) {
  __m256d vacc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) vacc = _mm256_add_pd(vacc, _mm256_loadu_pd(x + i));
  double acc = hsum(vacc);
  for (; i < n; ++i) acc += x[i];
  return acc;
}

double v_dot(const double* a, const double* b, std::size_t n) {
  __m256d vacc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    vacc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i),
                           vacc);
  double acc = hsum(vacc);
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double v_sum_sq(const double* x, std::size_t n) {
  __m256d vacc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d v = _mm256_loadu_pd(x + i);
    vacc = _mm256_fmadd_pd(v, v, vacc);
  }
  double acc = hsum(vacc);
  for (; i < n; ++i) acc += x[i] * x[i];
  return acc;
}

double v_max(const double* x, std::size_t n) {
  if (n < 8) {
    double m = x[0];
    for (std::size_t i = 1; i < n; ++i)
      if (x[i] > m) m = x[i];
    return m;
  }
  __m256d vm = _mm256_loadu_pd(x);
  std::size_t i = 4;
  for (; i + 4 <= n; i += 4) vm = _mm256_max_pd(vm, _mm256_loadu_pd(x + i));
  __m128d lo = _mm256_castpd256_pd128(vm);
  __m128d hi = _mm256_extractf128_pd(vm, 1);
  lo = _mm_max_pd(lo, hi);
  __m128d h = _mm_unpackhi_pd(lo, lo);
  double m = _mm_cvtsd_f64(_mm_max_sd(lo, h));
  for (; i < n; ++i)
    if (x[i] > m) m = x[i];
  return m;
}

}  // namespace

const Backend& avx2() {
  static const Backend backend = {
      "avx2",         v_gemm_nn, v_gemm_nt_acc, v_gemm_tn_acc, v_add,
      v_sub,          v_mul,     v_axpy,        v_mul_acc,     v_acc_const,
      v_scale,        v_relu,    v_relu_grad_acc, v_add_rowvec, v_colsum_acc,
      v_sum,          v_dot,     v_sum_sq,      v_max,
  };
  return backend;
}

}  // namespace udn::kernels

#endif  // x86-64

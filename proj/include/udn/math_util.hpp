#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace udn {

// log Gamma(x). Non-differentiated scalar helper; its arguments in this
// project are depth indices, never optimized variables.
inline double log_gamma(double x) { return std::lgamma(x); }

// log(k!) from a cached table of running log sums; falls back to lgamma for
// very large k. Adjacent entries differ by exactly log(k), which keeps
// ratios of Poisson pmf terms monotone in k.
inline double log_factorial(std::size_t k) {
  static const std::vector<double> table = [] {
    std::vector<double> t(4096);
    t[0] = 0.0;
    for (std::size_t i = 1; i < t.size(); ++i)
      t[i] = t[i - 1] + std::log(static_cast<double>(i));
    return t;
  }();
  if (k < table.size()) return table[k];
  return log_gamma(static_cast<double>(k) + 1.0);
}

inline double log_add_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  double hi = std::max(a, b);
  double lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}

}  // namespace udn

#pragma once

#include <functional>
#include <vector>

#include "udn/graph.hpp"

namespace udn {

// Smallest k with CDF_Poisson(lambda)(k) >= delta, by iterative CDF
// accumulation in log space. The loop is bounded at k = 10*lambda + 50,
// far beyond any quantile for delta < 1.
long poisson_quantile(double lambda, double delta);

// log Poisson(lambda) pmf at k (untruncated).
double poisson_log_pmf(double lambda, long k);

// Poisson(lambda) truncated to its delta-quantile and renormalized.
// shift = 0 gives the raw family of the support-bound theorem; shift = 1 is
// the variational depth distribution q(l), so that l >= 1.
struct TruncatedPoissonDist {
  double lambda;
  double delta;
  long shift;

  TruncatedPoissonDist(double lambda_, double delta_, long shift_);

  long quantile() const { return q_; }          // support width above shift
  long support_min() const { return shift; }
  long support_max() const { return shift + q_; }
  long support_size() const { return q_ + 1; }

  // pmf over the support, in order; sums to 1.
  std::vector<double> pmf() const;
  double log_pmf(long ell) const;  // ell must lie in the support
  double mean() const;             // E[l]

private:
  long q_;
};

// Shifted-Poisson prior on the truncation: l - 1 ~ Poisson(alpha), l >= 1.
struct DepthPrior {
  double alpha;
  explicit DepthPrior(double alpha_);
  double log_pmf(long ell) const;
};

double expectation(const TruncatedPoissonDist& dist,
                   const std::function<double(long)>& g);

// Differentiable-in-lambda log pmf of the truncated Poisson over the frozen
// support {0..q_max} (underlying Poisson indices). Element j is
// j log(lambda) - lambda - log(j!) - log Z(lambda) with Z summed over the
// same frozen range; the support does not move with lambda inside a graph.
Value truncated_poisson_log_pmf_vector(Graph& g, Value lambda, long q_max);

// Scalar node for one support point of dist (support frozen from dist).
Value truncated_poisson_log_pmf(Graph& g, Value lambda,
                                const TruncatedPoissonDist& dist, long ell);

// Numeric check of the support bounds at delta = 0.95:
//   integer grid:  m(q(k)) <= slope*(k-1) + offset and m(q(k)) >= k - ln 2
//                  for k in {1..k_max}
//   lambda grid:   both bounds at lambda in {0.1, 0.2, ..., k_max}
// slope/offset default to the proven 1.3 and 5; they are exposed so a
// deliberately wrong bound can be injected to exercise the failure path.
struct Theorem1Row {
  long k;
  long m;
  double upper;
  double lower;
  double margin;  // upper - m
};

struct Theorem1Report {
  std::vector<Theorem1Row> rows;
  bool integer_grid_ok = false;
  bool lambda_grid_ok = false;
  bool ok() const { return integer_grid_ok && lambda_grid_ok; }
};

Theorem1Report verify_theorem1(long k_max = 70, double upper_slope = 1.3,
                               double upper_offset = 5.0);

}  // namespace udn

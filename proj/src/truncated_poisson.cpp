#include "udn/truncated_poisson.hpp"

#include <cmath>

#include "udn/errors.hpp"
#include "udn/math_util.hpp"

namespace udn {

double poisson_log_pmf(double lambda, long k) {
  return double(k) * std::log(lambda) - lambda -
         log_factorial(std::size_t(k));
}

long poisson_quantile(double lambda, double delta) {
  if (!(lambda > 0.0)) throw ConfigError("poisson_quantile: lambda must be > 0");
  if (!(delta >= 0.0 && delta < 1.0))
    throw ConfigError("poisson_quantile: delta must be in [0, 1)");
  const double log_delta = std::log(delta);
  const long guard = long(10.0 * lambda + 50.0);
  double log_cdf = -lambda;  // log pmf(0)
  long k = 0;
  while (log_cdf < log_delta && k < guard) {
    ++k;
    log_cdf = log_add_exp(log_cdf, poisson_log_pmf(lambda, k));
  }
  return k;
}

TruncatedPoissonDist::TruncatedPoissonDist(double lambda_, double delta_,
                                           long shift_)
    : lambda(lambda_), delta(delta_), shift(shift_) {
  if (!(lambda > 0.0)) throw ConfigError("TruncatedPoisson: lambda must be > 0");
  if (!(delta >= 0.5 && delta < 1.0))
    throw ConfigError("TruncatedPoisson: delta must be in [0.5, 1)");
  if (shift < 0) throw ConfigError("TruncatedPoisson: shift must be >= 0");
  q_ = poisson_quantile(lambda, delta);
}

std::vector<double> TruncatedPoissonDist::pmf() const {
  std::vector<double> lp(std::size_t(q_) + 1);
  for (long j = 0; j <= q_; ++j)
    lp[std::size_t(j)] = poisson_log_pmf(lambda, j);
  double log_z = lp[0];
  for (long j = 1; j <= q_; ++j) log_z = log_add_exp(log_z, lp[std::size_t(j)]);
  std::vector<double> p(lp.size());
  for (std::size_t j = 0; j < lp.size(); ++j) p[j] = std::exp(lp[j] - log_z);
  return p;
}

double TruncatedPoissonDist::log_pmf(long ell) const {
  if (ell < support_min() || ell > support_max())
    throw ConfigError("TruncatedPoisson: point outside support");
  double log_z = poisson_log_pmf(lambda, 0);
  for (long j = 1; j <= q_; ++j)
    log_z = log_add_exp(log_z, poisson_log_pmf(lambda, j));
  return poisson_log_pmf(lambda, ell - shift) - log_z;
}

double TruncatedPoissonDist::mean() const {
  const std::vector<double> p = pmf();
  double acc = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j)
    acc += p[j] * double(long(j) + shift);
  return acc;
}

DepthPrior::DepthPrior(double alpha_) : alpha(alpha_) {
  if (!(alpha > 0.0)) throw ConfigError("DepthPrior: alpha must be > 0");
}

double DepthPrior::log_pmf(long ell) const {
  if (ell < 1) throw ConfigError("DepthPrior: depth must be >= 1");
  return poisson_log_pmf(alpha, ell - 1);
}

double expectation(const TruncatedPoissonDist& dist,
                   const std::function<double(long)>& g) {
  const std::vector<double> p = dist.pmf();
  double acc = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j)
    acc += p[j] * g(long(j) + dist.shift);
  return acc;
}

Value truncated_poisson_log_pmf_vector(Graph& g, Value lambda, long q_max) {
  if (q_max < 0) throw ConfigError("log_pmf_vector: negative support bound");
  Value log_lambda = g.log(lambda);
  std::vector<Value> terms;
  terms.reserve(std::size_t(q_max) + 1);
  for (long j = 0; j <= q_max; ++j) {
    Value t = g.sub(g.scale(log_lambda, double(j)), lambda);
    terms.push_back(g.add_const(t, -log_factorial(std::size_t(j))));
  }
  Value tvec = g.concat_scalars(terms);
  return g.sub_bcast(tvec, g.logsumexp(tvec));
}

Value truncated_poisson_log_pmf(Graph& g, Value lambda,
                                const TruncatedPoissonDist& dist, long ell) {
  if (ell < dist.support_min() || ell > dist.support_max())
    throw ConfigError("log_pmf: point outside support");
  Value vec = truncated_poisson_log_pmf_vector(g, lambda, dist.quantile());
  return g.index(vec, std::size_t(ell - dist.shift));
}

Theorem1Report verify_theorem1(long k_max, double upper_slope,
                               double upper_offset) {
  constexpr double kLn2 = 0.69314718055994530941723212145818;
  Theorem1Report report;
  report.integer_grid_ok = true;
  for (long k = 1; k <= k_max; ++k) {
    const long m = poisson_quantile(double(k), 0.95);
    Theorem1Row row;
    row.k = k;
    row.m = m;
    row.upper = upper_slope * double(k - 1) + upper_offset;
    row.lower = double(k) - kLn2;
    row.margin = row.upper - double(m);
    if (row.margin < 0.0 || double(m) < row.lower)
      report.integer_grid_ok = false;
    report.rows.push_back(row);
  }
  report.lambda_grid_ok = true;
  for (long i = 1; i <= 10 * k_max; ++i) {
    const double lambda = double(i) / 10.0;
    const double m = double(poisson_quantile(lambda, 0.95));
    if (m < lambda - kLn2 || m > upper_slope * lambda + upper_offset)
      report.lambda_grid_ok = false;
  }
  return report;
}

}  // namespace udn

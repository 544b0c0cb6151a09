#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "udn/errors.hpp"
#include "udn/param_store.hpp"
#include "udn/rng.hpp"
#include "udn/truncated_poisson.hpp"

using namespace udn;

constexpr double kLn2 = 0.69314718055994530941723212145818;

TEST_CASE("poisson_quantile: hand case, degenerate lambda, median bound") {
  // Poisson(0.5) pmf: 0.6065, 0.3033, 0.0758 -> cdf crosses 0.95 at k = 2
  CHECK(poisson_quantile(0.5, 0.95) == 2);
  CHECK(poisson_quantile(0.5, 0.95) == oracle::poisson_quantile_direct(0.5, 0.95));

  CHECK(poisson_quantile(1e-8, 0.95) == 0);

  // the Poisson median is >= lambda - ln 2
  CHECK(double(poisson_quantile(10.0, 0.5)) >= 10.0 - kLn2);

  CHECK_THROWS_AS(poisson_quantile(0.0, 0.95), ConfigError);
  CHECK_THROWS_AS(poisson_quantile(1.0, 1.0), ConfigError);
}

TEST_CASE("poisson_quantile agrees with direct pmf summation") {
  Rng rng(3);
  for (int rep = 0; rep < 200; ++rep) {
    const double lambda = std::exp(rng.uniform(std::log(1e-3), std::log(80.0)));
    const double delta = rng.uniform(0.5, 0.999);
    CHECK(poisson_quantile(lambda, delta) ==
          oracle::poisson_quantile_direct(lambda, delta));
  }
}

TEST_CASE("support_max: theorem bounds, degenerate support, oracle") {
  TruncatedPoissonDist d5(5.0, 0.95, 0);
  CHECK(double(d5.support_max()) >= 5.0 - kLn2);
  CHECK(double(d5.support_max()) <= 1.3 * 5.0 + 5.0);

  TruncatedPoissonDist tiny(1e-8, 0.95, 1);
  CHECK(tiny.support_max() == 1);
  CHECK(tiny.support_min() == 1);

  TruncatedPoissonDist d70(70.0, 0.95, 0);
  CHECK(double(d70.support_max()) >= 70.0 - kLn2);
  CHECK(double(d70.support_max()) <= 1.3 * 70.0 + 5.0);
  CHECK(d70.support_max() == oracle::poisson_quantile_direct(70.0, 0.95));
}

TEST_CASE("pmf sums to one over the support (1000 random members)") {
  Rng rng(11);
  for (int rep = 0; rep < 1000; ++rep) {
    const double lambda = std::exp(rng.uniform(std::log(1e-6), std::log(70.0)));
    const double delta = rng.uniform(0.5, 0.9999);
    TruncatedPoissonDist dist(lambda, delta, rep % 2);
    const std::vector<double> p = dist.pmf();
    double sum = 0.0;
    for (double v : p) sum += v;
    CHECK(std::fabs(sum - 1.0) <= 1e-12);
    CHECK(long(p.size()) == dist.support_size());  // finite by construction
  }
}

TEST_CASE("log_pmf is consistent with pmf and rejects out-of-support points") {
  TruncatedPoissonDist dist(3.0, 0.95, 1);
  const std::vector<double> p = dist.pmf();
  for (long ell = dist.support_min(); ell <= dist.support_max(); ++ell)
    CHECK(std::exp(dist.log_pmf(ell)) ==
          doctest::Approx(p[std::size_t(ell - 1)]).epsilon(1e-12));
  CHECK_THROWS_AS(dist.log_pmf(0), ConfigError);
  CHECK_THROWS_AS(dist.log_pmf(dist.support_max() + 1), ConfigError);
}

TEST_CASE("mode property: n is the argmax of q^0.95(n + 0.5) for n <= 200") {
  for (long n = 1; n <= 200; ++n) {
    TruncatedPoissonDist dist(double(n) + 0.5, 0.95, 0);
    const std::vector<double> p = dist.pmf();
    std::size_t argmax = 0;
    for (std::size_t j = 1; j < p.size(); ++j)
      if (p[j] > p[argmax]) argmax = j;
    CHECK(long(argmax) == n);
  }
}

TEST_CASE("expectation: total mass, degenerate dist, direct-sum oracle") {
  TruncatedPoissonDist d(2.3, 0.95, 1);
  CHECK(expectation(d, [](long) { return 1.0; }) ==
        doctest::Approx(1.0).epsilon(1e-12));

  TruncatedPoissonDist degenerate(1e-8, 0.95, 1);
  CHECK(expectation(degenerate, [](long l) { return double(l); }) ==
        doctest::Approx(1.0).epsilon(1e-12));

  TruncatedPoissonDist d5(5.0, 0.95, 0);
  const std::vector<double> direct =
      oracle::truncated_poisson_pmf_direct(5.0, d5.quantile());
  double ref = 0.0;
  for (std::size_t j = 0; j < direct.size(); ++j) ref += direct[j] * double(j);
  CHECK(expectation(d5, [](long l) { return double(l); }) ==
        doctest::Approx(ref).epsilon(1e-10));
}

TEST_CASE("graph log_pmf: normalization, gradient vs finite differences") {
  ParamStore store;
  SlotId lam_slot = store.create("lambda", Tensor::scalar(3.7));
  TruncatedPoissonDist dist(3.7, 0.95, 0);  // support frozen at this lambda

  {
    Graph g;
    Value vec = truncated_poisson_log_pmf_vector(g, g.param(store, lam_slot),
                                                 dist.quantile());
    double sum = 0.0;
    for (double lv : g.value(vec).data) sum += std::exp(lv);
    CHECK(std::fabs(sum - 1.0) <= 1e-12);
  }

  for (long ell = dist.support_min(); ell <= dist.support_max(); ++ell) {
    Graph g;
    Value node =
        truncated_poisson_log_pmf(g, g.param(store, lam_slot), dist, ell);
    store.zero_grad();
    g.backward(node, store);
    const double autodiff = store.grad(lam_slot).data[0];

    double& lambda_ref = store.value(lam_slot).data[0];
    const double fd = oracle::central_diff(
        [&] {
          Graph gf;
          return gf.scalar_value(truncated_poisson_log_pmf(
              gf, gf.param(store, lam_slot), dist, ell));
        },
        lambda_ref);
    CHECK(oracle::rel_close(autodiff, fd, 1e-6, 1e-3));
  }
}

TEST_CASE("support_max is non-decreasing in lambda at fixed delta") {
  Rng rng(23);
  for (int rep = 0; rep < 20; ++rep) {
    const double delta = rng.uniform(0.5, 0.99);
    long prev = 0;
    for (double lambda = 0.05; lambda <= 40.0; lambda += 0.05) {
      const long m = TruncatedPoissonDist(lambda, delta, 0).support_max();
      CHECK(m >= prev);
      prev = m;
    }
  }
}

TEST_CASE("shift moves the pmf exactly") {
  TruncatedPoissonDist raw(4.2, 0.95, 0);
  TruncatedPoissonDist shifted(4.2, 0.95, 1);
  CHECK(raw.pmf() == shifted.pmf());  // same underlying table
  for (long ell = shifted.support_min(); ell <= shifted.support_max(); ++ell)
    CHECK(shifted.log_pmf(ell) == raw.log_pmf(ell - 1));
}

TEST_CASE("continuity across a support jump: pmf moves by at most the new atom") {
  // bisect the jump of the 0.95-quantile between lambda = 2 and 3
  const double delta = 0.95;
  double lo = 2.0, hi = 3.0;
  const long q_lo = poisson_quantile(lo, delta);
  REQUIRE(poisson_quantile(hi, delta) == q_lo + 1);
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    if (poisson_quantile(mid, delta) == q_lo)
      lo = mid;
    else
      hi = mid;
  }
  const std::vector<double> before = TruncatedPoissonDist(lo, delta, 0).pmf();
  const std::vector<double> after = TruncatedPoissonDist(hi, delta, 0).pmf();
  REQUIRE(after.size() == before.size() + 1);
  const double atom = after.back();
  for (std::size_t j = 0; j < before.size(); ++j)
    CHECK(std::fabs(after[j] - before[j]) <= atom + 1e-6);
}

TEST_CASE("depth prior is the shifted Poisson") {
  DepthPrior prior(0.5);
  CHECK(prior.log_pmf(1) == doctest::Approx(-0.5).epsilon(1e-12));  // log e^-a
  CHECK(prior.log_pmf(3) ==
        doctest::Approx(2.0 * std::log(0.5) - 0.5 - std::log(2.0))
            .epsilon(1e-12));
  CHECK_THROWS_AS(prior.log_pmf(0), ConfigError);
  CHECK_THROWS_AS(DepthPrior(0.0), ConfigError);
}

TEST_CASE("verify_theorem1: default bounds hold, k=1 plug-in, grid sweep") {
  const Theorem1Report report = verify_theorem1(70);
  CHECK(report.ok());
  CHECK(report.integer_grid_ok);
  CHECK(report.lambda_grid_ok);
  REQUIRE(report.rows.size() == 70);
  for (const Theorem1Row& row : report.rows) {
    CHECK(row.margin >= 0.0);
    CHECK(double(row.m) >= row.lower);
  }
  CHECK(report.rows[0].k == 1);
  CHECK(report.rows[0].upper == doctest::Approx(5.0));
  CHECK(report.rows[0].lower == doctest::Approx(1.0 - kLn2).epsilon(1e-12));
}

TEST_CASE("verify_theorem1 flags a deliberately wrong bound") {
  const Theorem1Report report = verify_theorem1(70, 1.3, -100.0);
  CHECK_FALSE(report.ok());
}

TEST_CASE("dist construction validates its invariants") {
  CHECK_THROWS_AS(TruncatedPoissonDist(-1.0, 0.95, 0), ConfigError);
  CHECK_THROWS_AS(TruncatedPoissonDist(1.0, 0.4, 0), ConfigError);
  CHECK_THROWS_AS(TruncatedPoissonDist(1.0, 1.0, 0), ConfigError);
  CHECK_THROWS_AS(TruncatedPoissonDist(1.0, 0.95, -1), ConfigError);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "oracles.hpp"
#include "udn/datasets.hpp"
#include "udn/errors.hpp"

using namespace udn;

namespace {

double knn_agreement(const Dataset& data) {
  // leave-one-out 1-NN label agreement
  const std::size_t n = data.size();
  std::size_t agree = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double best = 1e300;
    std::size_t best_j = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double dx = data.features.at(i, 0) - data.features.at(j, 0);
      const double dy = data.features.at(i, 1) - data.features.at(j, 1);
      const double d = dx * dx + dy * dy;
      if (d < best) {
        best = d;
        best_j = j;
      }
    }
    if (data.labels[i] == data.labels[best_j]) ++agree;
  }
  return double(agree) / double(n);
}

}  // namespace

TEST_CASE("spiral with omega=0 lies on the segment [-1,1] x {0}") {
  SpiralConfig cfg;
  cfg.omega = 0.0;
  cfg.n_samples = 500;
  cfg.noise_scale = 1e-12;
  cfg.seed = 4;
  const Dataset data = generate_spiral(cfg);
  for (std::size_t i = 0; i < data.size(); ++i) {
    CHECK(std::fabs(data.features.at(i, 1)) < 1e-9);
    CHECK(data.features.at(i, 0) >= -1.0 - 1e-9);
    CHECK(data.features.at(i, 0) <= 1.0 + 1e-9);
    // branch sign determines the label
    if (std::fabs(data.features.at(i, 0)) > 1e-6)
      CHECK((data.features.at(i, 0) > 0) == (data.labels[i] == 1));
  }
}

TEST_CASE("spiral mean positions stay inside the unit disk for any omega") {
  for (double omega : {2.0, 10.0, 30.0}) {
    SpiralConfig cfg;
    cfg.omega = omega;
    cfg.n_samples = 400;
    cfg.noise_scale = 1e-12;
    cfg.seed = 9;
    const Dataset data = generate_spiral(cfg);
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double r = std::hypot(data.features.at(i, 0), data.features.at(i, 1));
      CHECK(r <= 1.0 + 1e-9);
    }
  }
}

TEST_CASE("nearest-neighbor label agreement decays toward chance as omega grows") {
  SpiralConfig cfg;
  cfg.n_samples = 1500;
  cfg.seed = 21;
  cfg.omega = 2.0;
  const double agree_low = knn_agreement(generate_spiral(cfg));
  cfg.omega = 30.0;
  const double agree_high = knn_agreement(generate_spiral(cfg));
  CHECK(agree_low > 0.95);
  CHECK(agree_low >= agree_high + 0.1);
}

TEST_CASE("spiral branch labels are balanced within 4 sigma") {
  SpiralConfig cfg;
  cfg.n_samples = 1024;
  cfg.seed = 33;
  cfg.omega = 5.0;
  const Dataset data = generate_spiral(cfg);
  long ones = std::count(data.labels.begin(), data.labels.end(), 1);
  CHECK(std::fabs(double(ones) - 512.0) <= 4.0 * 16.0);  // sigma = sqrt(n/4)
}

TEST_CASE("radius rebalancing: u^2 is uniform by the KS test at n = 10^4") {
  SpiralConfig cfg;
  cfg.n_samples = 10000;
  cfg.noise_scale = 1e-12;
  cfg.seed = 56;
  cfg.omega = 7.0;
  const Dataset data = generate_spiral(cfg);
  std::vector<double> u(data.size());
  for (std::size_t i = 0; i < data.size(); ++i)
    u[i] = std::hypot(data.features.at(i, 0), data.features.at(i, 1));
  std::sort(u.begin(), u.end());
  double ks = 0.0;
  const double n = double(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double f = u[i] * u[i];  // F(u) = u^2
    ks = std::max(ks, std::fabs(double(i + 1) / n - f));
    ks = std::max(ks, std::fabs(f - double(i) / n));
  }
  CHECK(ks < 1.6276 / std::sqrt(n));  // 1% critical value
}

TEST_CASE("spiral generation is deterministic in the config") {
  SpiralConfig cfg;
  cfg.n_samples = 256;
  cfg.seed = 77;
  cfg.omega = 12.0;
  const Dataset a = generate_spiral(cfg);
  const Dataset b = generate_spiral(cfg);
  CHECK(a.features.data == b.features.data);
  CHECK(a.labels == b.labels);
}

TEST_CASE("spiral triple: independent sets with the same omega") {
  SpiralConfig cfg;
  cfg.seed = 3;
  cfg.omega = 8.0;
  const SpiralTriple triple = generate_spiral_splits(cfg, 128);
  CHECK(triple.train.size() == 128);
  CHECK(triple.valid.size() == 128);
  CHECK(triple.test.size() == 128);
  CHECK(triple.train.features.data != triple.valid.features.data);
  CHECK(triple.valid.features.data != triple.test.features.data);
}

TEST_CASE("split: disjoint cover, determinism, oversubscription") {
  SpiralConfig cfg;
  cfg.n_samples = 10;
  cfg.seed = 5;
  const Dataset data = generate_spiral(cfg);
  const SplitIndices s = split(data, {8, 1, 1}, 42);
  CHECK(s.train.size() == 8);
  CHECK(s.valid.size() == 1);
  CHECK(s.test.size() == 1);
  std::set<std::size_t> all;
  for (auto i : s.train) all.insert(i);
  for (auto i : s.valid) all.insert(i);
  for (auto i : s.test) all.insert(i);
  CHECK(all.size() == 10);

  const SplitIndices s2 = split(data, {8, 1, 1}, 42);
  CHECK(s.train == s2.train);
  CHECK(s.valid == s2.valid);
  CHECK(s.test == s2.test);

  CHECK_THROWS_AS(split(data, {9, 1, 1}, 42), ConfigError);
}

TEST_CASE("load_table parses a hand-written fixture exactly") {
  const auto path = std::filesystem::temp_directory_path() / "udn_fixture.csv";
  {
    std::ofstream out(path);
    out << "a,b,target\n1,2.5,0.5\n-1,0,1.5\n2,1,2.5\n";
  }
  const Dataset data = load_table(path.string(), "target");
  CHECK(data.size() == 3);
  CHECK(data.dim() == 2);
  CHECK(data.features.data == std::vector<double>{1, 2.5, -1, 0, 2, 1});
  CHECK(data.targets == std::vector<double>{0.5, 1.5, 2.5});
  CHECK(data.feature_names == std::vector<std::string>{"a", "b"});
  std::filesystem::remove(path);

  // whitespace-delimited variant
  const auto wpath = std::filesystem::temp_directory_path() / "udn_fixture.txt";
  {
    std::ofstream out(wpath);
    out << "a b target\n1 2.5 0.5\n-1 0 1.5\n";
  }
  const Dataset wdata = load_table(wpath.string(), "target");
  CHECK(wdata.features.data == std::vector<double>{1, 2.5, -1, 0});
  std::filesystem::remove(wpath);
}

TEST_CASE("load_table reports bad cells and missing targets with positions") {
  const auto path = std::filesystem::temp_directory_path() / "udn_bad.csv";
  {
    std::ofstream out(path);
    out << "a,b,target\n1,oops,0.5\n";
  }
  CHECK_THROWS_WITH_AS(load_table(path.string(), "target"),
                       doctest::Contains("row 2"), ConfigError);
  CHECK_THROWS_WITH_AS(load_table(path.string(), "nope"),
                       doctest::Contains("no column named"), ConfigError);
  CHECK_THROWS_AS(load_table("/nonexistent.csv", "y"), ConfigError);
  std::filesystem::remove(path);
}

TEST_CASE("standardization: train stats, unit train moments, shifted splits") {
  // rows 0..7 have a very different scale from rows 8..11
  Dataset data;
  data.classification = false;
  data.features = Tensor::zeros({12, 2});
  for (std::size_t i = 0; i < 12; ++i) {
    data.features.at(i, 0) = i < 8 ? double(i) : double(i) * 10.0;
    data.features.at(i, 1) = i < 8 ? -double(i) : 5.0;
    data.targets.push_back(double(i));
  }
  SplitIndices idx;
  idx.train = {0, 1, 2, 3, 4, 5, 6, 7};
  idx.valid = {8, 9};
  idx.test = {10, 11};

  const Standardizer st = Standardizer::fit(data, idx.train, true);
  Dataset standardized = data;
  st.apply(standardized);

  for (std::size_t c = 0; c < 2; ++c) {
    double mean = 0.0, var = 0.0;
    for (std::size_t i : idx.train) mean += standardized.features.at(i, c);
    mean /= 8.0;
    for (std::size_t i : idx.train) {
      const double r = standardized.features.at(i, c) - mean;
      var += r * r;
    }
    CHECK(std::fabs(mean) <= 1e-10);
    CHECK(std::fabs(std::sqrt(var / 8.0) - 1.0) <= 1e-10);
  }

  // valid/test standardized with train statistics keep nonzero means
  double vmean = 0.0;
  for (std::size_t i : idx.valid) vmean += standardized.features.at(i, 0);
  CHECK(std::fabs(vmean / 2.0) > 1.0);

  // target transform inverts exactly
  CHECK(st.invert_target(standardized.targets[5]) ==
        doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("dataset export/import round-trip") {
  SpiralConfig cfg;
  cfg.n_samples = 64;
  cfg.seed = 11;
  cfg.omega = 4.0;
  const Dataset data = generate_spiral(cfg);
  const auto path = std::filesystem::temp_directory_path() / "udn_export.csv";
  export_delimited(data, path.string());
  const Dataset back = load_table(path.string(), "label", true);
  CHECK(back.size() == data.size());
  CHECK(back.labels == data.labels);
  for (std::size_t i = 0; i < data.features.numel(); ++i)
    CHECK(back.features.data[i] == data.features.data[i]);
  std::filesystem::remove(path);
}

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "udn/model.hpp"
#include "udn/tensor.hpp"

namespace udn {

// Labeled observations. Classification datasets carry integer labels,
// regression datasets real targets.
struct Dataset {
  Tensor features;  // n x d
  std::vector<int> labels;
  std::vector<double> targets;
  bool classification = true;
  std::vector<std::string> feature_names;

  std::size_t size() const {
    return features.rank() == 2 ? features.rows() : 0;
  }
  std::size_t dim() const { return features.rank() == 2 ? features.cols() : 0; }
};

// Two-branch spiral with rotation speed omega. Per sample:
//   t ~ U[0,1], u = sqrt(t), y ~ U{-1,+1},
//   x ~ N([y u cos(omega u pi/2), y u sin(omega u pi/2)], noise_scale^2 I)
// with labels mapped {-1,+1} -> {0,1}. noise_scale is the per-coordinate
// standard deviation.
struct SpiralConfig {
  double omega = 0.0;
  std::size_t n_samples = 1024;
  double noise_scale = 0.02;
  std::uint64_t seed = 0;
};

Dataset generate_spiral(const SpiralConfig& config);

// Three independently sampled sets with the same omega and derived seeds.
struct SpiralTriple {
  Dataset train, valid, test;
};
SpiralTriple generate_spiral_splits(const SpiralConfig& base,
                                    std::size_t n_each = 1024);

// Seeded disjoint partition of row indices.
struct SplitSizes {
  std::size_t train = 0, valid = 0, test = 0;
};
struct SplitIndices {
  std::vector<std::size_t> train, valid, test;
};
SplitIndices split(const Dataset& data, const SplitSizes& sizes,
                   std::uint64_t seed);

Dataset subset(const Dataset& data, std::span<const std::size_t> idx);

// Feature/target standardization with statistics from the training rows
// only; the target transform keeps its inverse for reporting in original
// units.
struct Standardizer {
  std::vector<double> mean, sd;
  double target_mean = 0.0, target_sd = 1.0;
  bool standardize_target = false;

  static Standardizer fit(const Dataset& data,
                          std::span<const std::size_t> train_idx,
                          bool standardize_target);
  void apply(Dataset& data) const;
  double invert_target(double standardized) const {
    return standardized * target_sd + target_mean;
  }
};

// Delimited-text loader (header line; comma or whitespace separated,
// auto-detected). Non-numeric cells and missing target columns are
// reported with their position.
Dataset load_table(const std::string& path, const std::string& target_column,
                   bool classification = false);

// Text export (x1, x2, ..., label), re-importable through load_table.
void export_delimited(const Dataset& data, const std::string& path);

Batch make_batch(const Dataset& data, std::span<const std::size_t> idx);

}  // namespace udn

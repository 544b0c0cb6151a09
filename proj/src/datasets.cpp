#include "udn/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "udn/errors.hpp"
#include "udn/rng.hpp"

namespace udn {

Dataset generate_spiral(const SpiralConfig& config) {
  if (config.n_samples < 1)
    throw ConfigError("generate_spiral: n_samples must be >= 1");
  if (!(config.noise_scale > 0.0))
    throw ConfigError("generate_spiral: noise_scale must be > 0");
  constexpr double kHalfPi = 1.5707963267948966192313216916398;

  Rng rng(config.seed);
  Dataset data;
  data.classification = true;
  data.features = Tensor::zeros({config.n_samples, 2});
  data.labels.resize(config.n_samples);
  for (std::size_t i = 0; i < config.n_samples; ++i) {
    const double t = rng.u01();
    const double u = std::sqrt(t);  // rebalances density along the curve
    const double y = rng.u01() < 0.5 ? -1.0 : 1.0;
    const double angle = config.omega * u * kHalfPi;
    data.features.at(i, 0) =
        y * u * std::cos(angle) + config.noise_scale * rng.normal();
    data.features.at(i, 1) =
        y * u * std::sin(angle) + config.noise_scale * rng.normal();
    data.labels[i] = y < 0.0 ? 0 : 1;
  }
  data.feature_names = {"x1", "x2"};
  return data;
}

SpiralTriple generate_spiral_splits(const SpiralConfig& base,
                                    std::size_t n_each) {
  SpiralTriple out;
  SpiralConfig c = base;
  c.n_samples = n_each;
  c.seed = mix_seed(base.seed, 1, 0x5eed);
  out.train = generate_spiral(c);
  c.seed = mix_seed(base.seed, 2, 0x5eed);
  out.valid = generate_spiral(c);
  c.seed = mix_seed(base.seed, 3, 0x5eed);
  out.test = generate_spiral(c);
  return out;
}

SplitIndices split(const Dataset& data, const SplitSizes& sizes,
                   std::uint64_t seed) {
  const std::size_t total = sizes.train + sizes.valid + sizes.test;
  if (total > data.size())
    throw ConfigError("split: sizes oversubscribe the dataset");
  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(mix_seed(seed, 0x5011));
  shuffle(idx, rng);
  SplitIndices out;
  out.train.assign(idx.begin(), idx.begin() + sizes.train);
  out.valid.assign(idx.begin() + sizes.train,
                   idx.begin() + sizes.train + sizes.valid);
  out.test.assign(idx.begin() + sizes.train + sizes.valid,
                  idx.begin() + total);
  return out;
}

Dataset subset(const Dataset& data, std::span<const std::size_t> idx) {
  Dataset out;
  out.classification = data.classification;
  out.feature_names = data.feature_names;
  const std::size_t d = data.dim();
  out.features = Tensor::zeros({idx.size(), d});
  for (std::size_t r = 0; r < idx.size(); ++r)
    for (std::size_t c = 0; c < d; ++c)
      out.features.at(r, c) = data.features.at(idx[r], c);
  if (data.classification) {
    out.labels.reserve(idx.size());
    for (std::size_t i : idx) out.labels.push_back(data.labels[i]);
  } else {
    out.targets.reserve(idx.size());
    for (std::size_t i : idx) out.targets.push_back(data.targets[i]);
  }
  return out;
}

Standardizer Standardizer::fit(const Dataset& data,
                               std::span<const std::size_t> train_idx,
                               bool standardize_target) {
  if (train_idx.empty()) throw ConfigError("Standardizer: empty train split");
  const std::size_t d = data.dim();
  Standardizer st;
  st.standardize_target = standardize_target;
  st.mean.assign(d, 0.0);
  st.sd.assign(d, 0.0);
  const double n = double(train_idx.size());
  for (std::size_t i : train_idx)
    for (std::size_t c = 0; c < d; ++c) st.mean[c] += data.features.at(i, c);
  for (std::size_t c = 0; c < d; ++c) st.mean[c] /= n;
  for (std::size_t i : train_idx)
    for (std::size_t c = 0; c < d; ++c) {
      const double r = data.features.at(i, c) - st.mean[c];
      st.sd[c] += r * r;
    }
  for (std::size_t c = 0; c < d; ++c) {
    st.sd[c] = std::sqrt(st.sd[c] / n);
    if (st.sd[c] == 0.0) st.sd[c] = 1.0;  // constant column passes through
  }
  if (standardize_target) {
    if (data.classification)
      throw ConfigError("Standardizer: cannot standardize class labels");
    double tm = 0.0;
    for (std::size_t i : train_idx) tm += data.targets[i];
    tm /= n;
    double tv = 0.0;
    for (std::size_t i : train_idx) {
      const double r = data.targets[i] - tm;
      tv += r * r;
    }
    st.target_mean = tm;
    st.target_sd = std::sqrt(tv / n);
    if (st.target_sd == 0.0) st.target_sd = 1.0;
  }
  return st;
}

void Standardizer::apply(Dataset& data) const {
  const std::size_t d = data.dim();
  if (d != mean.size()) throw ConfigError("Standardizer: dimension mismatch");
  for (std::size_t i = 0; i < data.size(); ++i)
    for (std::size_t c = 0; c < d; ++c)
      data.features.at(i, c) = (data.features.at(i, c) - mean[c]) / sd[c];
  if (standardize_target)
    for (double& y : data.targets) y = (y - target_mean) / target_sd;
}

namespace {

std::vector<std::string> split_fields(const std::string& line, char delim) {
  std::vector<std::string> fields;
  if (delim == ',') {
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
  } else {
    std::stringstream ss(line);
    std::string f;
    while (ss >> f) fields.push_back(f);
  }
  return fields;
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace

Dataset load_table(const std::string& path, const std::string& target_column,
                   bool classification) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open table: " + path);
  std::string header;
  if (!std::getline(in, header)) throw ConfigError("empty table: " + path);
  const char delim = header.find(',') != std::string::npos ? ',' : ' ';

  std::vector<std::string> names;
  for (const std::string& f : split_fields(header, delim))
    names.push_back(trim(f));
  std::size_t target = names.size();
  for (std::size_t c = 0; c < names.size(); ++c)
    if (names[c] == target_column) target = c;
  if (target == names.size())
    throw ConfigError("table " + path + " has no column named '" +
                      target_column + "'");

  Dataset data;
  data.classification = classification;
  for (std::size_t c = 0; c < names.size(); ++c)
    if (c != target) data.feature_names.push_back(names[c]);

  std::vector<double> values;
  std::string line;
  std::size_t row = 1;
  std::size_t n_rows = 0;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const std::vector<std::string> fields = split_fields(line, delim);
    if (fields.size() != names.size())
      throw ConfigError("table " + path + " row " + std::to_string(row) +
                        ": expected " + std::to_string(names.size()) +
                        " fields, got " + std::to_string(fields.size()));
    for (std::size_t c = 0; c < fields.size(); ++c) {
      const std::string cell = trim(fields[c]);
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(cell, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != cell.size() || cell.empty())
        throw ConfigError("table " + path + " row " + std::to_string(row) +
                          " column " + std::to_string(c + 1) +
                          ": non-numeric cell '" + cell + "'");
      if (c == target) {
        if (classification)
          data.labels.push_back(int(v));
        else
          data.targets.push_back(v);
      } else {
        values.push_back(v);
      }
    }
    ++n_rows;
  }
  if (n_rows == 0) throw ConfigError("table has no data rows: " + path);
  data.features = Tensor({n_rows, names.size() - 1}, std::move(values));
  return data;
}

void export_delimited(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write dataset: " + path);
  out.precision(17);
  const std::size_t d = data.dim();
  for (std::size_t c = 0; c < d; ++c) {
    if (c < data.feature_names.size() && !data.feature_names[c].empty())
      out << data.feature_names[c];
    else
      out << "x" << (c + 1);
    out << ",";
  }
  out << "label\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t c = 0; c < d; ++c) out << data.features.at(i, c) << ",";
    if (data.classification)
      out << data.labels[i];
    else
      out << data.targets[i];
    out << "\n";
  }
}

Batch make_batch(const Dataset& data, std::span<const std::size_t> idx) {
  Batch batch;
  const std::size_t d = data.dim();
  batch.x = Tensor::zeros({idx.size(), d});
  for (std::size_t r = 0; r < idx.size(); ++r)
    for (std::size_t c = 0; c < d; ++c)
      batch.x.at(r, c) = data.features.at(idx[r], c);
  if (data.classification) {
    batch.labels.reserve(idx.size());
    for (std::size_t i : idx) batch.labels.push_back(data.labels[i]);
  } else {
    batch.targets = Tensor::zeros({idx.size(), 1});
    for (std::size_t r = 0; r < idx.size(); ++r)
      batch.targets.data[r] = data.targets[idx[r]];
  }
  return batch;
}

}  // namespace udn

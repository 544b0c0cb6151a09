#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "udn/datasets.hpp"
#include "udn/model.hpp"

namespace udn {

struct TrainConfig {
  int epochs = 4000;
  std::size_t batch_size = 256;
  double lr = 0.005;
  std::vector<double> lr_schedule;  // optional; length must equal epochs
  double lambda_lr_factor = 0.1;
  Optimizer optimizer = Optimizer::adam;
  OptimHyper hyper;
  double prior_alpha = 0.5;
  double lambda_init = 1.0;
  double delta = 0.95;
  std::uint64_t seed = 1;
  enum class Task { classification, regression };
  Task task = Task::classification;
  int eval_every = 10;
  // Loud failure instead of thrashing when the support diverges.
  int max_layers = 256;
  double lambda_guard = 1e4;
  // When set, trains the classical depth-L model through
  // finite_baseline_elbo under the same loop.
  std::optional<int> fixed_depth;

  void validate() const;
  double lr_at(int epoch_index) const;  // 0-based
};

struct EpochLog {
  int epoch = 0;        // 1-based
  double lambda = 0.0;  // epoch-start value that produced m_q (0 when fixed)
  int m_q = 0;
  std::vector<double> q_pmf;  // over depths 1..m_q at epoch start
  // Per-epoch means over minibatches of the objective terms.
  double elbo = 0.0;
  double depth_kl = 0.0;
  double weight_kl = 0.0;  // E_q[sum_{k<=l} kl_k]
  double loglik = 0.0;     // E_q[(n/b) loglik_l]
  std::optional<double> train_metric;  // accuracy or rmse, at eval cadence
  std::optional<double> val_metric;
  std::optional<double> val_loglik;
  double wall_seconds = 0.0;
};

struct RunRecord {
  std::vector<EpochLog> epochs;
  int best_epoch = 0;  // 1-based epoch of the kept checkpoint
  double best_val_metric = 0.0;

  // One JSON object per epoch.
  void write_ndjson(std::ostream& out) const;
};

// Everything except wall-clock fields.
bool deterministic_equal(const RunRecord& a, const RunRecord& b);

struct Metrics {
  double accuracy = std::numeric_limits<double>::quiet_NaN();
  double mean_loglik = std::numeric_limits<double>::quiet_NaN();
  double rmse = std::numeric_limits<double>::quiet_NaN();
};

// Posterior-predictive metrics on a split: accuracy and mean predictive
// log-likelihood for classification, RMSE (plus mean log-likelihood) for
// regression. The depth mixture is capped at created_count.
Metrics evaluate(const VariationalState& state, const NetworkGenerator& gen,
                 const Dataset& data);

// Index of the best metric; ties resolve to the earliest epoch.
std::size_t best_epoch_index(std::span<const double> metric, bool maximize);

struct TrainResult {
  VariationalState state;       // end of training
  VariationalState best_state;  // best validation checkpoint
  RunRecord record;
};

// Dynamic variational inference: per epoch, recompute m(q(lambda)), grow
// the network lazily, then per minibatch evaluate the ELBO in one shared
// forward pass and update lambda and nu_{1..m(q)} (lambda's learning rate
// scaled by lambda_lr_factor). Aborts with NumericError on NaN (with the
// epoch and offending op) and when lambda exceeds lambda_guard.
TrainResult train(const TrainConfig& config, const NetworkGenerator& gen,
                  const Dataset& train_data, const Dataset& valid_data);

}  // namespace udn

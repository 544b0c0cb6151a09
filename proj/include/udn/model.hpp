#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "udn/generator.hpp"
#include "udn/graph.hpp"
#include "udn/param_store.hpp"
#include "udn/truncated_poisson.hpp"

namespace udn {

// One minibatch. `targets` is b x 1 for regression; `labels` holds class
// indices for classification.
struct Batch {
  Tensor x;
  std::vector<int> labels;
  Tensor targets;
};

// lambda (as exp of an unconstrained raw parameter) plus the growable list
// of per-layer weight means. Layers are only ever added; created_count is
// the high-water mark of the support size over the run.
struct VariationalState {
  ParamStore store;
  SlotId lambda_slot = 0;
  double delta = 0.95;
  int created_count = 0;
  std::uint64_t init_seed = 0;
  std::optional<int> fixed_depth;  // point mass: classical finite model
  std::vector<std::string> fingerprints;

  struct LayerSlots {
    SlotId w, b, wo, bo;
  };
  std::vector<LayerSlots> layer_slots;

  double lambda_raw() const { return store.value(lambda_slot).data[0]; }
  double lambda() const;
  TruncatedPoissonDist depth_dist() const;  // shift = 1
  // m(q): number of active depths (fixed_depth for baseline states).
  int support_size() const;

  // Depth mixture actually used for prediction. `cap` further truncates to
  // the first `cap` depths and renormalizes; evaluation passes
  // created_count so a support that outgrew the network mid-epoch still
  // yields a proper mixture.
  struct DepthWeights {
    std::vector<int> depths;
    std::vector<double> probs;
  };
  DepthWeights depth_weights(std::optional<int> cap = {}) const;

  // Slots of layers 1..m plus lambda: the active set of one update.
  std::vector<SlotId> active_slots(int m, bool include_lambda) const;
};

VariationalState make_state(double lambda_init, double delta,
                            double lambda_lr_scale, std::uint64_t seed);

// Instantiates layers created_count+1 .. target_depth from the generator
// with seeded fan-in-uniform initialization. Existing layers are untouched;
// re-growing to the same depth from the same seed replays identical values.
void grow_to(VariationalState& state, const NetworkGenerator& gen,
             int target_depth);

// Shared forward pass: hidden states h_1..h_max computed sequentially (one
// evaluation each), then every output head applied to its hidden state.
struct ForwardAll {
  std::vector<Value> outputs;   // head outputs for depths 1..max_depth
  std::size_t hidden_evals = 0; // dense hidden-layer applications emitted
};
ForwardAll forward_all(Graph& g, const VariationalState& state,
                       const NetworkGenerator& gen, const Tensor& x,
                       int max_depth);

// -0.5 ||nu_k||^2 for one depth (hidden + head parameters), the closed-form
// E_q[log p/q] between unit-variance Gaussians.
Value layer_weight_kl(Graph& g, const VariationalState& state, int ell);
// Sum over depths 1..ell.
Value weight_kl(Graph& g, const VariationalState& state, int ell);

struct ElboBreakdown {
  double total = 0.0;
  double depth_kl = 0.0;                    // E_q[log p(l) - log q(l)]
  std::vector<double> q_pmf;                // q(l) over depths 1..m
  std::vector<double> log_q;                // log q(l)
  std::vector<double> prior_log_pmf;        // log p(l)
  std::vector<double> weight_kl_per_layer;  // -0.5 ||nu_k||^2, k = 1..m
  std::vector<double> loglik_per_depth;     // scaled by n_total/|batch|
  Value total_node;                         // differentiable total
  std::size_t hidden_evals = 0;
};

// The depth-mixture objective over the frozen support {1..m_support}:
//   sum_l q(l)[ log p(l) - log q(l) + sum_{k<=l} kl_k + (n/b) loglik_l ]
// Differentiable in lambda_raw (support frozen) and in all nu_{1..m}.
ElboBreakdown elbo(Graph& g, const VariationalState& state,
                   const NetworkGenerator& gen, const Batch& batch,
                   std::size_t n_total, const DepthPrior& prior,
                   int m_support);

// Objective of the classical depth-L model under the same code paths:
// scaled log-likelihood of Omega_L plus weight_kl(L).
struct FiniteElbo {
  Value total_node;
  double total = 0.0;
  double loglik = 0.0;     // scaled
  double weight_kl = 0.0;
  std::size_t hidden_evals = 0;
};
FiniteElbo finite_baseline_elbo(Graph& g, const VariationalState& state,
                                const NetworkGenerator& gen,
                                const Batch& batch, std::size_t n_total,
                                int depth);

// Posterior-predictive depth ensemble: per-depth head outputs plus the
// mixture weights.
struct PerDepthPrediction {
  std::vector<int> depths;
  std::vector<double> probs;
  std::vector<Tensor> outputs;  // logits (categorical) or means (gaussian)
  HeadKind head = HeadKind::categorical;
  double sigma = 1.0;
};
PerDepthPrediction predict_per_depth(const VariationalState& state,
                                     const NetworkGenerator& gen,
                                     const Tensor& x,
                                     std::optional<int> cap = {});

// Mixture prediction: class probabilities (rows sum to 1) for
// classification, the mixture mean column for regression.
Tensor predict(const VariationalState& state, const NetworkGenerator& gen,
               const Tensor& x, std::optional<int> cap = {});

// Versioned JSON checkpoint: lambda_raw, delta, created_count, per-layer
// fingerprints and all nu tensors. Doubles round-trip exactly, so a
// reloaded state reproduces predict bit-identically.
void save_checkpoint(const VariationalState& state, const std::string& path);
VariationalState load_checkpoint(const std::string& path);

}  // namespace udn

#include "udn/trainer.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>

#include <json.hpp>

#include "udn/errors.hpp"
#include "udn/math_util.hpp"
#include "udn/rng.hpp"

namespace udn {

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("config: epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("config: batch_size must be >= 1");
  if (lr_schedule.empty()) {
    if (!(lr > 0.0)) throw ConfigError("config: lr must be > 0");
  } else {
    if (lr_schedule.size() != std::size_t(epochs))
      throw ConfigError("config: lr schedule length must equal epochs");
    for (double r : lr_schedule)
      if (!(r > 0.0)) throw ConfigError("config: lr schedule must be > 0");
  }
  if (!(lambda_lr_factor > 0.0))
    throw ConfigError("config: lambda_lr_factor must be > 0");
  if (!(prior_alpha > 0.0)) throw ConfigError("config: prior_alpha must be > 0");
  if (!(lambda_init > 0.0)) throw ConfigError("config: lambda_init must be > 0");
  if (!(delta >= 0.5 && delta < 1.0))
    throw ConfigError("config: delta must be in [0.5, 1)");
  if (eval_every < 1) throw ConfigError("config: eval_every must be >= 1");
  if (max_layers < 1) throw ConfigError("config: max_layers must be >= 1");
  if (fixed_depth && *fixed_depth < 1)
    throw ConfigError("config: fixed depth must be >= 1");
}

double TrainConfig::lr_at(int epoch_index) const {
  return lr_schedule.empty() ? lr : lr_schedule[std::size_t(epoch_index)];
}

std::size_t best_epoch_index(std::span<const double> metric, bool maximize) {
  if (metric.empty()) throw ConfigError("best_epoch_index: no checkpoints");
  std::size_t best = 0;
  for (std::size_t i = 1; i < metric.size(); ++i) {
    const bool better =
        maximize ? metric[i] > metric[best] : metric[i] < metric[best];
    if (better) best = i;
  }
  return best;
}

Metrics evaluate(const VariationalState& state, const NetworkGenerator& gen,
                 const Dataset& data) {
  if (data.size() == 0) throw ConfigError("evaluate: empty split");
  Metrics m;
  const PerDepthPrediction pred = predict_per_depth(
      state, gen, data.features, state.created_count);
  const std::size_t n = data.size();
  if (data.classification) {
    const std::size_t classes = pred.outputs.front().cols();
    std::size_t correct = 0;
    double ll = 0.0;
    std::vector<double> probs(classes);
    for (std::size_t i = 0; i < n; ++i) {
      std::fill(probs.begin(), probs.end(), 0.0);
      for (std::size_t c = 0; c < pred.outputs.size(); ++c) {
        const Tensor& logits = pred.outputs[c];
        double mx = logits.at(i, 0);
        for (std::size_t j = 1; j < classes; ++j)
          mx = std::max(mx, logits.at(i, j));
        double z = 0.0;
        for (std::size_t j = 0; j < classes; ++j)
          z += std::exp(logits.at(i, j) - mx);
        for (std::size_t j = 0; j < classes; ++j)
          probs[j] += pred.probs[c] * std::exp(logits.at(i, j) - mx) / z;
      }
      std::size_t argmax = 0;
      for (std::size_t j = 1; j < classes; ++j)
        if (probs[j] > probs[argmax]) argmax = j;
      if (int(argmax) == data.labels[i]) ++correct;
      ll += std::log(std::max(probs[std::size_t(data.labels[i])], 1e-300));
    }
    m.accuracy = double(correct) / double(n);
    m.mean_loglik = ll / double(n);
  } else {
    const double sigma = pred.sigma;
    const double log_norm =
        -0.5 * std::log(6.283185307179586476925286766559 * sigma * sigma);
    double sse = 0.0;
    double ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double mean_mix = 0.0;
      double lse = -std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < pred.outputs.size(); ++c) {
        const double mu = pred.outputs[c].data[i];
        mean_mix += pred.probs[c] * mu;
        const double r = data.targets[i] - mu;
        lse = log_add_exp(lse, std::log(pred.probs[c]) + log_norm -
                                   r * r / (2.0 * sigma * sigma));
      }
      const double res = data.targets[i] - mean_mix;
      sse += res * res;
      ll += lse;
    }
    m.rmse = std::sqrt(sse / double(n));
    m.mean_loglik = ll / double(n);
  }
  return m;
}

namespace {

struct TermAccumulator {
  double elbo = 0, depth_kl = 0, weight_kl = 0, loglik = 0;
  std::size_t batches = 0;

  void add_udn(const ElboBreakdown& bd) {
    elbo += bd.total;
    depth_kl += bd.depth_kl;
    double wkl = 0.0, ll = 0.0, cum = 0.0;
    for (std::size_t j = 0; j < bd.q_pmf.size(); ++j) {
      cum += bd.weight_kl_per_layer[j];
      wkl += bd.q_pmf[j] * cum;
      ll += bd.q_pmf[j] * bd.loglik_per_depth[j];
    }
    weight_kl += wkl;
    loglik += ll;
    ++batches;
  }

  void add_fixed(const FiniteElbo& fe) {
    elbo += fe.total;
    weight_kl += fe.weight_kl;
    loglik += fe.loglik;
    ++batches;
  }

  void store_means(EpochLog& log) const {
    const double b = double(batches);
    log.elbo = elbo / b;
    log.depth_kl = depth_kl / b;
    log.weight_kl = weight_kl / b;
    log.loglik = loglik / b;
  }
};

}  // namespace

TrainResult train(const TrainConfig& config, const NetworkGenerator& gen,
                  const Dataset& train_data, const Dataset& valid_data) {
  config.validate();
  if (train_data.size() == 0) throw ConfigError("train: empty dataset");
  const bool fixed = config.fixed_depth.has_value();
  const bool maximize = config.task == TrainConfig::Task::classification;

  VariationalState state = make_state(config.lambda_init, config.delta,
                                      config.lambda_lr_factor, config.seed);
  if (fixed) {
    state.fixed_depth = config.fixed_depth;
    grow_to(state, gen, *config.fixed_depth);
  }
  const DepthPrior prior(config.prior_alpha);
  const std::size_t n_total = train_data.size();

  std::vector<std::size_t> idx(n_total);
  std::iota(idx.begin(), idx.end(), 0);

  TrainResult result;
  result.record.best_epoch = 0;
  bool have_best = false;

  Graph g;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    EpochLog log;
    log.epoch = epoch;

    int m = state.support_size();
    if (fixed) {
      log.lambda = 0.0;
      log.q_pmf = {1.0};
    } else {
      log.lambda = state.lambda();
      log.q_pmf = state.depth_dist().pmf();
      if (m > config.max_layers)
        throw NumericError("epoch " + std::to_string(epoch) + ": m(q) = " +
                           std::to_string(m) + " exceeds max_layers = " +
                           std::to_string(config.max_layers));
      if (m > state.created_count) grow_to(state, gen, m);
    }
    log.m_q = m;

    const double lr = config.lr_at(epoch - 1);
    Rng shuffle_rng(mix_seed(config.seed, std::uint64_t(epoch), 0xba7c4));
    shuffle(idx, shuffle_rng);

    const std::vector<SlotId> active = state.active_slots(m, !fixed);
    TermAccumulator acc;
    for (std::size_t pos = 0; pos < n_total; pos += config.batch_size) {
      const std::size_t len = std::min(config.batch_size, n_total - pos);
      const Batch batch =
          make_batch(train_data, std::span(idx).subspan(pos, len));
      g.clear();
      try {
        Value loss;
        if (fixed) {
          FiniteElbo fe = finite_baseline_elbo(g, state, gen, batch, n_total,
                                               *config.fixed_depth);
          acc.add_fixed(fe);
          loss = g.scale(fe.total_node, -1.0);
        } else {
          ElboBreakdown bd = elbo(g, state, gen, batch, n_total, prior, m);
          acc.add_udn(bd);
          loss = g.scale(bd.total_node, -1.0);
        }
        state.store.zero_grad();
        g.backward(loss, state.store);
        state.store.step(config.optimizer, lr, config.hyper, active);
      } catch (const NumericError& e) {
        throw NumericError("epoch " + std::to_string(epoch) + ": " + e.what());
      }
      if (!fixed) {
        const double lam = state.lambda();
        // catches divergence above the guard, underflow to exactly 0, NaN
        if (!(lam > 0.0 && lam <= config.lambda_guard))
          throw NumericError("epoch " + std::to_string(epoch) +
                             ": lambda left (0, " +
                             std::to_string(config.lambda_guard) +
                             "]: " + std::to_string(lam));
      }
    }
    acc.store_means(log);

    if (epoch % config.eval_every == 0 || epoch == config.epochs) {
      const Metrics train_m = evaluate(state, gen, train_data);
      const Metrics val_m = evaluate(state, gen, valid_data);
      const double train_metric = maximize ? train_m.accuracy : train_m.rmse;
      const double val_metric = maximize ? val_m.accuracy : val_m.rmse;
      log.train_metric = train_metric;
      log.val_metric = val_metric;
      log.val_loglik = val_m.mean_loglik;
      const bool better =
          !have_best || (maximize ? val_metric > result.record.best_val_metric
                                  : val_metric < result.record.best_val_metric);
      if (better) {
        have_best = true;
        result.record.best_epoch = epoch;
        result.record.best_val_metric = val_metric;
        result.best_state = state;
      }
    }

    log.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    result.record.epochs.push_back(std::move(log));
  }

  result.state = std::move(state);
  if (!have_best) result.best_state = result.state;
  return result;
}

void RunRecord::write_ndjson(std::ostream& out) const {
  using nlohmann::json;
  for (const EpochLog& e : epochs) {
    json j;
    j["epoch"] = e.epoch;
    j["lambda"] = e.lambda;
    j["m_q"] = e.m_q;
    j["q_pmf"] = e.q_pmf;
    j["elbo"] = e.elbo;
    j["depth_kl"] = e.depth_kl;
    j["weight_kl"] = e.weight_kl;
    j["loglik"] = e.loglik;
    j["train_metric"] = e.train_metric ? json(*e.train_metric) : json(nullptr);
    j["val_metric"] = e.val_metric ? json(*e.val_metric) : json(nullptr);
    j["val_loglik"] = e.val_loglik ? json(*e.val_loglik) : json(nullptr);
    j["wall_seconds"] = e.wall_seconds;
    out << j.dump() << "\n";
  }
}

bool deterministic_equal(const RunRecord& a, const RunRecord& b) {
  if (a.epochs.size() != b.epochs.size()) return false;
  if (a.best_epoch != b.best_epoch) return false;
  if (a.best_val_metric != b.best_val_metric) return false;
  for (std::size_t i = 0; i < a.epochs.size(); ++i) {
    const EpochLog& x = a.epochs[i];
    const EpochLog& y = b.epochs[i];
    if (x.epoch != y.epoch || x.lambda != y.lambda || x.m_q != y.m_q ||
        x.q_pmf != y.q_pmf || x.elbo != y.elbo || x.depth_kl != y.depth_kl ||
        x.weight_kl != y.weight_kl || x.loglik != y.loglik ||
        x.train_metric != y.train_metric || x.val_metric != y.val_metric ||
        x.val_loglik != y.val_loglik)
      return false;
  }
  return true;
}

}  // namespace udn

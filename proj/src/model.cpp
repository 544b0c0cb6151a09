#include "udn/model.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "udn/errors.hpp"
#include "udn/rng.hpp"

namespace udn {

double VariationalState::lambda() const { return std::exp(lambda_raw()); }

TruncatedPoissonDist VariationalState::depth_dist() const {
  return TruncatedPoissonDist(lambda(), delta, 1);
}

int VariationalState::support_size() const {
  if (fixed_depth) return *fixed_depth;
  // shift = 1, so m(q) = 1 + quantile = number of active depths.
  return int(depth_dist().support_size());
}

VariationalState::DepthWeights VariationalState::depth_weights(
    std::optional<int> cap) const {
  DepthWeights dw;
  if (fixed_depth) {
    dw.depths = {*fixed_depth};
    dw.probs = {1.0};
    return dw;
  }
  const TruncatedPoissonDist dist = depth_dist();
  std::vector<double> p = dist.pmf();
  std::size_t keep = p.size();
  if (cap && std::size_t(*cap) < keep) keep = std::size_t(*cap);
  if (keep == 0) throw ConfigError("depth_weights: empty mixture");
  double z = 0.0;
  for (std::size_t j = 0; j < keep; ++j) z += p[j];
  for (std::size_t j = 0; j < keep; ++j) {
    dw.depths.push_back(int(j) + 1);
    dw.probs.push_back(p[j] / z);
  }
  return dw;
}

std::vector<SlotId> VariationalState::active_slots(int m,
                                                   bool include_lambda) const {
  if (m > created_count)
    throw ConfigError("active_slots: m exceeds created layers");
  std::vector<SlotId> out;
  if (include_lambda) out.push_back(lambda_slot);
  for (int ell = 1; ell <= m; ++ell) {
    const LayerSlots& s = layer_slots[std::size_t(ell) - 1];
    out.push_back(s.w);
    out.push_back(s.b);
    out.push_back(s.wo);
    out.push_back(s.bo);
  }
  return out;
}

VariationalState make_state(double lambda_init, double delta,
                            double lambda_lr_scale, std::uint64_t seed) {
  if (!(lambda_init > 0.0)) throw ConfigError("lambda_init must be > 0");
  VariationalState state;
  state.delta = delta;
  state.init_seed = seed;
  state.lambda_slot = state.store.create(
      "lambda_raw", Tensor::scalar(std::log(lambda_init)), lambda_lr_scale);
  return state;
}

namespace {

Tensor init_uniform(Rng& rng, std::vector<std::size_t> shape, double bound) {
  Tensor t = Tensor::zeros(std::move(shape));
  for (double& v : t.data) v = rng.uniform(-bound, bound);
  return t;
}

}  // namespace

void grow_to(VariationalState& state, const NetworkGenerator& gen,
             int target_depth) {
  for (int ell = state.created_count + 1; ell <= target_depth; ++ell) {
    const LayerSpec f = gen.hidden(ell);
    const OutputSpec o = gen.output(ell);
    if (ell > 1 && gen.hidden(ell - 1).out_dim != f.in_dim)
      throw ConfigError("generator: layers " + std::to_string(ell - 1) +
                        " and " + std::to_string(ell) + " are not composable");
    if (o.in_dim != f.out_dim)
      throw ConfigError("generator: output head at depth " +
                        std::to_string(ell) + " does not fit its layer");

    Rng rng(mix_seed(state.init_seed, std::uint64_t(ell)));
    const double fb = 1.0 / std::sqrt(double(f.in_dim));
    const double ob = 1.0 / std::sqrt(double(o.in_dim));
    const std::string p = "layer" + std::to_string(ell);
    const std::string h = "head" + std::to_string(ell);
    VariationalState::LayerSlots slots;
    slots.w = state.store.create(p + ".w",
                                 init_uniform(rng, {f.in_dim, f.out_dim}, fb));
    slots.b = state.store.create(p + ".b", init_uniform(rng, {f.out_dim}, fb));
    slots.wo = state.store.create(h + ".w",
                                  init_uniform(rng, {o.in_dim, o.out_dim}, ob));
    slots.bo = state.store.create(h + ".b", init_uniform(rng, {o.out_dim}, ob));
    state.layer_slots.push_back(slots);
    state.fingerprints.push_back(layer_fingerprint(f, o));
    state.created_count = ell;
  }
}

ForwardAll forward_all(Graph& g, const VariationalState& state,
                       const NetworkGenerator& gen, const Tensor& x,
                       int max_depth) {
  if (max_depth < 1) throw ConfigError("forward_all: max_depth must be >= 1");
  if (max_depth > state.created_count)
    throw ConfigError("forward_all: depth " + std::to_string(max_depth) +
                      " exceeds created layers; grow first");
  ForwardAll result;
  Value h = g.constant(x);
  for (int ell = 1; ell <= max_depth; ++ell) {
    const VariationalState::LayerSlots& s =
        state.layer_slots[std::size_t(ell) - 1];
    const LayerSpec spec = gen.hidden(ell);
    h = g.dense(h, g.param(state.store, s.w), g.param(state.store, s.b),
                spec.activation);
    result.hidden_evals += 1;
    result.outputs.push_back(g.dense(h, g.param(state.store, s.wo),
                                     g.param(state.store, s.bo),
                                     Activation::identity));
  }
  return result;
}

Value layer_weight_kl(Graph& g, const VariationalState& state, int ell) {
  if (ell < 1 || ell > state.created_count)
    throw ConfigError("layer_weight_kl: depth out of range");
  const VariationalState::LayerSlots& s =
      state.layer_slots[std::size_t(ell) - 1];
  Value acc;
  for (SlotId slot : {s.w, s.b, s.wo, s.bo}) {
    Value p = g.param(state.store, slot);
    Value ss = g.reduce_sum(g.mul(p, p));
    acc = acc.valid() ? g.add(acc, ss) : ss;
  }
  return g.scale(acc, -0.5);
}

Value weight_kl(Graph& g, const VariationalState& state, int ell) {
  Value acc;
  for (int k = 1; k <= ell; ++k) {
    Value lk = layer_weight_kl(g, state, k);
    acc = acc.valid() ? g.add(acc, lk) : lk;
  }
  if (!acc.valid()) throw ConfigError("weight_kl: depth must be >= 1");
  return acc;
}

namespace {

Value depth_loglik(Graph& g, const OutputSpec& spec, Value head_out,
                   const Batch& batch) {
  if (spec.head == HeadKind::categorical)
    return g.categorical_loglik(head_out, batch.labels);
  return g.gaussian_loglik(head_out, batch.targets, spec.sigma);
}

}  // namespace

ElboBreakdown elbo(Graph& g, const VariationalState& state,
                   const NetworkGenerator& gen, const Batch& batch,
                   std::size_t n_total, const DepthPrior& prior,
                   int m_support) {
  const std::size_t b = batch.x.rank() == 2 ? batch.x.rows() : 0;
  if (b == 0) throw ConfigError("elbo: empty batch");
  if (m_support < 1) throw ConfigError("elbo: support must be non-empty");
  if (m_support > state.created_count)
    throw ConfigError("elbo: m(q) exceeds created layers; grow first");

  const double scale_factor = double(n_total) / double(b);
  Value lambda_node = g.exp(g.param(state.store, state.lambda_slot));
  Value log_q = truncated_poisson_log_pmf_vector(g, lambda_node,
                                                 long(m_support) - 1);
  Value q = g.exp(log_q);

  ElboBreakdown out;
  Tensor prior_vec = Tensor::zeros({std::size_t(m_support)});
  for (int ell = 1; ell <= m_support; ++ell)
    prior_vec.data[std::size_t(ell) - 1] = prior.log_pmf(ell);
  out.prior_log_pmf = prior_vec.data;

  Value depth_kl_node =
      g.reduce_sum(g.mul(q, g.sub(g.constant(prior_vec), log_q)));

  ForwardAll fwd = forward_all(g, state, gen, batch.x, m_support);
  out.hidden_evals = fwd.hidden_evals;

  std::vector<Value> per_depth_terms;
  Value kl_cum;
  for (int ell = 1; ell <= m_support; ++ell) {
    Value lk = layer_weight_kl(g, state, ell);
    kl_cum = kl_cum.valid() ? g.add(kl_cum, lk) : lk;
    Value ll = g.scale(depth_loglik(g, gen.output(ell),
                                    fwd.outputs[std::size_t(ell) - 1], batch),
                       scale_factor);
    per_depth_terms.push_back(g.add(kl_cum, ll));
    out.weight_kl_per_layer.push_back(g.scalar_value(lk));
    out.loglik_per_depth.push_back(g.scalar_value(ll));
  }
  Value terms = g.concat_scalars(per_depth_terms);
  out.total_node = g.add(depth_kl_node, g.reduce_sum(g.mul(q, terms)));

  out.total = g.scalar_value(out.total_node);
  out.depth_kl = g.scalar_value(depth_kl_node);
  out.q_pmf = g.value(q).data;
  out.log_q = g.value(log_q).data;
  return out;
}

FiniteElbo finite_baseline_elbo(Graph& g, const VariationalState& state,
                                const NetworkGenerator& gen,
                                const Batch& batch, std::size_t n_total,
                                int depth) {
  const std::size_t b = batch.x.rank() == 2 ? batch.x.rows() : 0;
  if (b == 0) throw ConfigError("finite_baseline_elbo: empty batch");
  if (depth < 1 || depth > state.created_count)
    throw ConfigError("finite_baseline_elbo: depth out of range");

  FiniteElbo out;
  Value h = g.constant(batch.x);
  for (int ell = 1; ell <= depth; ++ell) {
    const VariationalState::LayerSlots& s =
        state.layer_slots[std::size_t(ell) - 1];
    h = g.dense(h, g.param(state.store, s.w), g.param(state.store, s.b),
                gen.hidden(ell).activation);
    out.hidden_evals += 1;
  }
  const VariationalState::LayerSlots& s =
      state.layer_slots[std::size_t(depth) - 1];
  Value head_out = g.dense(h, g.param(state.store, s.wo),
                           g.param(state.store, s.bo), Activation::identity);
  Value ll = g.scale(depth_loglik(g, gen.output(depth), head_out, batch),
                     double(n_total) / double(b));
  Value kl = weight_kl(g, state, depth);
  out.total_node = g.add(ll, kl);
  out.total = g.scalar_value(out.total_node);
  out.loglik = g.scalar_value(ll);
  out.weight_kl = g.scalar_value(kl);
  return out;
}

PerDepthPrediction predict_per_depth(const VariationalState& state,
                                     const NetworkGenerator& gen,
                                     const Tensor& x, std::optional<int> cap) {
  VariationalState::DepthWeights dw = state.depth_weights(cap);
  const int max_depth = dw.depths.back();
  PerDepthPrediction pred;
  pred.depths = dw.depths;
  pred.probs = dw.probs;
  const OutputSpec spec0 = gen.output(dw.depths.front());
  pred.head = spec0.head;
  pred.sigma = spec0.sigma;
  for (int d : dw.depths)
    if (gen.output(d).head != pred.head)
      throw ConfigError("predict: mixed head kinds across depths");

  Graph g;
  ForwardAll fwd = forward_all(g, state, gen, x, max_depth);
  for (int d : dw.depths)
    pred.outputs.push_back(g.value(fwd.outputs[std::size_t(d) - 1]));
  return pred;
}

Tensor predict(const VariationalState& state, const NetworkGenerator& gen,
               const Tensor& x, std::optional<int> cap) {
  PerDepthPrediction pred = predict_per_depth(state, gen, x, cap);
  const std::size_t rows = x.rows();
  const std::size_t cols = pred.outputs.front().cols();
  Tensor mix = Tensor::zeros({rows, cols});
  if (pred.head == HeadKind::categorical) {
    for (std::size_t c = 0; c < pred.outputs.size(); ++c) {
      const Tensor& logits = pred.outputs[c];
      const double w = pred.probs[c];
      for (std::size_t i = 0; i < rows; ++i) {
        double m = logits.at(i, 0);
        for (std::size_t j = 1; j < cols; ++j)
          m = std::max(m, logits.at(i, j));
        double z = 0.0;
        for (std::size_t j = 0; j < cols; ++j)
          z += std::exp(logits.at(i, j) - m);
        for (std::size_t j = 0; j < cols; ++j)
          mix.at(i, j) += w * std::exp(logits.at(i, j) - m) / z;
      }
    }
  } else {
    for (std::size_t c = 0; c < pred.outputs.size(); ++c)
      for (std::size_t i = 0; i < mix.numel(); ++i)
        mix.data[i] += pred.probs[c] * pred.outputs[c].data[i];
  }
  return mix;
}

namespace {

using nlohmann::json;

json tensor_to_json(const Tensor& t) {
  return json{{"shape", t.shape}, {"data", t.data}};
}

Tensor tensor_from_json(const json& j) {
  return Tensor(j.at("shape").get<std::vector<std::size_t>>(),
                j.at("data").get<std::vector<double>>());
}

}  // namespace

void save_checkpoint(const VariationalState& state, const std::string& path) {
  json j;
  j["format"] = "udn-checkpoint";
  j["version"] = 1;
  j["lambda_raw"] = state.lambda_raw();
  j["lambda_lr_scale"] = state.store.lr_scale(state.lambda_slot);
  j["delta"] = state.delta;
  j["created_count"] = state.created_count;
  j["init_seed"] = state.init_seed;
  if (state.fixed_depth)
    j["fixed_depth"] = *state.fixed_depth;
  else
    j["fixed_depth"] = nullptr;
  j["fingerprints"] = state.fingerprints;
  json layers = json::array();
  for (const auto& s : state.layer_slots) {
    json layer;
    layer["w"] = tensor_to_json(state.store.value(s.w));
    layer["b"] = tensor_to_json(state.store.value(s.b));
    layer["wo"] = tensor_to_json(state.store.value(s.wo));
    layer["bo"] = tensor_to_json(state.store.value(s.bo));
    layers.push_back(std::move(layer));
  }
  j["layers"] = std::move(layers);
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write checkpoint: " + path);
  out << j.dump();
}

VariationalState load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read checkpoint: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed checkpoint: ") + e.what());
  }
  if (j.value("format", "") != "udn-checkpoint" || j.value("version", 0) != 1)
    throw ConfigError("unsupported checkpoint format: " + path);

  VariationalState state;
  state.delta = j.at("delta").get<double>();
  state.init_seed = j.at("init_seed").get<std::uint64_t>();
  if (!j.at("fixed_depth").is_null())
    state.fixed_depth = j.at("fixed_depth").get<int>();
  state.fingerprints = j.at("fingerprints").get<std::vector<std::string>>();
  state.lambda_slot = state.store.create(
      "lambda_raw", Tensor::scalar(j.at("lambda_raw").get<double>()),
      j.at("lambda_lr_scale").get<double>());
  int ell = 0;
  for (const json& layer : j.at("layers")) {
    ++ell;
    const std::string p = "layer" + std::to_string(ell);
    const std::string h = "head" + std::to_string(ell);
    VariationalState::LayerSlots slots;
    slots.w = state.store.create(p + ".w", tensor_from_json(layer.at("w")));
    slots.b = state.store.create(p + ".b", tensor_from_json(layer.at("b")));
    slots.wo = state.store.create(h + ".w", tensor_from_json(layer.at("wo")));
    slots.bo = state.store.create(h + ".b", tensor_from_json(layer.at("bo")));
    state.layer_slots.push_back(slots);
  }
  state.created_count = ell;
  if (std::size_t(ell) != state.fingerprints.size())
    throw ConfigError("checkpoint layer/fingerprint count mismatch");
  return state;
}

}  // namespace udn

#include "udn/graph.hpp"

#include <cmath>

#include "udn/errors.hpp"
#include "udn/kernels.hpp"

namespace udn {

namespace {

void check_finite(const Tensor& t, const char* opname) {
  for (double x : t.data)
    if (!std::isfinite(x))
      throw NumericError(std::string("non-finite value produced by op '") +
                         opname + "'");
}

}  // namespace

const char* Graph::op_name(Op op) {
  switch (op) {
    case Op::leaf_param: return "param";
    case Op::leaf_const: return "const";
    case Op::matmul: return "matmul";
    case Op::add: return "add";
    case Op::sub: return "sub";
    case Op::mul: return "mul";
    case Op::scale: return "scale";
    case Op::add_const: return "add_const";
    case Op::add_rowvec: return "add_rowvec";
    case Op::relu: return "relu";
    case Op::log: return "log";
    case Op::exp: return "exp";
    case Op::log_softmax: return "log_softmax";
    case Op::pick_sum: return "pick_sum";
    case Op::reduce_sum: return "reduce_sum";
    case Op::logsumexp: return "logsumexp";
    case Op::concat: return "concat";
    case Op::index: return "index";
    case Op::sub_bcast: return "sub_bcast";
  }
  return "?";
}

int Graph::push(Node n, const char* opname) {
  check_finite(n.val, opname);
  nodes_.push_back(std::move(n));
  return int(nodes_.size()) - 1;
}

void Graph::clear() {
  nodes_.clear();
  param_cache_.clear();
  backward_done_ = false;
}

double Graph::scalar_value(Value v) const {
  const Tensor& t = value(v);
  if (t.numel() != 1) throw ConfigError("scalar_value on non-scalar node");
  return t.data[0];
}

Value Graph::param(const ParamStore& store, SlotId slot) {
  auto it = param_cache_.find(slot);
  if (it != param_cache_.end()) return Value{it->second};
  Node n;
  n.op = Op::leaf_param;
  n.val = store.value(slot);
  n.slot = int(slot);
  int id = push(std::move(n), "param");
  param_cache_.emplace(slot, id);
  return Value{id};
}

Value Graph::constant(Tensor t) {
  Node n;
  n.op = Op::leaf_const;
  n.val = std::move(t);
  return Value{push(std::move(n), "const")};
}

Value Graph::matmul(Value a, Value b) {
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  if (ta.rank() != 2 || tb.rank() != 2 || ta.cols() != tb.rows())
    throw ConfigError("matmul: dimension mismatch");
  Node n;
  n.op = Op::matmul;
  n.a = a.id;
  n.b = b.id;
  n.val = Tensor::zeros({ta.rows(), tb.cols()});
  kernels::active().gemm_nn(n.val.data.data(), ta.data.data(), tb.data.data(),
                            ta.rows(), ta.cols(), tb.cols());
  return Value{push(std::move(n), "matmul")};
}

Value Graph::add(Value a, Value b) {
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  if (!ta.same_shape(tb)) throw ConfigError("add: shape mismatch");
  Node n;
  n.op = Op::add;
  n.a = a.id;
  n.b = b.id;
  n.val = Tensor::zeros(ta.shape);
  kernels::active().add(n.val.data.data(), ta.data.data(), tb.data.data(),
                        ta.numel());
  return Value{push(std::move(n), "add")};
}

Value Graph::sub(Value a, Value b) {
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  if (!ta.same_shape(tb)) throw ConfigError("sub: shape mismatch");
  Node n;
  n.op = Op::sub;
  n.a = a.id;
  n.b = b.id;
  n.val = Tensor::zeros(ta.shape);
  kernels::active().sub(n.val.data.data(), ta.data.data(), tb.data.data(),
                        ta.numel());
  return Value{push(std::move(n), "sub")};
}

Value Graph::mul(Value a, Value b) {
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  if (!ta.same_shape(tb)) throw ConfigError("mul: shape mismatch");
  Node n;
  n.op = Op::mul;
  n.a = a.id;
  n.b = b.id;
  n.val = Tensor::zeros(ta.shape);
  kernels::active().mul(n.val.data.data(), ta.data.data(), tb.data.data(),
                        ta.numel());
  return Value{push(std::move(n), "mul")};
}

Value Graph::scale(Value a, double c) {
  const Tensor& ta = value(a);
  Node n;
  n.op = Op::scale;
  n.a = a.id;
  n.c = c;
  n.val = Tensor::zeros(ta.shape);
  kernels::active().scale(n.val.data.data(), ta.data.data(), c, ta.numel());
  return Value{push(std::move(n), "scale")};
}

Value Graph::add_const(Value a, double c) {
  const Tensor& ta = value(a);
  Node n;
  n.op = Op::add_const;
  n.a = a.id;
  n.c = c;
  n.val = ta;
  for (double& x : n.val.data) x += c;
  return Value{push(std::move(n), "add_const")};
}

Value Graph::add_rowvec(Value x, Value v) {
  const Tensor& tx = value(x);
  const Tensor& tv = value(v);
  if (tx.rank() != 2 || tv.rank() != 1 || tv.shape[0] != tx.cols())
    throw ConfigError("add_rowvec: dimension mismatch");
  Node n;
  n.op = Op::add_rowvec;
  n.a = x.id;
  n.b = v.id;
  n.val = Tensor::zeros(tx.shape);
  kernels::active().add_rowvec(n.val.data.data(), tx.data.data(),
                               tv.data.data(), tx.rows(), tx.cols());
  return Value{push(std::move(n), "add_rowvec")};
}

Value Graph::relu(Value x) {
  const Tensor& tx = value(x);
  Node n;
  n.op = Op::relu;
  n.a = x.id;
  n.val = Tensor::zeros(tx.shape);
  kernels::active().relu(n.val.data.data(), tx.data.data(), tx.numel());
  return Value{push(std::move(n), "relu")};
}

Value Graph::log(Value x) {
  const Tensor& tx = value(x);
  Node n;
  n.op = Op::log;
  n.a = x.id;
  n.val = Tensor::zeros(tx.shape);
  for (std::size_t i = 0; i < tx.numel(); ++i)
    n.val.data[i] = std::log(tx.data[i]);
  return Value{push(std::move(n), "log")};
}

Value Graph::exp(Value x) {
  const Tensor& tx = value(x);
  Node n;
  n.op = Op::exp;
  n.a = x.id;
  n.val = Tensor::zeros(tx.shape);
  for (std::size_t i = 0; i < tx.numel(); ++i)
    n.val.data[i] = std::exp(tx.data[i]);
  return Value{push(std::move(n), "exp")};
}

Value Graph::log_softmax_rows(Value x) {
  const Tensor& tx = value(x);
  if (tx.rank() != 2) throw ConfigError("log_softmax_rows: rank-2 required");
  const std::size_t rows = tx.rows(), cols = tx.cols();
  Node n;
  n.op = Op::log_softmax;
  n.a = x.id;
  n.val = Tensor::zeros(tx.shape);
  const auto& k = kernels::active();
  for (std::size_t i = 0; i < rows; ++i) {
    const double* xi = tx.data.data() + i * cols;
    double* yi = n.val.data.data() + i * cols;
    const double m = k.max(xi, cols);
    double acc = 0.0;
    for (std::size_t j = 0; j < cols; ++j) acc += std::exp(xi[j] - m);
    const double lse = m + std::log(acc);
    for (std::size_t j = 0; j < cols; ++j) yi[j] = xi[j] - lse;
  }
  return Value{push(std::move(n), "log_softmax")};
}

Value Graph::pick_sum(Value x, std::span<const int> labels) {
  const Tensor& tx = value(x);
  if (tx.rank() != 2 || labels.size() != tx.rows())
    throw ConfigError("pick_sum: labels/rows mismatch");
  const int cols = int(tx.cols());
  Node n;
  n.op = Op::pick_sum;
  n.a = x.id;
  n.ints.assign(labels.begin(), labels.end());
  double acc = 0.0;
  for (std::size_t i = 0; i < tx.rows(); ++i) {
    int l = n.ints[i];
    if (l < 0 || l >= cols)
      throw ConfigError("pick_sum: label out of range");
    acc += tx.at(i, std::size_t(l));
  }
  n.val = Tensor::scalar(acc);
  return Value{push(std::move(n), "pick_sum")};
}

Value Graph::reduce_sum(Value x) {
  const Tensor& tx = value(x);
  Node n;
  n.op = Op::reduce_sum;
  n.a = x.id;
  n.val = Tensor::scalar(kernels::active().sum(tx.data.data(), tx.numel()));
  return Value{push(std::move(n), "reduce_sum")};
}

Value Graph::logsumexp(Value x) {
  const Tensor& tx = value(x);
  if (tx.numel() == 0) throw ConfigError("logsumexp: empty input");
  const double m = kernels::active().max(tx.data.data(), tx.numel());
  double acc = 0.0;
  for (double v : tx.data) acc += std::exp(v - m);
  Node n;
  n.op = Op::logsumexp;
  n.a = x.id;
  n.val = Tensor::scalar(m + std::log(acc));
  return Value{push(std::move(n), "logsumexp")};
}

Value Graph::concat_scalars(std::span<const Value> parts) {
  Node n;
  n.op = Op::concat;
  n.val = Tensor::zeros({parts.size()});
  n.ints.reserve(parts.size());
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const Tensor& t = value(parts[i]);
    if (t.numel() != 1) throw ConfigError("concat_scalars: non-scalar part");
    n.val.data[i] = t.data[0];
    n.ints.push_back(parts[i].id);
  }
  return Value{push(std::move(n), "concat")};
}

Value Graph::index(Value v, std::size_t i) {
  const Tensor& tv = value(v);
  if (i >= tv.numel()) throw ConfigError("index: out of range");
  Node n;
  n.op = Op::index;
  n.a = v.id;
  n.c = double(i);
  n.val = Tensor::scalar(tv.data[i]);
  return Value{push(std::move(n), "index")};
}

Value Graph::sub_bcast(Value vec, Value s) {
  const Tensor& tv = value(vec);
  const Tensor& ts = value(s);
  if (ts.numel() != 1) throw ConfigError("sub_bcast: scalar required");
  Node n;
  n.op = Op::sub_bcast;
  n.a = vec.id;
  n.b = s.id;
  n.val = tv;
  for (double& x : n.val.data) x -= ts.data[0];
  return Value{push(std::move(n), "sub_bcast")};
}

Value Graph::dense(Value input, Value weight, Value bias, Activation act) {
  Value y = add_rowvec(matmul(input, weight), bias);
  return act == Activation::relu ? relu(y) : y;
}

Value Graph::categorical_loglik(Value logits, std::span<const int> labels) {
  return pick_sum(log_softmax_rows(logits), labels);
}

Value Graph::gaussian_loglik(Value mean, const Tensor& targets, double sigma) {
  if (!(sigma > 0.0)) throw ConfigError("gaussian_loglik: sigma must be > 0");
  const Tensor& tm = value(mean);
  if (!tm.same_shape(targets))
    throw ConfigError("gaussian_loglik: shape mismatch");
  const double n = double(tm.numel());
  Value diff = sub(constant(targets), mean);
  Value ss = reduce_sum(mul(diff, diff));
  const double two_pi = 6.283185307179586476925286766559;
  return add_const(scale(ss, -1.0 / (2.0 * sigma * sigma)),
                   -0.5 * n * std::log(two_pi * sigma * sigma));
}

std::vector<double>& Graph::grad_buf(int id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) n.grad.assign(n.val.numel(), 0.0);
  return n.grad;
}

void Graph::backward(Value root, ParamStore& store) {
  if (backward_done_)
    throw ConfigError("backward already ran on this graph; clear() first");
  backward_done_ = true;
  if (!root.valid() || std::size_t(root.id) >= nodes_.size())
    throw ConfigError("backward: invalid root");
  if (value(root).numel() != 1)
    throw ConfigError("backward: root must be a scalar");

  grad_buf(root.id)[0] = 1.0;
  const auto& k = kernels::active();

  for (int id = root.id; id >= 0; --id) {
    Node& n = nodes_[id];
    if (n.grad.empty()) continue;
    const double* g = n.grad.data();
    const std::size_t nn = n.val.numel();
    switch (n.op) {
      case Op::leaf_param:
        k.axpy(store.grad(std::size_t(n.slot)).data.data(), 1.0, g, nn);
        break;
      case Op::leaf_const:
        break;
      case Op::matmul: {
        const Tensor& ta = nodes_[n.a].val;
        const Tensor& tb = nodes_[n.b].val;
        k.gemm_nt_acc(grad_buf(n.a).data(), g, tb.data.data(), ta.rows(),
                      tb.cols(), ta.cols());
        k.gemm_tn_acc(grad_buf(n.b).data(), ta.data.data(), g, ta.rows(),
                      ta.cols(), tb.cols());
        break;
      }
      case Op::add:
        k.axpy(grad_buf(n.a).data(), 1.0, g, nn);
        k.axpy(grad_buf(n.b).data(), 1.0, g, nn);
        break;
      case Op::sub:
        k.axpy(grad_buf(n.a).data(), 1.0, g, nn);
        k.axpy(grad_buf(n.b).data(), -1.0, g, nn);
        break;
      case Op::mul:
        k.mul_acc(grad_buf(n.a).data(), g, nodes_[n.b].val.data.data(), nn);
        k.mul_acc(grad_buf(n.b).data(), g, nodes_[n.a].val.data.data(), nn);
        break;
      case Op::scale:
        k.axpy(grad_buf(n.a).data(), n.c, g, nn);
        break;
      case Op::add_const:
        k.axpy(grad_buf(n.a).data(), 1.0, g, nn);
        break;
      case Op::add_rowvec: {
        k.axpy(grad_buf(n.a).data(), 1.0, g, nn);
        const Tensor& tx = nodes_[n.a].val;
        k.colsum_acc(grad_buf(n.b).data(), g, tx.rows(), tx.cols());
        break;
      }
      case Op::relu:
        k.relu_grad_acc(grad_buf(n.a).data(), nodes_[n.a].val.data.data(), g,
                        nn);
        break;
      case Op::log: {
        std::vector<double>& da = grad_buf(n.a);
        const Tensor& tx = nodes_[n.a].val;
        for (std::size_t i = 0; i < nn; ++i) da[i] += g[i] / tx.data[i];
        break;
      }
      case Op::exp:
        k.mul_acc(grad_buf(n.a).data(), g, n.val.data.data(), nn);
        break;
      case Op::log_softmax: {
        std::vector<double>& dx = grad_buf(n.a);
        const std::size_t rows = n.val.rows(), cols = n.val.cols();
        for (std::size_t i = 0; i < rows; ++i) {
          const double* gi = g + i * cols;
          const double* yi = n.val.data.data() + i * cols;
          double rs = k.sum(gi, cols);
          double* di = dx.data() + i * cols;
          for (std::size_t j = 0; j < cols; ++j)
            di[j] += gi[j] - std::exp(yi[j]) * rs;
        }
        break;
      }
      case Op::pick_sum: {
        std::vector<double>& dx = grad_buf(n.a);
        const std::size_t cols = nodes_[n.a].val.cols();
        for (std::size_t i = 0; i < n.ints.size(); ++i)
          dx[i * cols + std::size_t(n.ints[i])] += g[0];
        break;
      }
      case Op::reduce_sum:
        k.acc_const(grad_buf(n.a).data(), g[0], nodes_[n.a].val.numel());
        break;
      case Op::logsumexp: {
        std::vector<double>& dx = grad_buf(n.a);
        const Tensor& tx = nodes_[n.a].val;
        const double lse = n.val.data[0];
        for (std::size_t i = 0; i < tx.numel(); ++i)
          dx[i] += g[0] * std::exp(tx.data[i] - lse);
        break;
      }
      case Op::concat:
        for (std::size_t i = 0; i < n.ints.size(); ++i)
          grad_buf(n.ints[i])[0] += g[i];
        break;
      case Op::index:
        grad_buf(n.a)[std::size_t(n.c)] += g[0];
        break;
      case Op::sub_bcast: {
        k.axpy(grad_buf(n.a).data(), 1.0, g, nn);
        grad_buf(n.b)[0] -= k.sum(g, nn);
        break;
      }
    }
  }
}

}  // namespace udn

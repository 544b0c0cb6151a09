#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "udn/param_store.hpp"
#include "udn/tensor.hpp"

namespace udn {

enum class Activation { relu, identity };

// Handle to a node on a Graph.
struct Value {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Define-by-run reverse-mode tape. Ops evaluate eagerly as nodes are
// appended; creation order is the topological order, and backward() walks it
// once in reverse. Every op output is checked finite; a NaN/Inf raises
// NumericError naming the op.
//
// Graph construction and backward are single-threaded. Leaves read the
// ParamStore through a const reference, so forward-only evaluation of a
// frozen store is safe from concurrent threads, each with its own Graph.
class Graph {
public:
  // Leaves. param() caches per slot, so a parameter used twice contributes
  // one node and its gradient accumulates naturally.
  Value param(const ParamStore& store, SlotId slot);
  Value constant(Tensor t);
  Value constant_scalar(double v) { return constant(Tensor::scalar(v)); }

  // a[m,k] x b[k,n] -> [m,n]
  Value matmul(Value a, Value b);
  // elementwise, shapes must match
  Value add(Value a, Value b);
  Value sub(Value a, Value b);
  Value mul(Value a, Value b);
  Value scale(Value a, double c);
  Value add_const(Value a, double c);
  // x[m,n] + v[n] broadcast over rows
  Value add_rowvec(Value x, Value v);
  Value relu(Value x);
  Value log(Value x);
  Value exp(Value x);
  // rows of x[m,n] -> log softmax, numerically stabilized
  Value log_softmax_rows(Value x);
  // sum_i x[i, labels[i]] -> scalar; labels[i] must be in [0, n)
  Value pick_sum(Value x, std::span<const int> labels);
  Value reduce_sum(Value x);
  // stable log(sum(exp(x))) over all elements -> scalar
  Value logsumexp(Value x);
  // n scalar nodes -> vector of length n
  Value concat_scalars(std::span<const Value> parts);
  // vector element -> scalar
  Value index(Value v, std::size_t i);
  // vec[i] - s for all i (broadcast subtract of a scalar node)
  Value sub_bcast(Value vec, Value s);

  // Convenience composites.
  // activation(input x weight + bias); input [b,in], weight [in,out], bias [out]
  Value dense(Value input, Value weight, Value bias, Activation act);
  // sum_i log softmax(logits_i)[labels_i]
  Value categorical_loglik(Value logits, std::span<const int> labels);
  // sum_i [ -0.5 log(2 pi sigma^2) - (y_i - mu_i)^2 / (2 sigma^2) ]
  Value gaussian_loglik(Value mean, const Tensor& targets, double sigma);

  // d(root)/d(param) accumulated into store gradients for every param leaf.
  // root must be scalar. Call at most once per built graph.
  void backward(Value root, ParamStore& store);

  const Tensor& value(Value v) const { return nodes_[v.id].val; }
  double scalar_value(Value v) const;
  std::size_t node_count() const { return nodes_.size(); }

  // Drops all nodes (keeps buffers' capacity via vector reuse semantics).
  void clear();

private:
  enum class Op : std::uint8_t {
    leaf_param, leaf_const, matmul, add, sub, mul, scale, add_const,
    add_rowvec, relu, log, exp, log_softmax, pick_sum, reduce_sum,
    logsumexp, concat, index, sub_bcast,
  };

  struct Node {
    Op op;
    int a = -1, b = -1;
    Tensor val;
    std::vector<double> grad;     // allocated on first touch in backward
    double c = 0.0;               // scalar payload (scale/add_const/index pos)
    int slot = -1;                // param leaf
    std::vector<int> ints;        // labels or concat inputs
  };

  int push(Node n, const char* opname);
  std::vector<double>& grad_buf(int id);
  static const char* op_name(Op op);

  std::vector<Node> nodes_;
  std::unordered_map<SlotId, int> param_cache_;
  bool backward_done_ = false;
};

}  // namespace udn

#pragma once

#include <cstddef>
#include <functional>
#include <string>

#include "udn/graph.hpp"

namespace udn {

enum class HeadKind { categorical, gaussian };

// Hidden layer returned by the layer generator for one depth.
struct LayerSpec {
  int depth = 0;
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  Activation activation = Activation::relu;
};

// Output head attached after the hidden layer of the same depth.
struct OutputSpec {
  int depth = 0;
  std::size_t in_dim = 0;
  HeadKind head = HeadKind::categorical;
  std::size_t out_dim = 0;   // classes, or response dimension
  double sigma = 1.0;        // gaussian heads only
};

// The pair (f, o): rules mapping a depth index >= 1 to layer specs.
// Consecutive layers must be composable; this is checked at growth time.
struct NetworkGenerator {
  std::function<LayerSpec(int)> hidden;
  std::function<OutputSpec(int)> output;
};

// Fully connected generator: depth 1 maps the input to `width` units, every
// deeper layer is width -> width with ReLU, and each head is a linear map to
// `out_dim` (softmax classes or gaussian mean).
inline NetworkGenerator mlp_generator(std::size_t input_dim, std::size_t width,
                                      HeadKind head, std::size_t out_dim,
                                      double sigma = 1.0) {
  NetworkGenerator gen;
  gen.hidden = [=](int depth) {
    LayerSpec s;
    s.depth = depth;
    s.in_dim = depth == 1 ? input_dim : width;
    s.out_dim = width;
    s.activation = Activation::relu;
    return s;
  };
  gen.output = [=](int depth) {
    OutputSpec s;
    s.depth = depth;
    s.in_dim = width;
    s.head = head;
    s.out_dim = out_dim;
    s.sigma = sigma;
    return s;
  };
  return gen;
}

inline std::string layer_fingerprint(const LayerSpec& f, const OutputSpec& o) {
  std::string act = f.activation == Activation::relu ? "relu" : "identity";
  std::string head = o.head == HeadKind::categorical ? "cat" : "gauss";
  return "dense:" + std::to_string(f.in_dim) + "x" + std::to_string(f.out_dim) +
         ":" + act + "|" + head + ":" + std::to_string(o.in_dim) + "x" +
         std::to_string(o.out_dim);
}

}  // namespace udn

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "udn/errors.hpp"
#include "udn/tensor.hpp"

namespace udn {

enum class Optimizer { adam, sgd_momentum };

struct OptimHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double momentum = 0.9;
  double weight_decay = 0.0;
};

using SlotId = std::size_t;

// Named parameter slots, each with a gradient accumulator and per-slot
// optimizer state (Adam moments or momentum velocity, created lazily).
// Slots keep independent Adam step counters so parameters activated late
// bias-correct from their own first step.
class ParamStore {
public:
  SlotId create(const std::string& name, Tensor init, double lr_scale = 1.0);

  bool contains(const std::string& name) const {
    return index_.count(name) != 0;
  }
  SlotId id(const std::string& name) const;
  std::size_t size() const { return slots_.size(); }

  const std::string& name(SlotId s) const { return slots_[s].name; }
  Tensor& value(SlotId s) { return slots_[s].value; }
  const Tensor& value(SlotId s) const { return slots_[s].value; }
  Tensor& grad(SlotId s) { return slots_[s].grad; }
  const Tensor& grad(SlotId s) const { return slots_[s].grad; }
  double lr_scale(SlotId s) const { return slots_[s].lr_scale; }

  // Resets every gradient accumulator to exactly 0.
  void zero_grad();

  // Applies one optimizer step to the given slots only; others are left
  // untouched (values, gradients and optimizer state alike).
  void step(Optimizer opt, double lr, const OptimHyper& hyper,
            std::span<const SlotId> active);

private:
  struct Slot {
    std::string name;
    Tensor value;
    Tensor grad;
    Tensor m, v;        // Adam moments
    Tensor velocity;    // SGD momentum
    std::int64_t steps = 0;
    double lr_scale = 1.0;
  };

  std::vector<Slot> slots_;
  std::unordered_map<std::string, SlotId> index_;
};

}  // namespace udn

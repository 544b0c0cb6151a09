#include "udn/param_store.hpp"

#include <cmath>

namespace udn {

SlotId ParamStore::create(const std::string& name, Tensor init,
                          double lr_scale) {
  if (contains(name)) throw ConfigError("duplicate parameter slot: " + name);
  Slot slot;
  slot.name = name;
  slot.grad = Tensor::zeros(init.shape);
  slot.value = std::move(init);
  slot.lr_scale = lr_scale;
  slots_.push_back(std::move(slot));
  SlotId id = slots_.size() - 1;
  index_.emplace(name, id);
  return id;
}

SlotId ParamStore::id(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ConfigError("unknown parameter slot: " + name);
  return it->second;
}

void ParamStore::zero_grad() {
  for (Slot& s : slots_)
    for (double& g : s.grad.data) g = 0.0;
}

void ParamStore::step(Optimizer opt, double lr, const OptimHyper& hyper,
                      std::span<const SlotId> active) {
  if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
  for (SlotId id : active) {
    Slot& s = slots_[id];
    const double slot_lr = lr * s.lr_scale;
    const std::size_t n = s.value.numel();
    switch (opt) {
      case Optimizer::adam: {
        if (s.m.numel() != n) {
          s.m = Tensor::zeros(s.value.shape);
          s.v = Tensor::zeros(s.value.shape);
        }
        s.steps += 1;
        const double bc1 = 1.0 - std::pow(hyper.beta1, double(s.steps));
        const double bc2 = 1.0 - std::pow(hyper.beta2, double(s.steps));
        for (std::size_t i = 0; i < n; ++i) {
          double g = s.grad.data[i] + hyper.weight_decay * s.value.data[i];
          s.m.data[i] = hyper.beta1 * s.m.data[i] + (1.0 - hyper.beta1) * g;
          s.v.data[i] = hyper.beta2 * s.v.data[i] + (1.0 - hyper.beta2) * g * g;
          double mhat = s.m.data[i] / bc1;
          double vhat = s.v.data[i] / bc2;
          s.value.data[i] -= slot_lr * mhat / (std::sqrt(vhat) + hyper.eps);
        }
        break;
      }
      case Optimizer::sgd_momentum: {
        if (s.velocity.numel() != n) s.velocity = Tensor::zeros(s.value.shape);
        s.steps += 1;
        for (std::size_t i = 0; i < n; ++i) {
          double g = s.grad.data[i] + hyper.weight_decay * s.value.data[i];
          s.velocity.data[i] = hyper.momentum * s.velocity.data[i] + g;
          s.value.data[i] -= slot_lr * s.velocity.data[i];
        }
        break;
      }
    }
  }
}

}  // namespace udn

#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "ssgan/tensor.hpp"

namespace ssgan {

template <typename T>
struct AdamConfig {
  T lr = T(2e-4);
  T beta1 = T(0.5);
  T beta2 = T(0.999);
  T eps = T(1e-8);
};

// ADAM with bias correction. Moment slots are created lazily per parameter
// name. A parameter whose gradient is entirely zero is skipped for that
// step (its moments and value stay put), so steps with no gradient signal
// are exact no-ops on the parameters; the shared step counter still
// advances once per step() call.
template <typename T>
class Adam {
 public:
  Adam() = default;
  explicit Adam(AdamConfig<T> cfg) : cfg_(cfg) {}

  const AdamConfig<T>& config() const { return cfg_; }
  std::int64_t step_count() const { return t_; }

  void step(const std::map<std::string, Tensor<T>*>& params,
            const std::map<std::string, Tensor<T>>& grads) {
    ++t_;
    const T bc1 = T(1) - std::pow(cfg_.beta1, static_cast<T>(t_));
    const T bc2 = T(1) - std::pow(cfg_.beta2, static_cast<T>(t_));
    for (const auto& [name, param] : params) {
      auto git = grads.find(name);
      check(git != grads.end(), Error::Kind::value, "adam: no gradient supplied for ", name);
      const Tensor<T>& g = git->second;
      check(g.shape() == param->shape(), Error::Kind::shape, "adam: gradient shape ",
            shape_str(g.shape()), " does not match parameter ", name, " ",
            shape_str(param->shape()));
      bool all_zero = true;
      for (std::size_t i = 0; i < g.size(); ++i)
        if (g[i] != T(0)) {
          all_zero = false;
          break;
        }
      if (all_zero) continue;
      Slot& slot = slot_for(name, param->shape());
      T* p = param->data();
      T* m = slot.m.data();
      T* v = slot.v.data();
      for (std::size_t i = 0; i < g.size(); ++i) {
        m[i] = cfg_.beta1 * m[i] + (T(1) - cfg_.beta1) * g[i];
        v[i] = cfg_.beta2 * v[i] + (T(1) - cfg_.beta2) * g[i] * g[i];
        const T m_hat = m[i] / bc1;
        const T v_hat = v[i] / bc2;
        p[i] -= cfg_.lr * m_hat / (std::sqrt(v_hat) + cfg_.eps);
      }
    }
  }

  // Checkpoint access: moment tensors keyed by parameter name.
  struct Slot {
    Tensor<T> m, v;
  };

  const std::map<std::string, Slot>& slots() const { return slots_; }

  void restore(std::int64_t t, std::map<std::string, Slot> slots) {
    t_ = t;
    slots_ = std::move(slots);
  }

 private:
  Slot& slot_for(const std::string& name, const Shape& shape) {
    auto it = slots_.find(name);
    if (it == slots_.end())
      it = slots_.emplace(name, Slot{Tensor<T>(shape), Tensor<T>(shape)}).first;
    return it->second;
  }

  AdamConfig<T> cfg_;
  std::map<std::string, Slot> slots_;
  std::int64_t t_ = 0;
};

}  // namespace ssgan

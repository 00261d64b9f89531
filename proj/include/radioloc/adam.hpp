#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "radioloc/errors.hpp"
#include "radioloc/tensor.hpp"

namespace radioloc {

// Adam with bias correction (Kingma & Ba). Moments are zero-initialized and
// the step count increments by exactly one per step; a parameter with a zero
// gradient is left unchanged.
template <typename T>
class AdamOptimizer {
 public:
  explicit AdamOptimizer(std::vector<Tensor<T>> params, T beta1 = T(0.9),
                         T beta2 = T(0.999), T eps = T(1e-8))
      : params_(std::move(params)), beta1_(beta1), beta2_(beta2), eps_(eps) {
    m_.resize(params_.size());
    v_.resize(params_.size());
    for (std::size_t i = 0; i < params_.size(); ++i) {
      m_[i].assign(params_[i].size(), T(0));
      v_[i].assign(params_[i].size(), T(0));
    }
  }

  void zero_grad() {
    for (auto& p : params_) p.zero_grad();
  }

  void step(T lr) {
    if (lr <= T(0)) throw config_error("adam: learning rate must be positive");
    ++step_count_;
    const T bc1 = T(1) - std::pow(beta1_, static_cast<T>(step_count_));
    const T bc2 = T(1) - std::pow(beta2_, static_cast<T>(step_count_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
      auto& p = params_[i].data();
      const auto& g = params_[i].grad();
      auto& m = m_[i];
      auto& v = v_[i];
      for (std::size_t j = 0; j < p.size(); ++j) {
        m[j] = beta1_ * m[j] + (T(1) - beta1_) * g[j];
        v[j] = beta2_ * v[j] + (T(1) - beta2_) * g[j] * g[j];
        const T m_hat = m[j] / bc1;
        const T v_hat = v[j] / bc2;
        p[j] -= lr * m_hat / (std::sqrt(v_hat) + eps_);
      }
    }
  }

  long step_count() const { return step_count_; }

 private:
  std::vector<Tensor<T>> params_;
  std::vector<std::vector<T>> m_, v_;
  long step_count_ = 0;
  T beta1_, beta2_, eps_;
};

}  // namespace radioloc

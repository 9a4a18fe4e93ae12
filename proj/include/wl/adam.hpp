#pragma once

#include <cstdint>
#include <cmath>
#include <vector>

#include "wl/common.hpp"
#include "wl/tensor.hpp"

namespace wl {

/// Adam with bias correction. One instance owns the update state (first/second
/// moment estimates and a shared step counter) for a fixed parameter list.
template <typename T>
class Adam {
 public:
  struct Config {
    double lr = 1e-4;
    double beta1 = 0.5;
    double beta2 = 0.999;
    double eps = 1e-8;
  };

  Adam(std::vector<Tensor<T>> params, Config cfg)
      : params_(std::move(params)), cfg_(cfg) {
    if (cfg_.lr <= 0.0) throw ValueError("Adam learning rate must be positive");
    if (cfg_.beta1 < 0.0 || cfg_.beta1 >= 1.0 || cfg_.beta2 < 0.0 ||
        cfg_.beta2 >= 1.0)
      throw ValueError("Adam betas must lie in [0, 1)");
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const auto& p : params_) {
      m_.emplace_back(p.numel(), T(0));
      v_.emplace_back(p.numel(), T(0));
    }
  }

  /// Applies one update from the gradients currently stored on the
  /// parameters. Parameters whose gradient buffer was never touched are
  /// treated as having zero gradient (their moments still decay).
  void step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
      auto data = params_[i].data();
      auto grad = params_[i].grad();
      auto& m = m_[i];
      auto& v = v_[i];
      for (std::size_t j = 0; j < data.size(); ++j) {
        const double g = static_cast<double>(grad[j]);
        const double mj =
            cfg_.beta1 * static_cast<double>(m[j]) + (1.0 - cfg_.beta1) * g;
        const double vj = cfg_.beta2 * static_cast<double>(v[j]) +
                          (1.0 - cfg_.beta2) * g * g;
        m[j] = static_cast<T>(mj);
        v[j] = static_cast<T>(vj);
        data[j] -= static_cast<T>(cfg_.lr * (mj / bc1) /
                                  (std::sqrt(vj / bc2) + cfg_.eps));
      }
    }
  }

  void zero_grad() {
    for (auto& p : params_) p.zero_grad();
  }

  std::int64_t step_count() const { return t_; }
  void set_step_count(std::int64_t t) { t_ = t; }

  const std::vector<Tensor<T>>& params() const { return params_; }
  std::vector<std::vector<T>>& moment1() { return m_; }
  std::vector<std::vector<T>>& moment2() { return v_; }
  const std::vector<std::vector<T>>& moment1() const { return m_; }
  const std::vector<std::vector<T>>& moment2() const { return v_; }
  const Config& config() const { return cfg_; }

 private:
  std::vector<Tensor<T>> params_;
  std::vector<std::vector<T>> m_, v_;
  Config cfg_;
  std::int64_t t_ = 0;
};

}  // namespace wl

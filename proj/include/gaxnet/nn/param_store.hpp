#pragma once

#include "gaxnet/types.hpp"

#include <cstdint>
#include <map>
#include <random>
#include <string>

namespace gaxnet::nn {

using Rng = std::mt19937_64;

template <typename Scalar>
struct Param {
  MatrixX<Scalar> value;
  MatrixX<Scalar> grad;
  MatrixX<Scalar> moment1;
  MatrixX<Scalar> moment2;
};

struct AdamConfig {
  double learning_rate = 8e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Named parameters with gradients and adaptive-moment state. Iteration is
// always in name order, so updates and checkpoints are reproducible.
//
// Element addresses are stable for the lifetime of the store (std::map
// nodes), which layer views rely on; copies must be re-bound.
template <typename Scalar>
class BasicParamStore {
 public:
  using ParamType = Param<Scalar>;

  /// Adds a rows x cols parameter drawn uniformly from [-bound, bound].
  ParamType& add(const std::string& name, Index rows, Index cols, Scalar bound, Rng& rng) {
    if (params_.count(name)) throw ConfigError("duplicate parameter '" + name + "'");
    std::uniform_real_distribution<double> dist(-double(bound), double(bound));
    ParamType p;
    p.value.resize(rows, cols);
    for (Index j = 0; j < cols; ++j)
      for (Index i = 0; i < rows; ++i) p.value(i, j) = Scalar(dist(rng));
    p.grad = MatrixX<Scalar>::Zero(rows, cols);
    p.moment1 = MatrixX<Scalar>::Zero(rows, cols);
    p.moment2 = MatrixX<Scalar>::Zero(rows, cols);
    return params_.emplace(name, std::move(p)).first->second;
  }

  ParamType& at(const std::string& name) {
    auto it = params_.find(name);
    if (it == params_.end()) throw ConfigError("unknown parameter '" + name + "'");
    return it->second;
  }
  const ParamType& at(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw ConfigError("unknown parameter '" + name + "'");
    return it->second;
  }
  bool contains(const std::string& name) const { return params_.count(name) != 0; }

  void zero_grad() {
    for (auto& [_, p] : params_) p.grad.setZero();
  }

  /// Overwrites values (not moments) from a store with identical names/shapes.
  void copy_values_from(const BasicParamStore& other) {
    for (auto& [name, p] : params_) {
      const auto& src = other.at(name);
      if (src.value.rows() != p.value.rows() || src.value.cols() != p.value.cols())
        throw ShapeError("copy_values_from: shape mismatch for '" + name + "'");
      p.value = src.value;
    }
  }

  template <typename F>
  void for_each(F&& f) {
    for (auto& [name, p] : params_) f(name, p);
  }
  template <typename F>
  void for_each(F&& f) const {
    for (const auto& [name, p] : params_) f(name, p);
  }

  std::size_t size() const { return params_.size(); }
  std::int64_t steps() const { return steps_; }
  std::int64_t parameter_count() const {
    std::int64_t n = 0;
    for (const auto& [_, p] : params_) n += p.value.size();
    return n;
  }

  /// One adaptive-moment update over every parameter, then zero the
  /// gradients. Throws NumericError naming the first non-finite gradient.
  void adam_step(const AdamConfig& cfg) {
    for (const auto& [name, p] : params_) {
      if (!p.grad.allFinite()) throw NumericError("non-finite gradient in parameter '" + name + "'");
    }
    ++steps_;
    const Scalar b1 = Scalar(cfg.beta1), b2 = Scalar(cfg.beta2);
    const Scalar bias1 = Scalar(1) - Scalar(std::pow(cfg.beta1, double(steps_)));
    const Scalar bias2 = Scalar(1) - Scalar(std::pow(cfg.beta2, double(steps_)));
    const Scalar lr = Scalar(cfg.learning_rate), eps = Scalar(cfg.epsilon);
    for (auto& [_, p] : params_) {
      p.moment1 = b1 * p.moment1 + (Scalar(1) - b1) * p.grad;
      p.moment2 = b2 * p.moment2 + (Scalar(1) - b2) * p.grad.cwiseAbs2();
      p.value.array() -= lr * (p.moment1.array() / bias1) / ((p.moment2.array() / bias2).sqrt() + eps);
      p.grad.setZero();
    }
  }

  Scalar grad_squared_norm() const {
    Scalar sq = 0;
    for (const auto& [_, p] : params_) sq += p.grad.squaredNorm();
    return sq;
  }
  void scale_grad(Scalar factor) {
    for (auto& [_, p] : params_) p.grad *= factor;
  }

 private:
  std::map<std::string, ParamType> params_;
  std::int64_t steps_ = 0;
};

using ParamStore = BasicParamStore<double>;

}  // namespace gaxnet::nn

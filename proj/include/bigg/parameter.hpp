#pragma once

#include "bigg/tensor.hpp"

#include <cmath>
#include <deque>
#include <string>
#include <unordered_map>

namespace bigg {

template <typename Scalar>
struct Parameter {
  std::string name;
  Tensor<Scalar> value;
  Tensor<Scalar> grad;
  Tensor<Scalar> adam_m;
  Tensor<Scalar> adam_v;
  std::int64_t step_count = 0;

  Parameter() = default;
  Parameter(std::string n, Tensor<Scalar> v)
      : name(std::move(n)),
        value(std::move(v)),
        grad(Tensor<Scalar>::Zero(value.rows(), value.cols())),
        adam_m(Tensor<Scalar>::Zero(value.rows(), value.cols())),
        adam_v(Tensor<Scalar>::Zero(value.rows(), value.cols())) {}

  Index size() const { return value.size(); }
  void zero_grad() { grad.setZero(); }
};

/// Named, insertion-ordered parameter collection. Storage is a deque so
/// references handed to a Tape stay valid while parameters are appended.
template <typename Scalar>
class ParamSet {
 public:
  using Handle = std::size_t;

  Handle add(std::string name, Tensor<Scalar> value) {
    if (by_name_.count(name) != 0) {
      throw Error("duplicate parameter name '" + name + "'");
    }
    by_name_.emplace(name, params_.size());
    params_.emplace_back(std::move(name), std::move(value));
    return params_.size() - 1;
  }

  Parameter<Scalar>& operator[](Handle h) { return params_[h]; }
  const Parameter<Scalar>& operator[](Handle h) const { return params_[h]; }

  Parameter<Scalar>& at(const std::string& name) {
    auto it = by_name_.find(name);
    if (it == by_name_.end()) throw Error("unknown parameter '" + name + "'");
    return params_[it->second];
  }
  const Parameter<Scalar>& at(const std::string& name) const {
    auto it = by_name_.find(name);
    if (it == by_name_.end()) throw Error("unknown parameter '" + name + "'");
    return params_[it->second];
  }
  bool contains(const std::string& name) const { return by_name_.count(name) != 0; }

  std::size_t size() const { return params_.size(); }
  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  Index total_size() const {
    Index n = 0;
    for (const auto& p : params_) n += p.size();
    return n;
  }

  void zero_grad() {
    for (auto& p : params_) p.zero_grad();
  }

  /// Values only; optimizer state is reset in the result.
  template <typename Other>
  ParamSet<Other> cast() const {
    ParamSet<Other> out;
    for (const auto& p : params_) out.add(p.name, p.value.template cast<Other>());
    return out;
  }

 private:
  std::deque<Parameter<Scalar>> params_;
  std::unordered_map<std::string, Handle> by_name_;
};

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Bias-corrected Adam. Consumes and zeroes the accumulated gradients.
template <typename Scalar>
void adam_step(ParamSet<Scalar>& params, const AdamConfig& cfg) {
  for (auto& p : params) {
    if (!p.grad.allFinite()) {
      throw NumericError("non-finite gradient in parameter '" + p.name + "'");
    }
  }
  const auto b1 = static_cast<Scalar>(cfg.beta1);
  const auto b2 = static_cast<Scalar>(cfg.beta2);
  for (auto& p : params) {
    p.step_count += 1;
    const auto t = static_cast<double>(p.step_count);
    const auto c1 = static_cast<Scalar>(1.0 - std::pow(cfg.beta1, t));
    const auto c2 = static_cast<Scalar>(1.0 - std::pow(cfg.beta2, t));
    const auto lr = static_cast<Scalar>(cfg.learning_rate);
    const auto eps = static_cast<Scalar>(cfg.epsilon);
    p.adam_m = b1 * p.adam_m + (Scalar(1) - b1) * p.grad;
    p.adam_v = b2 * p.adam_v + (Scalar(1) - b2) * p.grad.cwiseProduct(p.grad);
    const Scalar* m = p.adam_m.data();
    const Scalar* v = p.adam_v.data();
    Scalar* w = p.value.data();
    for (Index i = 0; i < p.value.size(); ++i) {
      const Scalar m_hat = m[i] / c1;
      const Scalar v_hat = v[i] / c2;
      w[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
    }
    p.zero_grad();
  }
}

}  // namespace bigg

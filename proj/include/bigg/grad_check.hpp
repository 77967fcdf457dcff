#pragma once

#include "bigg/tape.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <optional>
#include <string>

namespace bigg {

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::string offending_parameter;
  Index offending_coordinate = -1;
  double offending_analytic = 0.0;
  double offending_numeric = 0.0;
  std::size_t coordinates_checked = 0;
  bool passed = false;
};

/// Builds a scalar loss on the supplied tape from the current parameter values.
using LossClosure = std::function<Var<double>(Tape<double>&)>;

/// Compares reverse-mode gradients against central differences over every
/// coordinate of every parameter. Relative error is |a - n| / max(|a|, |n|, floor);
/// the floor sits above the central-difference roundoff of near-zero gradients.
inline GradCheckReport grad_check(const LossClosure& forward, ParamSet<double>& params, double epsilon,
                                  double tolerance, std::optional<Primitive> corrupt = std::nullopt,
                                  double floor = 1e-6) {
  auto evaluate = [&]() {
    Tape<double> tape(false);
    return forward(tape).value()(0, 0);
  };

  const double first = evaluate();
  const double second = evaluate();
  if (std::memcmp(&first, &second, sizeof(double)) != 0) {
    throw Error("grad_check: forward is not deterministic (" + std::to_string(first) + " vs " +
                std::to_string(second) + ")");
  }

  params.zero_grad();
  {
    Tape<double> tape;
    if (corrupt) tape.corrupt_backward_for_testing(*corrupt);
    auto loss = forward(tape);
    tape.backward(loss);
  }

  GradCheckReport report;
  for (auto& p : params) {
    double* w = p.value.data();
    for (Index i = 0; i < p.value.size(); ++i) {
      const double saved = w[i];
      w[i] = saved + epsilon;
      const double up = evaluate();
      w[i] = saved - epsilon;
      const double down = evaluate();
      w[i] = saved;
      const double numeric = (up - down) / (2.0 * epsilon);
      const double analytic = p.grad.data()[i];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
      const double rel = std::abs(analytic - numeric) / denom;
      ++report.coordinates_checked;
      if (rel > report.max_relative_error) {
        report.max_relative_error = rel;
        report.offending_parameter = p.name;
        report.offending_coordinate = i;
        report.offending_analytic = analytic;
        report.offending_numeric = numeric;
      }
    }
  }
  params.zero_grad();
  report.passed = report.max_relative_error < tolerance;
  return report;
}

}  // namespace bigg

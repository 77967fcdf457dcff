#pragma once

#include "bigg/estimator.hpp"

#include <chrono>

namespace bigg {

/// max(est, actual) / min(est, actual).
double q_error(double estimate, double actual);

/// Pearson correlation of average-tie ranks.
double spearman(std::span<const double> xs, std::span<const double> ys);

/// Average ranks (1-based); tied values share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> values);

struct Candidate {
  double predicted_ms = 0.0;
  double actual_ms = 0.0;
};

/// Actual latency of the plan with the lowest prediction (lowest index on
/// ties) over the best actual latency in the set.
double plan_suboptimality(std::span<const Candidate> candidates);

struct QuantileReport {
  double median = 0.0, p90 = 0.0, p99 = 0.0;
  double top50_mean = 0.0, top90_mean = 0.0, top99_mean = 0.0;
};

/// Nearest-rank value at ascending index ceil(q N) - 1.
double nearest_rank(std::span<const double> sorted, double q);
/// Mean of the ceil(q N) smallest values.
double lower_mean(std::span<const double> sorted, double q);
QuantileReport quantile_report(std::span<const double> values);
Json quantile_report_to_json(const QuantileReport& r);

struct TimingStats {
  double mean_ms = 0.0;  // per plan
  double std_ms = 0.0;
  int repetitions = 0;
};

/// Wall-clock of forward passes over already-featurized plans, one plan per
/// pass, after `warmup` untimed repetitions.
template <typename Scalar>
TimingStats time_inference(CostModel<Scalar>& model, std::span<const PlanGraph> graphs, int repetitions,
                           int warmup = 1) {
  if (repetitions <= 0) throw ValidationError("time_inference: repetitions must be positive");
  if (graphs.empty()) throw ValidationError("time_inference: no plans");
  std::vector<BatchLayout> layouts;
  for (const auto& g : graphs) layouts.push_back(make_batch(g));
  volatile double sink = 0.0;
  auto run = [&] {
    for (const auto& layout : layouts) {
      Tape<Scalar> tape(false);
      sink = sink + static_cast<double>(model.forward(tape, layout, nullptr).value()(0, 0));
    }
  };
  for (int w = 0; w < warmup; ++w) run();
  std::vector<double> per_plan;
  for (int r = 0; r < repetitions; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    run();
    const std::chrono::duration<double, std::milli> dt = std::chrono::steady_clock::now() - t0;
    per_plan.push_back(dt.count() / static_cast<double>(layouts.size()));
  }
  TimingStats s;
  s.repetitions = repetitions;
  for (double v : per_plan) s.mean_ms += v;
  s.mean_ms /= static_cast<double>(per_plan.size());
  for (double v : per_plan) s.std_ms += (v - s.mean_ms) * (v - s.mean_ms);
  s.std_ms = std::sqrt(s.std_ms / static_cast<double>(per_plan.size()));
  return s;
}

/// One results row: a model's accuracy over a test split.
struct EvalReport {
  std::string tree_model;
  std::string edge_direction;
  std::vector<double> q_errors;
  QuantileReport q;
  double spearman = 0.0;
  std::optional<TimingStats> timing;
};

EvalReport evaluate(std::string tree_model, std::string edge_direction, std::span<const double> predicted_ms,
                    std::span<const double> actual_ms);

/// CSV header matching eval_csv_row.
std::string eval_csv_header();
std::string eval_csv_row(const EvalReport& r);
Json eval_report_to_json(const EvalReport& r);

}  // namespace bigg

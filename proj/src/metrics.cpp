#include "bigg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace bigg {

double q_error(double estimate, double actual) {
  if (!(estimate > 0.0) || !(actual > 0.0)) {
    throw ValidationError("q_error: latencies must be positive (got " + std::to_string(estimate) + ", " +
                          std::to_string(actual) + ")");
  }
  return std::max(estimate, actual) / std::min(estimate, actual);
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && values[idx[j + 1]] == values[idx[i]]) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
    i = j + 1;
  }
  return ranks;
}

double spearman(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw ShapeError("spearman: lengths differ");
  if (xs.size() < 2) throw ValidationError("spearman: need at least 2 values");
  const auto rx = average_ranks(xs);
  const auto ry = average_ranks(ys);
  const double n = static_cast<double>(rx.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw ValidationError("spearman: undefined for a constant vector");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double plan_suboptimality(std::span<const Candidate> candidates) {
  if (candidates.empty()) throw ValidationError("plan_suboptimality: empty candidate set");
  std::size_t chosen = 0;
  double best_actual = candidates[0].actual_ms;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (!(candidates[i].actual_ms > 0.0)) throw ValidationError("plan_suboptimality: actual latency must be positive");
    if (candidates[i].predicted_ms < candidates[chosen].predicted_ms) chosen = i;
    best_actual = std::min(best_actual, candidates[i].actual_ms);
  }
  return candidates[chosen].actual_ms / best_actual;
}

namespace {

std::size_t rank_count(std::size_t n, double q) {
  const auto k = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n) - 1e-9));
  return std::clamp<std::size_t>(k, 1, n);
}

}  // namespace

double nearest_rank(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw ValidationError("quantile of an empty vector");
  return sorted[rank_count(sorted.size(), q) - 1];
}

double lower_mean(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw ValidationError("mean of an empty vector");
  const auto k = rank_count(sorted.size(), q);
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) total += sorted[i];
  return total / static_cast<double>(k);
}

QuantileReport quantile_report(std::span<const double> values) {
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  return QuantileReport{nearest_rank(v, 0.5),  nearest_rank(v, 0.9),  nearest_rank(v, 0.99),
                        lower_mean(v, 0.5), lower_mean(v, 0.9), lower_mean(v, 0.99)};
}

Json quantile_report_to_json(const QuantileReport& r) {
  return Json{{"median", r.median},         {"p90", r.p90},
              {"p99", r.p99},               {"top50_mean", r.top50_mean},
              {"top90_mean", r.top90_mean}, {"top99_mean", r.top99_mean}};
}

EvalReport evaluate(std::string tree_model, std::string edge_direction, std::span<const double> predicted_ms,
                    std::span<const double> actual_ms) {
  if (predicted_ms.size() != actual_ms.size()) throw ShapeError("evaluate: prediction/label count mismatch");
  EvalReport r;
  r.tree_model = std::move(tree_model);
  r.edge_direction = std::move(edge_direction);
  for (std::size_t i = 0; i < actual_ms.size(); ++i) r.q_errors.push_back(q_error(predicted_ms[i], actual_ms[i]));
  r.q = quantile_report(r.q_errors);
  r.spearman = spearman(predicted_ms, actual_ms);
  return r;
}

std::string eval_csv_header() {
  return "tree_model,edge_direction,median,p90,p99,spearman,top50_mean,top99_mean";
}

std::string eval_csv_row(const EvalReport& r) {
  std::ostringstream out;
  out.precision(17);
  out << r.tree_model << ',' << r.edge_direction << ',' << r.q.median << ',' << r.q.p90 << ',' << r.q.p99 << ','
      << r.spearman << ',' << r.q.top50_mean << ',' << r.q.top99_mean;
  return out.str();
}

Json eval_report_to_json(const EvalReport& r) {
  Json j{{"tree_model", r.tree_model},
         {"edge_direction", r.edge_direction},
         {"q_error", quantile_report_to_json(r.q)},
         {"spearman", r.spearman},
         {"samples", r.q_errors.size()}};
  if (r.timing) {
    j["inference_ms"] = {{"mean", r.timing->mean_ms}, {"std", r.timing->std_ms}, {"repetitions", r.timing->repetitions}};
  }
  return j;
}

}  // namespace bigg

#pragma once

#include "bigg/model.hpp"

#include <functional>
#include <iosfwd>

namespace bigg {

/// Min-max scaling of natural-log latencies, fitted on the training split.
struct LabelScaler {
  double log_min = 0.0;
  double log_max = 1.0;

  static LabelScaler fit(std::span<const double> latencies_ms);
  void validate() const;
  /// (ln y - log_min) / (log_max - log_min); not clamped.
  double scale(double latency_ms) const;
  /// exp(y (log_max - log_min) + log_min).
  double unscale(double y_out) const;
  bool operator==(const LabelScaler&) const = default;
};

/// Sum over the batch of (scale(y_al) - y_out)^2.
double scaled_loss(std::span<const double> y_out, std::span<const double> y_al, const LabelScaler& scaler);

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t batch_size = 32;
  int max_epochs = 200;
  int patience = 20;
  std::uint64_t seed = 0;
  int folds = 10;

  void validate() const;
};

Json train_config_to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const Json& j);

struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  ModelConfig config;
  LabelScaler scaler;
  std::uint64_t catalog_fingerprint = 0;
  std::uint64_t seed = 0;
  int epochs_run = 0;
  int best_epoch = 0;
  CostModel<double> model;
};

void save_checkpoint(const Checkpoint& ckpt, std::ostream& out);
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
/// Rebuilds the model over `catalog`; the catalog fingerprint must match.
Checkpoint load_checkpoint(std::istream& in, const Catalog& catalog);
Checkpoint load_checkpoint(const std::string& path, const Catalog& catalog);

/// Featurized plans; Tree-CNN inputs are binarized first.
std::vector<PlanGraph> prepare_graphs(std::span<const PlanTree> plans, const Catalog& catalog, ModelKind kind);

/// Scaled outputs y_out for every graph, evaluation mode.
template <typename Scalar>
std::vector<double> predict_scaled(CostModel<Scalar>& model, std::span<const PlanGraph> graphs,
                                   std::size_t batch_size = 64) {
  std::vector<double> out;
  out.reserve(graphs.size());
  for (std::size_t start = 0; start < graphs.size(); start += batch_size) {
    const std::size_t end = std::min(graphs.size(), start + batch_size);
    std::vector<const PlanGraph*> ptrs;
    for (std::size_t i = start; i < end; ++i) ptrs.push_back(&graphs[i]);
    const BatchLayout layout = make_batch(std::span<const PlanGraph* const>(ptrs));
    Tape<Scalar> tape(false);
    const auto y = model.forward(tape, layout, nullptr);
    for (Index r = 0; r < y.rows(); ++r) out.push_back(static_cast<double>(y.value()(r, 0)));
  }
  return out;
}

std::vector<double> predict_latency_ms(Checkpoint& ckpt, std::span<const PlanGraph> graphs);

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;  // summed over the split
  double val_loss = 0.0;
};

struct FitResult {
  Checkpoint checkpoint;
  std::vector<EpochStats> curve;
};

using EpochCallback = std::function<void(const EpochStats&)>;

/// Mini-batch Adam on the per-batch mean squared error of scaled labels;
/// early stopping on validation loss; returns the best epoch's parameters.
FitResult fit(const Catalog& catalog, std::span<const PlanTree> train, std::span<const PlanTree> val,
              const ModelConfig& model_config, const TrainConfig& train_config, const EpochCallback& on_epoch = {});

struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// k folds over whole query_id groups, group counts differing by at most one.
std::vector<Fold> kfold(std::span<const std::string> query_ids, int k, std::uint64_t seed);

}  // namespace bigg

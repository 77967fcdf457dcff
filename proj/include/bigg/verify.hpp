#pragma once

#include "bigg/grad_check.hpp"
#include "bigg/model.hpp"
#include "bigg/workload.hpp"

namespace bigg {

/// Small catalog and model sizes used for finite-difference checks.
Catalog grad_check_catalog(std::uint64_t seed = 0);
ModelConfig grad_check_config(ModelKind kind);

/// Random plan with a node count in [min_nodes, max_nodes].
PlanTree random_small_plan(const Catalog& catalog, std::uint64_t seed, int min_nodes = 3, int max_nodes = 8);

struct ModelGradCheck {
  ModelKind kind = ModelKind::Bigg;
  std::uint64_t seed = 0;
  std::size_t nodes = 0;
  GradCheckReport report;
};

/// Squared error of one plan's output against a fixed target, checked
/// against central differences over every model parameter.
ModelGradCheck check_model_gradients(ModelKind kind, std::uint64_t seed,
                                     std::optional<Primitive> corrupt = std::nullopt, double epsilon = 1e-5,
                                     double tolerance = 1e-4);

}  // namespace bigg

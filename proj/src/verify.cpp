#include "bigg/verify.hpp"

namespace bigg {

Catalog grad_check_catalog(std::uint64_t seed) {
  GenConfig cfg;
  cfg.seed = seed;
  cfg.n_tables = 4;
  cfg.min_columns = 2;
  cfg.max_columns = 3;
  return gen_catalog(cfg);
}

ModelConfig grad_check_config(ModelKind kind) {
  ModelConfig cfg;
  cfg.kind = kind;
  cfg.layers = 2;
  cfg.hidden = 4;
  cfg.heads = 1;
  cfg.dropout = 0.0;
  cfg.encoder.type_width = 3;
  cfg.encoder.column_width = 2;
  cfg.head_hidden1 = 4;
  cfg.head_hidden2 = 3;
  return cfg;
}

PlanTree random_small_plan(const Catalog& catalog, std::uint64_t seed, int min_nodes, int max_nodes) {
  GenConfig cfg;
  cfg.max_joins = std::max(0, (max_nodes - 1) / 2);
  cfg.max_local_predicates = 2;
  cfg.max_join_predicates = 2;
  Rng rng(seed);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    PlanTree t = gen_plan(catalog, cfg, rng);
    const auto n = static_cast<int>(node_count(t.root));
    if (n >= min_nodes && n <= max_nodes) {
      t.plan_id = "gc" + std::to_string(seed);
      t.query_id = t.plan_id;
      return t;
    }
  }
  throw Error("random_small_plan: no plan with " + std::to_string(min_nodes) + ".." + std::to_string(max_nodes) +
              " nodes");
}

ModelGradCheck check_model_gradients(ModelKind kind, std::uint64_t seed, std::optional<Primitive> corrupt,
                                     double epsilon, double tolerance) {
  const Catalog catalog = grad_check_catalog();
  const PlanTree plan = random_small_plan(catalog, seed);
  const PlanGraph graph = featurize_plan(requires_binary_trees(kind) ? binarize(plan) : plan, catalog);
  const BatchLayout layout = make_batch(graph);
  auto model = CostModel<double>::create(grad_check_config(kind), catalog, seed);

  const LossClosure loss = [&](Tape<double>& tape) {
    Tensor<double> target(1, 1);
    target(0, 0) = 0.3;
    const auto d = model.forward(tape, layout, nullptr) - tape.constant(std::move(target));
    return sum(mul(d, d));
  };
  ModelGradCheck out;
  out.kind = kind;
  out.seed = seed;
  out.nodes = node_count(plan.root);
  out.report = grad_check(loss, model.params(), epsilon, tolerance, corrupt);
  return out;
}

}  // namespace bigg

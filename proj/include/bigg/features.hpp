#pragma once

#include "bigg/plan.hpp"

#include <array>
#include <span>

namespace bigg {

/// Six-slot predicate code for one column, ordered (join, =, >, >=, <, <=).
using ColumnCases = std::array<double, kComparatorCount>;

/// Deterministic raw featurization of one plan node. Column codes are kept
/// sparse: columns the node does not touch are implicitly all-zero.
struct RawNodeFeatures {
  std::vector<double> node_type_onehot;
  std::vector<double> table_multihot;
  std::vector<std::pair<std::size_t, ColumnCases>> column_cases;  // (global column, code), ascending
  bool bottom = false;

  ColumnCases cases(std::size_t global_column) const;
  bool operator==(const RawNodeFeatures&) const = default;
};

/// One-hot over the vocabulary; all zeros for the reserved synthetic operators.
std::vector<double> encode_node_type(const PlanNode& node, std::span<const std::string> vocabulary);
std::vector<double> encode_tables(const PlanNode& node, const Catalog& catalog);

/// Hash embedding for string literals, in [0, 1].
double string_embedding(std::string_view literal);

/// Codes the predicates that mention `qualified_column`; others are ignored.
ColumnCases encode_predicate_column(std::span<const Predicate> predicates, std::string_view qualified_column,
                                    const ColumnStats& column);

RawNodeFeatures raw_node_features(const PlanNode& node, const Catalog& catalog);

/// A plan flattened into post-order rows: row i is the i-th node in
/// post-order, edges and children refer to rows.
struct PlanGraph {
  std::vector<RawNodeFeatures> rows;
  std::vector<std::pair<Index, Index>> child_to_parent;
  std::vector<std::pair<Index, Index>> parent_to_child;
  std::vector<std::vector<Index>> children;  // ordered, per row
  std::vector<Index> postorder;              // 0..N-1
  std::optional<double> latency_ms;
  std::string plan_id;
  std::string query_id;

  Index size() const { return static_cast<Index>(rows.size()); }
};

PlanGraph featurize_plan(const PlanTree& tree, const Catalog& catalog);

}  // namespace bigg

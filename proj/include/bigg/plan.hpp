#pragma once

#include "bigg/tensor.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace bigg {

using Json = nlohmann::json;

/// Synthetic operator names introduced by binarize(). Both encode to an
/// all-zero node-type one-hot.
inline constexpr std::string_view kBottomOperator = "⊥";
inline constexpr std::string_view kPassThroughOperator = "PassThrough";

enum class ValueType { Numeric, String };

struct ColumnStats {
  std::string name;
  ValueType type = ValueType::Numeric;
  double min = 0.0;
  double max = 0.0;
  std::int64_t distinct = 1;
};

struct TableStats {
  std::string name;
  std::int64_t row_count = 1;
  std::vector<ColumnStats> columns;
};

struct ColumnRef {
  std::size_t table = 0;
  std::size_t column = 0;   // within the table
  std::size_t global = 0;   // position in the catalog-wide column order
};

/// Table/column statistics and the operator vocabulary. Table order and the
/// column order inside each table fix every encoding position.
class Catalog {
 public:
  Catalog() = default;
  Catalog(std::vector<std::string> operators, std::vector<TableStats> tables);

  static Catalog from_json(const Json& j);
  static Catalog parse(std::string_view text);
  Json to_json() const;
  /// FNV-1a of the canonical (sorted-key, compact) JSON text.
  std::uint64_t fingerprint() const;

  const std::vector<std::string>& operators() const { return operators_; }
  const std::vector<TableStats>& tables() const { return tables_; }
  std::size_t column_count() const { return column_refs_.size(); }

  std::optional<std::size_t> operator_index(std::string_view name) const;
  std::optional<std::size_t> table_index(std::string_view name) const;
  /// Qualified "table.column" lookup.
  std::optional<ColumnRef> column(std::string_view qualified) const;
  const ColumnStats& column_stats(const ColumnRef& ref) const { return tables_[ref.table].columns[ref.column]; }
  /// Every column in global order.
  const std::vector<ColumnRef>& columns() const { return column_refs_; }
  std::string qualified_name(const ColumnRef& ref) const;

  static bool is_reserved_operator(std::string_view name) {
    return name == kBottomOperator || name == kPassThroughOperator;
  }

  bool operator==(const Catalog& other) const { return to_json() == other.to_json(); }

 private:
  void index();

  std::vector<std::string> operators_;
  std::vector<TableStats> tables_;
  std::vector<ColumnRef> column_refs_;
};

/// Predicate comparators in encoding-position order.
enum class Comparator : int { Join = 0, Eq = 1, Gt = 2, Ge = 3, Lt = 4, Le = 5 };
inline constexpr int kComparatorCount = 6;

std::string_view comparator_symbol(Comparator c);
std::optional<Comparator> parse_comparator(std::string_view op);

enum class PredicateKind { Join, Local };

using Literal = std::variant<double, std::string>;

struct Predicate {
  PredicateKind kind = PredicateKind::Local;
  std::string column;
  Comparator op = Comparator::Eq;
  std::optional<Literal> value;     // local only
  std::string other_column;         // join only

  static Predicate local(std::string column, Comparator op, Literal value) {
    return Predicate{PredicateKind::Local, std::move(column), op, std::move(value), {}};
  }
  static Predicate join(std::string column, std::string other) {
    return Predicate{PredicateKind::Join, std::move(column), Comparator::Join, std::nullopt, std::move(other)};
  }

  bool operator==(const Predicate&) const = default;
};

struct PlanNode {
  std::string node_type;
  std::vector<std::string> tables;
  std::vector<Predicate> predicates;
  std::vector<PlanNode> children;

  bool operator==(const PlanNode&) const = default;
};

struct PlanTree {
  PlanNode root;
  std::optional<double> latency_ms;
  std::string plan_id;
  std::string query_id;

  bool operator==(const PlanTree&) const = default;
};

// Ingestion / serialization ---------------------------------------------------

PlanTree parse_plan_json(std::string_view text, const Catalog& catalog);
PlanTree plan_from_json(const Json& j, const Catalog& catalog);
Json plan_to_json(const PlanTree& tree);
Json node_to_json(const PlanNode& node);
std::string serialize_plan(const PlanTree& tree);

/// Throws ValidationError naming the JSON path of the first violation.
void validate_plan(const PlanTree& tree, const Catalog& catalog);

// Traversals ------------------------------------------------------------------
// Node ids are pre-order positions (root = 0, children left to right).

std::size_t node_count(const PlanNode& node);
std::vector<const PlanNode*> preorder_nodes(const PlanNode& root);
std::vector<int> postorder(const PlanTree& tree);
/// Parent of each node in pre-order ids (-1 for the root).
std::vector<int> parent_ids(const PlanTree& tree);

struct EdgeLists {
  std::vector<std::pair<int, int>> child_to_parent;
  std::vector<std::pair<int, int>> parent_to_child;
};
EdgeLists edge_lists(const PlanTree& tree);

/// Pads unary nodes with a ⊥ leaf and folds k>2 children into a left-deep
/// chain of PassThrough nodes. Idempotent on binary trees.
PlanTree binarize(const PlanTree& tree);
bool is_binary(const PlanNode& node);

}  // namespace bigg

#include "bigg/features.hpp"

#include "bigg/hash.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace bigg {

ColumnCases RawNodeFeatures::cases(std::size_t global_column) const {
  auto it = std::lower_bound(column_cases.begin(), column_cases.end(), global_column,
                             [](const auto& entry, std::size_t g) { return entry.first < g; });
  if (it != column_cases.end() && it->first == global_column) return it->second;
  return ColumnCases{};
}

std::vector<double> encode_node_type(const PlanNode& node, std::span<const std::string> vocabulary) {
  std::vector<double> out(vocabulary.size(), 0.0);
  if (Catalog::is_reserved_operator(node.node_type)) return out;
  for (std::size_t i = 0; i < vocabulary.size(); ++i) {
    if (vocabulary[i] == node.node_type) {
      out[i] = 1.0;
      return out;
    }
  }
  throw ValidationError("unknown operator '" + node.node_type + "'");
}

std::vector<double> encode_tables(const PlanNode& node, const Catalog& catalog) {
  std::vector<double> out(catalog.tables().size(), 0.0);
  for (const auto& name : node.tables) {
    const auto t = catalog.table_index(name);
    if (!t) throw ValidationError("unknown table '" + name + "'");
    out[*t] = 1.0;
  }
  return out;
}

double string_embedding(std::string_view literal) {
  return std::ldexp(static_cast<double>(fnv1a64(literal)), -64);
}

namespace {

// Value for a numeric literal, including the out-of-range rules: -1 when no
// value in [min, max] satisfies the predicate, 2 when every value does.
double numeric_case(Comparator op, double v, const ColumnStats& col) {
  if (v >= col.min && v <= col.max) {
    if (col.max == col.min) return 1.0;
    return (v - col.min) / (col.max - col.min) + 1.0;
  }
  const bool below = v < col.min;
  switch (op) {
    case Comparator::Eq: return -1.0;
    case Comparator::Gt:
    case Comparator::Ge: return below ? 2.0 : -1.0;
    case Comparator::Lt:
    case Comparator::Le: return below ? -1.0 : 2.0;
    case Comparator::Join: break;
  }
  throw Error("numeric_case: join comparator has no literal");
}

}  // namespace

ColumnCases encode_predicate_column(std::span<const Predicate> predicates, std::string_view qualified_column,
                                    const ColumnStats& column) {
  ColumnCases out{};
  for (const auto& p : predicates) {
    if (p.kind == PredicateKind::Join) {
      if (p.column == qualified_column || p.other_column == qualified_column) out[0] = 1.0;
      continue;
    }
    if (p.column != qualified_column) continue;
    if (!p.value) throw ValidationError("local predicate on '" + p.column + "' has no value");
    const auto slot = static_cast<std::size_t>(p.op);
    if (column.type == ValueType::String) {
      if (p.op != Comparator::Eq) {
        throw ValidationError("comparator '" + std::string(comparator_symbol(p.op)) + "' on string column '" +
                              p.column + "' has no interval meaning");
      }
      if (!std::holds_alternative<std::string>(*p.value)) {
        throw ValidationError("numeric literal on string column '" + p.column + "'");
      }
      out[slot] = string_embedding(std::get<std::string>(*p.value)) + 1.0;
    } else {
      if (!std::holds_alternative<double>(*p.value)) {
        throw ValidationError("string literal on numeric column '" + p.column + "'");
      }
      out[slot] = numeric_case(p.op, std::get<double>(*p.value), column);
    }
  }
  return out;
}

RawNodeFeatures raw_node_features(const PlanNode& node, const Catalog& catalog) {
  RawNodeFeatures f;
  f.bottom = node.node_type == kBottomOperator;
  f.node_type_onehot = encode_node_type(node, catalog.operators());
  f.table_multihot = encode_tables(node, catalog);
  std::map<std::size_t, std::string> touched;
  auto touch = [&](const std::string& qualified) {
    const auto ref = catalog.column(qualified);
    if (!ref) throw ValidationError("unknown column '" + qualified + "'");
    touched.emplace(ref->global, qualified);
  };
  for (const auto& p : node.predicates) {
    touch(p.column);
    if (p.kind == PredicateKind::Join) touch(p.other_column);
  }
  for (const auto& [global, name] : touched) {
    const auto& ref = catalog.columns()[global];
    f.column_cases.emplace_back(global, encode_predicate_column(node.predicates, name, catalog.column_stats(ref)));
  }
  return f;
}

PlanGraph featurize_plan(const PlanTree& tree, const Catalog& catalog) {
  PlanGraph g;
  g.latency_ms = tree.latency_ms;
  g.plan_id = tree.plan_id;
  g.query_id = tree.query_id;

  const auto nodes = preorder_nodes(tree.root);
  const auto order = postorder(tree);
  std::vector<Index> row_of(nodes.size());
  for (std::size_t r = 0; r < order.size(); ++r) row_of[static_cast<std::size_t>(order[r])] = static_cast<Index>(r);

  g.rows.reserve(nodes.size());
  for (int id : order) g.rows.push_back(raw_node_features(*nodes[static_cast<std::size_t>(id)], catalog));
  g.children.assign(nodes.size(), {});
  const auto edges = edge_lists(tree);
  for (const auto& [child, parent] : edges.child_to_parent) {
    const Index c = row_of[static_cast<std::size_t>(child)];
    const Index p = row_of[static_cast<std::size_t>(parent)];
    g.child_to_parent.emplace_back(c, p);
    g.parent_to_child.emplace_back(p, c);
    g.children[static_cast<std::size_t>(p)].push_back(c);
  }
  g.postorder.resize(nodes.size());
  for (std::size_t r = 0; r < nodes.size(); ++r) g.postorder[r] = static_cast<Index>(r);
  return g;
}

}  // namespace bigg

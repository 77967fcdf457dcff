#include "bigg/plan.hpp"

#include "bigg/hash.hpp"

#include <cmath>
#include <functional>
#include <unordered_set>

namespace bigg {

namespace {

std::string type_name(ValueType t) { return t == ValueType::Numeric ? "numeric" : "string"; }

[[noreturn]] void invalid(const std::string& path, const std::string& what) {
  throw ValidationError(path + ": " + what);
}

const Json& require(const Json& j, const char* key, const std::string& path) {
  auto it = j.find(key);
  if (it == j.end()) invalid(path, std::string("missing field '") + key + "'");
  return *it;
}

std::string require_string(const Json& j, const char* key, const std::string& path) {
  const Json& v = require(j, key, path);
  if (!v.is_string()) invalid(path + "." + key, "expected a string");
  return v.get<std::string>();
}

const Json& require_array(const Json& j, const char* key, const std::string& path) {
  const Json& v = require(j, key, path);
  if (!v.is_array()) invalid(path + "." + key, "expected an array");
  return v;
}

}  // namespace

// Catalog -------------------------------------------------------------------

Catalog::Catalog(std::vector<std::string> operators, std::vector<TableStats> tables)
    : operators_(std::move(operators)), tables_(std::move(tables)) {
  index();
}

void Catalog::index() {
  column_refs_.clear();
  std::unordered_set<std::string> seen_ops;
  for (const auto& op : operators_) {
    if (!seen_ops.insert(op).second) throw ValidationError("catalog: duplicate operator '" + op + "'");
    if (is_reserved_operator(op)) throw ValidationError("catalog: operator name '" + op + "' is reserved");
  }
  std::unordered_set<std::string> seen_tables;
  for (std::size_t t = 0; t < tables_.size(); ++t) {
    const auto& table = tables_[t];
    if (table.name.empty() || table.name.find('.') != std::string::npos) {
      throw ValidationError("catalog: invalid table name '" + table.name + "'");
    }
    if (!seen_tables.insert(table.name).second) throw ValidationError("catalog: duplicate table '" + table.name + "'");
    if (table.row_count <= 0) throw ValidationError("catalog: table '" + table.name + "' needs a positive row_count");
    std::unordered_set<std::string> seen_cols;
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
      const auto& col = table.columns[c];
      if (!seen_cols.insert(col.name).second) {
        throw ValidationError("catalog: duplicate column '" + table.name + "." + col.name + "'");
      }
      if (col.type == ValueType::Numeric && !(col.min <= col.max)) {
        throw ValidationError("catalog: column '" + table.name + "." + col.name + "' has min > max");
      }
      if (col.distinct <= 0) {
        throw ValidationError("catalog: column '" + table.name + "." + col.name + "' needs a positive distinct count");
      }
      column_refs_.push_back(ColumnRef{t, c, column_refs_.size()});
    }
  }
}

Catalog Catalog::from_json(const Json& j) {
  if (!j.is_object()) invalid("$", "catalog must be an object");
  std::vector<std::string> ops;
  for (const auto& op : require_array(j, "operators", "$")) {
    if (!op.is_string()) invalid("$.operators", "expected strings");
    ops.push_back(op.get<std::string>());
  }
  std::vector<TableStats> tables;
  const Json& jt = require_array(j, "tables", "$");
  for (std::size_t i = 0; i < jt.size(); ++i) {
    const std::string path = "$.tables[" + std::to_string(i) + "]";
    TableStats t;
    t.name = require_string(jt[i], "name", path);
    const Json& rc = require(jt[i], "row_count", path);
    if (!rc.is_number_integer()) invalid(path + ".row_count", "expected an integer");
    t.row_count = rc.get<std::int64_t>();
    const Json& jc = require_array(jt[i], "columns", path);
    for (std::size_t c = 0; c < jc.size(); ++c) {
      const std::string cpath = path + ".columns[" + std::to_string(c) + "]";
      ColumnStats col;
      col.name = require_string(jc[c], "name", cpath);
      const std::string type = require_string(jc[c], "type", cpath);
      if (type == "numeric") {
        col.type = ValueType::Numeric;
        const Json& mn = require(jc[c], "min", cpath);
        const Json& mx = require(jc[c], "max", cpath);
        if (!mn.is_number() || !mx.is_number()) invalid(cpath, "numeric columns need numeric min/max");
        col.min = mn.get<double>();
        col.max = mx.get<double>();
      } else if (type == "string") {
        col.type = ValueType::String;
      } else {
        invalid(cpath + ".type", "expected 'numeric' or 'string', got '" + type + "'");
      }
      const Json& d = require(jc[c], "distinct", cpath);
      if (!d.is_number_integer()) invalid(cpath + ".distinct", "expected an integer");
      col.distinct = d.get<std::int64_t>();
      t.columns.push_back(std::move(col));
    }
    tables.push_back(std::move(t));
  }
  return Catalog(std::move(ops), std::move(tables));
}

Catalog Catalog::parse(std::string_view text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ValidationError(std::string("catalog: malformed JSON: ") + e.what());
  }
  return from_json(j);
}

Json Catalog::to_json() const {
  Json tables = Json::array();
  for (const auto& t : tables_) {
    Json cols = Json::array();
    for (const auto& c : t.columns) {
      Json jc = {{"name", c.name}, {"type", type_name(c.type)}, {"distinct", c.distinct}};
      if (c.type == ValueType::Numeric) {
        jc["min"] = c.min;
        jc["max"] = c.max;
      }
      cols.push_back(std::move(jc));
    }
    tables.push_back({{"name", t.name}, {"row_count", t.row_count}, {"columns", std::move(cols)}});
  }
  return Json{{"operators", operators_}, {"tables", std::move(tables)}};
}

std::uint64_t Catalog::fingerprint() const { return fnv1a64(to_json().dump()); }

std::optional<std::size_t> Catalog::operator_index(std::string_view name) const {
  for (std::size_t i = 0; i < operators_.size(); ++i) {
    if (operators_[i] == name) return i;
  }
  return std::nullopt;
}

std::optional<std::size_t> Catalog::table_index(std::string_view name) const {
  for (std::size_t i = 0; i < tables_.size(); ++i) {
    if (tables_[i].name == name) return i;
  }
  return std::nullopt;
}

std::optional<ColumnRef> Catalog::column(std::string_view qualified) const {
  const auto dot = qualified.find('.');
  if (dot == std::string_view::npos) return std::nullopt;
  const auto t = table_index(qualified.substr(0, dot));
  if (!t) return std::nullopt;
  const auto name = qualified.substr(dot + 1);
  const auto& cols = tables_[*t].columns;
  std::size_t global = 0;
  for (std::size_t i = 0; i < *t; ++i) global += tables_[i].columns.size();
  for (std::size_t c = 0; c < cols.size(); ++c) {
    if (cols[c].name == name) return ColumnRef{*t, c, global + c};
  }
  return std::nullopt;
}

std::string Catalog::qualified_name(const ColumnRef& ref) const {
  return tables_[ref.table].name + "." + tables_[ref.table].columns[ref.column].name;
}

// Comparators -----------------------------------------------------------------

std::string_view comparator_symbol(Comparator c) {
  switch (c) {
    case Comparator::Join: return "join";
    case Comparator::Eq: return "=";
    case Comparator::Gt: return ">";
    case Comparator::Ge: return ">=";
    case Comparator::Lt: return "<";
    case Comparator::Le: return "<=";
  }
  return "?";
}

std::optional<Comparator> parse_comparator(std::string_view op) {
  if (op == "join") return Comparator::Join;
  if (op == "=") return Comparator::Eq;
  if (op == ">") return Comparator::Gt;
  if (op == ">=") return Comparator::Ge;
  if (op == "<") return Comparator::Lt;
  if (op == "<=") return Comparator::Le;
  return std::nullopt;
}

// JSON ----------------------------------------------------------------------

namespace {

Predicate predicate_from_json(const Json& j, const std::string& path) {
  if (!j.is_object()) invalid(path, "predicate must be an object");
  const std::string kind = require_string(j, "kind", path);
  const std::string op_text = require_string(j, "op", path);
  const auto op = parse_comparator(op_text);
  if (!op) invalid(path + ".op", "unknown comparator '" + op_text + "'");
  Predicate p;
  p.column = require_string(j, "column", path);
  p.op = *op;
  if (kind == "join") {
    if (*op != Comparator::Join) invalid(path + ".op", "join predicates use op 'join'");
    if (j.contains("value")) invalid(path, "join predicates carry no value");
    p.kind = PredicateKind::Join;
    p.other_column = require_string(j, "other_column", path);
  } else if (kind == "local") {
    if (*op == Comparator::Join) invalid(path + ".op", "local predicates cannot use op 'join'");
    if (j.contains("other_column")) invalid(path, "local predicates carry no other_column");
    p.kind = PredicateKind::Local;
    const Json& v = require(j, "value", path);
    if (v.is_number()) {
      p.value = v.get<double>();
    } else if (v.is_string()) {
      p.value = v.get<std::string>();
    } else {
      invalid(path + ".value", "expected a number or string");
    }
  } else {
    invalid(path + ".kind", "expected 'join' or 'local', got '" + kind + "'");
  }
  return p;
}

PlanNode node_from_json(const Json& j, const std::string& path) {
  if (!j.is_object()) invalid(path, "plan node must be an object");
  PlanNode n;
  n.node_type = require_string(j, "node_type", path);
  const Json& tables = require_array(j, "tables", path);
  for (std::size_t i = 0; i < tables.size(); ++i) {
    if (!tables[i].is_string()) invalid(path + ".tables[" + std::to_string(i) + "]", "expected a string");
    n.tables.push_back(tables[i].get<std::string>());
  }
  const Json& preds = require_array(j, "predicates", path);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    n.predicates.push_back(predicate_from_json(preds[i], path + ".predicates[" + std::to_string(i) + "]"));
  }
  const Json& kids = require_array(j, "children", path);
  for (std::size_t i = 0; i < kids.size(); ++i) {
    n.children.push_back(node_from_json(kids[i], path + ".children[" + std::to_string(i) + "]"));
  }
  return n;
}

Json predicate_to_json(const Predicate& p) {
  if (p.kind == PredicateKind::Join) {
    return Json{{"kind", "join"}, {"column", p.column}, {"op", "join"}, {"other_column", p.other_column}};
  }
  Json j{{"kind", "local"}, {"column", p.column}, {"op", std::string(comparator_symbol(p.op))}};
  if (p.value) {
    std::visit([&](const auto& v) { j["value"] = v; }, *p.value);
  }
  return j;
}

void validate_predicate(const Predicate& p, const Catalog& catalog, const std::string& path) {
  const auto col = catalog.column(p.column);
  if (!col) invalid(path + ".column", "unknown column '" + p.column + "'");
  if (p.kind == PredicateKind::Join) {
    if (p.op != Comparator::Join || p.value || p.other_column.empty()) invalid(path, "malformed join predicate");
    if (!catalog.column(p.other_column)) invalid(path + ".other_column", "unknown column '" + p.other_column + "'");
    return;
  }
  if (p.op == Comparator::Join || !p.value || !p.other_column.empty()) invalid(path, "malformed local predicate");
  const auto& stats = catalog.column_stats(*col);
  const bool numeric_literal = std::holds_alternative<double>(*p.value);
  if (stats.type == ValueType::Numeric && !numeric_literal) {
    invalid(path + ".value", "string literal on numeric column '" + p.column + "'");
  }
  if (stats.type == ValueType::String && numeric_literal) {
    invalid(path + ".value", "numeric literal on string column '" + p.column + "'");
  }
  if (numeric_literal && !std::isfinite(std::get<double>(*p.value))) invalid(path + ".value", "literal is not finite");
}

void validate_node(const PlanNode& n, const Catalog& catalog, const std::string& path) {
  if (!catalog.operator_index(n.node_type) && !Catalog::is_reserved_operator(n.node_type)) {
    invalid(path + ".node_type", "unknown operator '" + n.node_type + "'");
  }
  for (std::size_t i = 0; i < n.tables.size(); ++i) {
    if (!catalog.table_index(n.tables[i])) {
      invalid(path + ".tables[" + std::to_string(i) + "]", "unknown table '" + n.tables[i] + "'");
    }
  }
  for (std::size_t i = 0; i < n.predicates.size(); ++i) {
    validate_predicate(n.predicates[i], catalog, path + ".predicates[" + std::to_string(i) + "]");
  }
  for (std::size_t i = 0; i < n.children.size(); ++i) {
    validate_node(n.children[i], catalog, path + ".children[" + std::to_string(i) + "]");
  }
}

}  // namespace

PlanTree plan_from_json(const Json& j, const Catalog& catalog) {
  if (!j.is_object()) invalid("$", "plan document must be an object");
  PlanTree tree;
  tree.query_id = require_string(j, "query_id", "$");
  tree.plan_id = require_string(j, "plan_id", "$");
  if (auto it = j.find("latency_ms"); it != j.end() && !it->is_null()) {
    if (!it->is_number()) invalid("$.latency_ms", "expected a number");
    tree.latency_ms = it->get<double>();
  }
  tree.root = node_from_json(require(j, "plan", "$"), "$.plan");
  validate_plan(tree, catalog);
  return tree;
}

PlanTree parse_plan_json(std::string_view text, const Catalog& catalog) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ValidationError(std::string("plan: malformed JSON: ") + e.what());
  }
  return plan_from_json(j, catalog);
}

Json node_to_json(const PlanNode& node) {
  Json preds = Json::array();
  for (const auto& p : node.predicates) preds.push_back(predicate_to_json(p));
  Json kids = Json::array();
  for (const auto& c : node.children) kids.push_back(node_to_json(c));
  return Json{{"node_type", node.node_type}, {"tables", node.tables}, {"predicates", std::move(preds)},
              {"children", std::move(kids)}};
}

Json plan_to_json(const PlanTree& tree) {
  Json j{{"query_id", tree.query_id}, {"plan_id", tree.plan_id}, {"plan", node_to_json(tree.root)}};
  if (tree.latency_ms) j["latency_ms"] = *tree.latency_ms;
  return j;
}

std::string serialize_plan(const PlanTree& tree) { return plan_to_json(tree).dump(); }

void validate_plan(const PlanTree& tree, const Catalog& catalog) {
  if (tree.latency_ms && !(*tree.latency_ms > 0.0 && std::isfinite(*tree.latency_ms))) {
    invalid("$.latency_ms", "latency must be positive and finite");
  }
  validate_node(tree.root, catalog, "$.plan");
}

// Traversals ----------------------------------------------------------------

std::size_t node_count(const PlanNode& node) {
  std::size_t n = 1;
  for (const auto& c : node.children) n += node_count(c);
  return n;
}

std::vector<const PlanNode*> preorder_nodes(const PlanNode& root) {
  std::vector<const PlanNode*> out;
  std::function<void(const PlanNode&)> visit = [&](const PlanNode& n) {
    out.push_back(&n);
    for (const auto& c : n.children) visit(c);
  };
  visit(root);
  return out;
}

std::vector<int> postorder(const PlanTree& tree) {
  std::vector<int> out;
  int next = 0;
  std::function<void(const PlanNode&)> visit = [&](const PlanNode& n) {
    const int id = next++;
    for (const auto& c : n.children) visit(c);
    out.push_back(id);
  };
  visit(tree.root);
  return out;
}

std::vector<int> parent_ids(const PlanTree& tree) {
  std::vector<int> parents;
  std::function<void(const PlanNode&, int)> visit = [&](const PlanNode& n, int parent) {
    const int id = static_cast<int>(parents.size());
    parents.push_back(parent);
    for (const auto& c : n.children) visit(c, id);
  };
  visit(tree.root, -1);
  return parents;
}

EdgeLists edge_lists(const PlanTree& tree) {
  EdgeLists e;
  const auto parents = parent_ids(tree);
  for (std::size_t child = 1; child < parents.size(); ++child) {
    const int c = static_cast<int>(child);
    e.child_to_parent.emplace_back(c, parents[child]);
    e.parent_to_child.emplace_back(parents[child], c);
  }
  return e;
}

namespace {

PlanNode bottom_node() {
  PlanNode n;
  n.node_type = std::string(kBottomOperator);
  return n;
}

PlanNode binarize_node(const PlanNode& node) {
  PlanNode out;
  out.node_type = node.node_type;
  out.tables = node.tables;
  out.predicates = node.predicates;
  std::vector<PlanNode> kids;
  kids.reserve(node.children.size());
  for (const auto& c : node.children) kids.push_back(binarize_node(c));
  if (kids.size() == 1) {
    kids.push_back(bottom_node());
  } else if (kids.size() > 2) {
    PlanNode acc;
    acc.node_type = std::string(kPassThroughOperator);
    acc.children = {std::move(kids[0]), std::move(kids[1])};
    for (std::size_t i = 2; i + 1 < kids.size(); ++i) {
      PlanNode next;
      next.node_type = std::string(kPassThroughOperator);
      next.children = {std::move(acc), std::move(kids[i])};
      acc = std::move(next);
    }
    PlanNode last = std::move(kids.back());
    kids.clear();
    kids.push_back(std::move(acc));
    kids.push_back(std::move(last));
  }
  out.children = std::move(kids);
  return out;
}

}  // namespace

PlanTree binarize(const PlanTree& tree) {
  PlanTree out = tree;
  out.root = binarize_node(tree.root);
  return out;
}

bool is_binary(const PlanNode& node) {
  if (node.children.empty()) return true;
  if (node.children.size() != 2) return false;
  return is_binary(node.children[0]) && is_binary(node.children[1]);
}

}  // namespace bigg

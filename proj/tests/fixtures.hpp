#pragma once

#include "bigg/plan.hpp"
#include "bigg/workload.hpp"

namespace bigg::testing {

// t1(id, price, name), t2(id, t1_id), t3(id, qty)
inline Catalog small_catalog() {
  return Catalog::parse(R"({
    "operators": ["Seq Scan", "Index Scan", "Hash Join", "Merge Join", "Nested Loop", "Sort", "Aggregate"],
    "tables": [
      {"name": "t1", "row_count": 1000, "columns": [
        {"name": "id", "type": "numeric", "min": 0, "max": 999, "distinct": 1000},
        {"name": "price", "type": "numeric", "min": 0, "max": 100, "distinct": 50},
        {"name": "name", "type": "string", "distinct": 300}]},
      {"name": "t2", "row_count": 5000, "columns": [
        {"name": "id", "type": "numeric", "min": 0, "max": 4999, "distinct": 5000},
        {"name": "t1_id", "type": "numeric", "min": 0, "max": 999, "distinct": 1000}]},
      {"name": "t3", "row_count": 200, "columns": [
        {"name": "id", "type": "numeric", "min": 0, "max": 199, "distinct": 200},
        {"name": "qty", "type": "numeric", "min": 1, "max": 10, "distinct": 10}]}
    ]})");
}

inline PlanNode scan(std::string table, std::vector<Predicate> preds = {}, std::string type = "Seq Scan") {
  return PlanNode{std::move(type), {std::move(table)}, std::move(preds), {}};
}

inline PlanNode join(std::string type, PlanNode l, PlanNode r, std::vector<Predicate> preds = {}) {
  std::vector<std::string> tables;
  for (const auto& p : preds) {
    for (const auto* c : {&p.column, &p.other_column}) {
      if (c->empty()) continue;
      auto t = c->substr(0, c->find('.'));
      if (std::find(tables.begin(), tables.end(), t) == tables.end()) tables.push_back(t);
    }
  }
  return PlanNode{std::move(type), std::move(tables), std::move(preds), {std::move(l), std::move(r)}};
}

inline PlanTree tree(PlanNode root, std::optional<double> latency = std::nullopt) {
  return PlanTree{std::move(root), latency, "p", "q"};
}

// ((t1 join t2) join t3)
inline PlanTree three_way() {
  return tree(join("Hash Join",
                   join("Merge Join", scan("t1", {Predicate::local("t1.price", Comparator::Lt, 40.0)}), scan("t2"),
                        {Predicate::join("t1.id", "t2.t1_id")}),
                   scan("t3", {}, "Index Scan"), {Predicate::join("t2.id", "t3.id")}),
              12.5);
}

}  // namespace bigg::testing

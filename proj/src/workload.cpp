#include "bigg/workload.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <regex>
#include <set>
#include <sstream>

namespace bigg {

std::vector<std::string> default_operators() {
  return {std::string(kSeqScan),    std::string(kIndexScan), std::string(kHashJoin), std::string(kMergeJoin),
          std::string(kNestedLoop), std::string(kSort),      std::string(kAggregate)};
}

void GenConfig::validate() const {
  if (n_tables < 1) throw ValidationError("gen: n_tables must be at least 1");
  if (min_columns < 1 || max_columns < min_columns) throw ValidationError("gen: bad column range");
  if (min_rows < 1 || max_rows < min_rows) throw ValidationError("gen: bad row-count range");
  if (max_joins < 0) throw ValidationError("gen: max_joins must be nonnegative");
  if (max_join_predicates < 1) throw ValidationError("gen: max_join_predicates must be at least 1");
  if (max_local_predicates < 0) throw ValidationError("gen: max_local_predicates must be nonnegative");
  if (hash_join_weight < 0 || merge_join_weight < 0 || nested_loop_weight < 0 ||
      hash_join_weight + merge_join_weight + nested_loop_weight <= 0) {
    throw ValidationError("gen: join type weights must be nonnegative with a positive sum");
  }
  for (double p : {index_scan_probability, many_to_many_ratio, out_of_range_probability, sort_root_probability,
                   aggregate_root_probability}) {
    if (p < 0.0 || p > 1.0) throw ValidationError("gen: probabilities must lie in [0, 1]");
  }
  if (sort_root_probability + aggregate_root_probability > 1.0) {
    throw ValidationError("gen: root probabilities sum above 1");
  }
  if (noise_sigma < 0.0) throw ValidationError("gen: noise sigma must be nonnegative");
}

Json gen_config_to_json(const GenConfig& c) {
  return Json{{"seed", c.seed},
              {"n_tables", c.n_tables},
              {"min_columns", c.min_columns},
              {"max_columns", c.max_columns},
              {"min_rows", c.min_rows},
              {"max_rows", c.max_rows},
              {"max_joins", c.max_joins},
              {"max_join_predicates", c.max_join_predicates},
              {"max_local_predicates", c.max_local_predicates},
              {"hash_join_weight", c.hash_join_weight},
              {"merge_join_weight", c.merge_join_weight},
              {"nested_loop_weight", c.nested_loop_weight},
              {"index_scan_probability", c.index_scan_probability},
              {"many_to_many_ratio", c.many_to_many_ratio},
              {"out_of_range_probability", c.out_of_range_probability},
              {"sort_root_probability", c.sort_root_probability},
              {"aggregate_root_probability", c.aggregate_root_probability},
              {"noise_sigma", c.noise_sigma}};
}

GenConfig gen_config_from_json(const Json& j) {
  GenConfig c;
  c.seed = j.value("seed", c.seed);
  c.n_tables = j.value("n_tables", c.n_tables);
  c.min_columns = j.value("min_columns", c.min_columns);
  c.max_columns = j.value("max_columns", c.max_columns);
  c.min_rows = j.value("min_rows", c.min_rows);
  c.max_rows = j.value("max_rows", c.max_rows);
  c.max_joins = j.value("max_joins", c.max_joins);
  c.max_join_predicates = j.value("max_join_predicates", c.max_join_predicates);
  c.max_local_predicates = j.value("max_local_predicates", c.max_local_predicates);
  c.hash_join_weight = j.value("hash_join_weight", c.hash_join_weight);
  c.merge_join_weight = j.value("merge_join_weight", c.merge_join_weight);
  c.nested_loop_weight = j.value("nested_loop_weight", c.nested_loop_weight);
  c.index_scan_probability = j.value("index_scan_probability", c.index_scan_probability);
  c.many_to_many_ratio = j.value("many_to_many_ratio", c.many_to_many_ratio);
  c.out_of_range_probability = j.value("out_of_range_probability", c.out_of_range_probability);
  c.sort_root_probability = j.value("sort_root_probability", c.sort_root_probability);
  c.aggregate_root_probability = j.value("aggregate_root_probability", c.aggregate_root_probability);
  c.noise_sigma = j.value("noise_sigma", c.noise_sigma);
  return c;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {

int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
double uniform_real(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
bool coin(Rng& rng, double p) { return uniform_real(rng, 0.0, 1.0) < p; }

std::int64_t log_uniform(Rng& rng, std::int64_t lo, std::int64_t hi) {
  const double v = std::exp(uniform_real(rng, std::log(static_cast<double>(lo)), std::log(static_cast<double>(hi))));
  return std::clamp(static_cast<std::int64_t>(std::llround(v)), lo, hi);
}

std::string table_name(int i) { return "t" + std::to_string(i); }

}  // namespace

Catalog gen_catalog(const GenConfig& cfg) {
  cfg.validate();
  Rng rng(derive_seed(cfg.seed, 0xca7a));
  std::vector<TableStats> tables;
  for (int i = 0; i < cfg.n_tables; ++i) {
    TableStats t;
    t.name = table_name(i);
    t.row_count = log_uniform(rng, cfg.min_rows, cfg.max_rows);
    const int n_cols = uniform_int(rng, cfg.min_columns, cfg.max_columns);
    t.columns.push_back({"id", ValueType::Numeric, 1.0, static_cast<double>(t.row_count), t.row_count});
    if (i > 0) {
      const int n_fk = std::min({uniform_int(rng, 1, 2), i, std::max(n_cols - 2, 1)});
      std::vector<int> targets(static_cast<std::size_t>(i));
      std::iota(targets.begin(), targets.end(), 0);
      std::shuffle(targets.begin(), targets.end(), rng);
      targets.resize(static_cast<std::size_t>(n_fk));
      std::sort(targets.begin(), targets.end());
      for (int j : targets) {
        const auto parent_rows = tables[static_cast<std::size_t>(j)].row_count;
        t.columns.push_back({"fk_" + table_name(j), ValueType::Numeric, 1.0, static_cast<double>(parent_rows),
                             std::min(parent_rows, t.row_count)});
      }
    }
    int attr = 0;
    while (static_cast<int>(t.columns.size()) < n_cols || attr == 0) {
      ColumnStats c;
      if (coin(rng, 0.7)) {
        c.name = "n" + std::to_string(attr);
        c.type = ValueType::Numeric;
        c.min = std::round(uniform_real(rng, 0.0, 1000.0));
        c.max = c.min + std::round(uniform_real(rng, 1.0, 10000.0));
        c.distinct = log_uniform(rng, 2, std::max<std::int64_t>(2, std::min<std::int64_t>(t.row_count, 5000)));
      } else {
        c.name = "s" + std::to_string(attr);
        c.type = ValueType::String;
        c.distinct = log_uniform(rng, 2, std::max<std::int64_t>(2, std::min<std::int64_t>(t.row_count, 1000)));
      }
      t.columns.push_back(std::move(c));
      ++attr;
    }
    tables.push_back(std::move(t));
  }
  return Catalog(default_operators(), std::move(tables));
}

// -- Plans -----------------------------------------------------------------------

namespace {

std::string qualified(const TableStats& t, const ColumnStats& c) { return t.name + "." + c.name; }

Predicate random_local_predicate(const TableStats& t, const GenConfig& cfg, Rng& rng) {
  const auto& c = t.columns[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(t.columns.size()) - 1))];
  if (c.type == ValueType::String) {
    return Predicate::local(qualified(t, c), Comparator::Eq,
                            "v" + std::to_string(uniform_int(rng, 0, static_cast<int>(c.distinct) - 1)));
  }
  const auto op = static_cast<Comparator>(uniform_int(rng, 1, kComparatorCount - 1));
  const double span = std::max(c.max - c.min, 1.0);
  double v = 0.0;
  if (coin(rng, cfg.out_of_range_probability)) {
    v = coin(rng, 0.5) ? c.min - uniform_real(rng, 0.01, 1.0) * span : c.max + uniform_real(rng, 0.01, 1.0) * span;
  } else {
    v = uniform_real(rng, c.min, c.max);
  }
  return Predicate::local(qualified(t, c), op, std::round(v * 100.0) / 100.0);
}

struct Subtree {
  PlanNode node;
  std::vector<int> tables;
};

std::string pick_join_type(const GenConfig& cfg, Rng& rng) {
  std::discrete_distribution<int> d({cfg.hash_join_weight, cfg.merge_join_weight, cfg.nested_loop_weight});
  switch (d(rng)) {
    case 0: return std::string(kHashJoin);
    case 1: return std::string(kMergeJoin);
    default: return std::string(kNestedLoop);
  }
}

const ColumnStats* find_column(const TableStats& t, const std::string& name) {
  for (const auto& c : t.columns) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

std::vector<const ColumnStats*> numeric_columns(const TableStats& t) {
  std::vector<const ColumnStats*> out;
  for (const auto& c : t.columns) {
    if (c.type == ValueType::Numeric) out.push_back(&c);
  }
  return out;
}

Predicate random_join_predicate(const Catalog& catalog, const std::vector<int>& left, const std::vector<int>& right,
                                const GenConfig& cfg, Rng& rng) {
  const auto& tables = catalog.tables();
  if (!coin(rng, cfg.many_to_many_ratio)) {
    std::vector<std::pair<std::string, std::string>> fks;
    for (int l : left) {
      for (int r : right) {
        const auto& tl = tables[static_cast<std::size_t>(l)];
        const auto& tr = tables[static_cast<std::size_t>(r)];
        if (find_column(tl, "fk_" + tr.name)) fks.emplace_back(tl.name + ".fk_" + tr.name, tr.name + ".id");
        if (find_column(tr, "fk_" + tl.name)) fks.emplace_back(tl.name + ".id", tr.name + ".fk_" + tl.name);
      }
    }
    if (!fks.empty()) {
      const auto& fk = fks[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(fks.size()) - 1))];
      return Predicate::join(fk.first, fk.second);
    }
  }
  const auto& tl = tables[static_cast<std::size_t>(left[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(left.size()) - 1))])];
  const auto& tr = tables[static_cast<std::size_t>(right[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(right.size()) - 1))])];
  const auto cl = numeric_columns(tl);
  const auto cr = numeric_columns(tr);
  const auto* a = cl[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(cl.size()) - 1))];
  const auto* b = cr[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(cr.size()) - 1))];
  return Predicate::join(qualified(tl, *a), qualified(tr, *b));
}

std::vector<std::string> predicate_tables(const std::vector<Predicate>& preds) {
  std::vector<std::string> out;
  auto add = [&](const std::string& col) {
    const auto t = col.substr(0, col.find('.'));
    if (std::find(out.begin(), out.end(), t) == out.end()) out.push_back(t);
  };
  for (const auto& p : preds) {
    add(p.column);
    if (p.kind == PredicateKind::Join) add(p.other_column);
  }
  return out;
}

}  // namespace

PlanTree gen_plan(const Catalog& catalog, const GenConfig& cfg, Rng& rng, int min_joins) {
  cfg.validate();
  const int n_tables = static_cast<int>(catalog.tables().size());
  const int hi = std::min(cfg.max_joins, n_tables - 1);
  const int lo = std::min(std::max(min_joins, 0), hi);
  const int joins = uniform_int(rng, lo, hi);

  std::vector<int> chosen(static_cast<std::size_t>(n_tables));
  std::iota(chosen.begin(), chosen.end(), 0);
  std::shuffle(chosen.begin(), chosen.end(), rng);
  chosen.resize(static_cast<std::size_t>(joins + 1));

  std::vector<Subtree> pool;
  for (int t : chosen) {
    const auto& table = catalog.tables()[static_cast<std::size_t>(t)];
    Subtree s;
    s.node.node_type = std::string(coin(rng, cfg.index_scan_probability) ? kIndexScan : kSeqScan);
    s.node.tables = {table.name};
    const int n_preds = uniform_int(rng, 0, cfg.max_local_predicates);
    for (int k = 0; k < n_preds; ++k) s.node.predicates.push_back(random_local_predicate(table, cfg, rng));
    s.tables = {t};
    pool.push_back(std::move(s));
  }
  while (pool.size() > 1) {
    const int i = uniform_int(rng, 0, static_cast<int>(pool.size()) - 1);
    Subtree left = std::move(pool[static_cast<std::size_t>(i)]);
    pool.erase(pool.begin() + i);
    const int j = uniform_int(rng, 0, static_cast<int>(pool.size()) - 1);
    Subtree right = std::move(pool[static_cast<std::size_t>(j)]);
    pool.erase(pool.begin() + j);

    Subtree joined;
    joined.node.node_type = pick_join_type(cfg, rng);
    const int n_preds = uniform_int(rng, 1, cfg.max_join_predicates);
    for (int k = 0; k < n_preds; ++k) {
      joined.node.predicates.push_back(random_join_predicate(catalog, left.tables, right.tables, cfg, rng));
    }
    joined.node.tables = predicate_tables(joined.node.predicates);
    joined.tables = left.tables;
    joined.tables.insert(joined.tables.end(), right.tables.begin(), right.tables.end());
    joined.node.children.push_back(std::move(left.node));
    joined.node.children.push_back(std::move(right.node));
    pool.push_back(std::move(joined));
  }

  PlanTree tree;
  tree.root = std::move(pool[0].node);
  const double u = uniform_real(rng, 0.0, 1.0);
  if (u < cfg.sort_root_probability + cfg.aggregate_root_probability) {
    PlanNode top;
    top.node_type = std::string(u < cfg.sort_root_probability ? kSort : kAggregate);
    top.children.push_back(std::move(tree.root));
    tree.root = std::move(top);
  }
  return tree;
}

// -- Oracle ----------------------------------------------------------------------

namespace {

struct NodeEval {
  double rows = 1.0;
  double cost = 0.0;
  bool sorted = false;
};

double selectivity(const Predicate& p, const ColumnStats& c) {
  if (c.type == ValueType::String || !std::holds_alternative<double>(*p.value)) {
    return 1.0 / static_cast<double>(c.distinct);
  }
  const double v = std::get<double>(*p.value);
  const bool degenerate = c.max == c.min;
  switch (p.op) {
    case Comparator::Eq:
      return (v >= c.min && v <= c.max) ? 1.0 / static_cast<double>(c.distinct) : 0.0;
    case Comparator::Gt:
    case Comparator::Ge:
      if (degenerate) return (p.op == Comparator::Gt ? c.min > v : c.min >= v) ? 1.0 : 0.0;
      return std::clamp((c.max - v) / (c.max - c.min), 0.0, 1.0);
    case Comparator::Lt:
    case Comparator::Le:
      if (degenerate) return (p.op == Comparator::Lt ? c.min < v : c.min <= v) ? 1.0 : 0.0;
      return std::clamp((v - c.min) / (c.max - c.min), 0.0, 1.0);
    case Comparator::Join:
      break;
  }
  return 1.0;
}

const ColumnStats& stats_of(const Catalog& catalog, const std::string& qualified) {
  const auto ref = catalog.column(qualified);
  if (!ref) throw ValidationError("oracle: unknown column '" + qualified + "'");
  return catalog.column_stats(*ref);
}

double log2p1(double r) { return std::log2(1.0 + r); }

bool is_join(std::string_view t) { return t == kHashJoin || t == kMergeJoin || t == kNestedLoop; }

NodeEval evaluate(const PlanNode& node, const Catalog& catalog) {
  std::vector<NodeEval> kids;
  double cost = 0.0;
  for (const auto& c : node.children) {
    kids.push_back(evaluate(c, catalog));
    cost += kids.back().cost;
  }
  double sel = 1.0;
  for (const auto& p : node.predicates) {
    if (p.kind == PredicateKind::Local) {
      sel *= selectivity(p, stats_of(catalog, p.column));
    } else {
      const auto dl = stats_of(catalog, p.column).distinct;
      const auto dr = stats_of(catalog, p.other_column).distinct;
      sel /= static_cast<double>(std::max(dl, dr));
    }
  }

  NodeEval out;
  const std::string_view type = node.node_type;
  if (type == kSeqScan || type == kIndexScan) {
    double rows_in = 1.0;
    if (!node.tables.empty()) {
      const auto t = catalog.table_index(node.tables[0]);
      if (!t) throw ValidationError("oracle: unknown table '" + node.tables[0] + "'");
      rows_in = static_cast<double>(catalog.tables()[*t].row_count);
    }
    for (const auto& k : kids) rows_in *= k.rows;
    out.rows = rows_in * sel;
    out.cost = type == kSeqScan ? rows_in : 2.0 * log2p1(rows_in) + out.rows;
    out.sorted = type == kIndexScan;
  } else if (is_join(type)) {
    double product = 1.0;
    for (const auto& k : kids) product *= k.rows;
    out.rows = product * sel;
    if (kids.size() >= 2) {
      // n-ary joins are costed as a left-deep fold of binary joins
      double left = kids[0].rows;
      bool left_sorted = kids[0].sorted;
      for (std::size_t i = 1; i < kids.size(); ++i) {
        const double right = kids[i].rows;
        if (type == kHashJoin) {
          out.cost += left + right;
        } else if (type == kMergeJoin) {
          out.cost += left + right;
          if (!left_sorted) out.cost += left * log2p1(left);
          if (!kids[i].sorted) out.cost += right * log2p1(right);
        } else {
          out.cost += left * std::max(1.0, right / 1000.0);
        }
        left *= right;
        left_sorted = true;
      }
    } else if (!kids.empty()) {
      out.cost = kids[0].rows;
    }
    out.sorted = type == kMergeJoin;
  } else if (type == kSort) {
    const double rows = kids.empty() ? 1.0 : kids[0].rows;
    out.rows = rows * sel;
    out.cost = rows * log2p1(rows);
    out.sorted = true;
  } else if (type == kAggregate) {
    const double rows = kids.empty() ? 1.0 : kids[0].rows;
    out.rows = 1.0;
    out.cost = rows;
  } else {
    double product = 1.0;
    for (const auto& k : kids) product *= k.rows;
    out.rows = product * sel;
    out.sorted = kids.size() == 1 && kids[0].sorted;
  }
  out.cost += cost;
  return out;
}

}  // namespace

OracleBreakdown oracle_breakdown(const PlanNode& root, const Catalog& catalog, double sigma, std::uint64_t noise_seed) {
  if (sigma < 0.0) throw ValidationError("oracle: noise sigma must be nonnegative");
  const NodeEval e = evaluate(root, catalog);
  OracleBreakdown b;
  b.rows = e.rows;
  b.cost = e.cost;
  b.latency_ms = std::max(1e-6, 0.001 * e.cost);
  if (sigma > 0.0) {
    Rng rng(noise_seed);
    b.latency_ms *= std::lognormal_distribution<double>(0.0, sigma)(rng);
  }
  return b;
}

double oracle_latency(const PlanTree& plan, const Catalog& catalog, double sigma, std::uint64_t noise_seed) {
  return oracle_breakdown(plan.root, catalog, sigma, noise_seed).latency_ms;
}

// -- Candidate sets --------------------------------------------------------------

namespace {

struct Hint {
  int join = 0;  // 0 keep, 1 hash, 2 merge, 3 nested loop
  int scan = 0;  // 0 keep, 1 seq, 2 index
  bool commute = false;
};

void apply_hint(PlanNode& node, const Hint& h) {
  for (auto& c : node.children) apply_hint(c, h);
  if (is_join(node.node_type)) {
    if (h.join == 1) node.node_type = std::string(kHashJoin);
    if (h.join == 2) node.node_type = std::string(kMergeJoin);
    if (h.join == 3) node.node_type = std::string(kNestedLoop);
    if (h.commute) std::reverse(node.children.begin(), node.children.end());
  } else if (node.node_type == kSeqScan || node.node_type == kIndexScan) {
    if (h.scan == 1) node.node_type = std::string(kSeqScan);
    if (h.scan == 2) node.node_type = std::string(kIndexScan);
  }
}

void random_perturb(PlanNode& node, const GenConfig& cfg, Rng& rng) {
  for (auto& c : node.children) random_perturb(c, cfg, rng);
  if (is_join(node.node_type)) {
    if (coin(rng, 0.5)) node.node_type = pick_join_type(cfg, rng);
    if (coin(rng, 0.3)) std::reverse(node.children.begin(), node.children.end());
  } else if ((node.node_type == kSeqScan || node.node_type == kIndexScan) && coin(rng, 0.3)) {
    node.node_type = std::string(node.node_type == kSeqScan ? kIndexScan : kSeqScan);
  }
}

}  // namespace

CandidateSet gen_candidate_set(const Catalog& catalog, const GenConfig& cfg, std::uint64_t query_seed, int k,
                               const std::string& query_id) {
  if (k < 1) throw ValidationError("candidate set size must be at least 1");
  Rng rng(query_seed);
  const PlanTree base = gen_plan(catalog, cfg, rng, k > 1 ? 1 : 0);

  std::vector<PlanNode> plans{base.root};
  std::set<std::string> seen{node_to_json(base.root).dump()};
  auto offer = [&](PlanNode n) {
    if (static_cast<int>(plans.size()) >= k) return;
    if (seen.insert(node_to_json(n).dump()).second) plans.push_back(std::move(n));
  };

  std::vector<Hint> hints;
  for (int j = 0; j < 4; ++j) {
    for (int s = 0; s < 3; ++s) {
      for (bool c : {false, true}) {
        if (j != 0 || s != 0 || c) hints.push_back({j, s, c});
      }
    }
  }
  std::shuffle(hints.begin(), hints.end(), rng);
  for (const auto& h : hints) {
    PlanNode n = base.root;
    apply_hint(n, h);
    offer(std::move(n));
  }
  for (int attempt = 0; attempt < 64 * k && static_cast<int>(plans.size()) < k; ++attempt) {
    PlanNode n = base.root;
    random_perturb(n, cfg, rng);
    offer(std::move(n));
  }
  if (static_cast<int>(plans.size()) < k) {
    throw ValidationError("candidate set '" + query_id + "': only " + std::to_string(plans.size()) +
                          " distinct plans reachable, " + std::to_string(k) + " requested");
  }

  CandidateSet set;
  set.query_id = query_id;
  for (std::size_t i = 0; i < plans.size(); ++i) {
    PlanTree t;
    t.root = std::move(plans[i]);
    t.query_id = query_id;
    t.plan_id = query_id + "_p" + std::to_string(i);
    t.latency_ms = oracle_latency(t, catalog, cfg.noise_sigma, derive_seed(query_seed, 1000 + i));
    set.plans.push_back(std::move(t));
  }
  return set;
}

// -- Datasets --------------------------------------------------------------------

namespace {

std::string query_name(int i) {
  std::string digits = std::to_string(i);
  return "q" + std::string(digits.size() < 6 ? 6 - digits.size() : 0, '0') + digits;
}

std::string fingerprint_hex(std::uint64_t fp) {
  std::ostringstream out;
  out << std::hex;
  out.width(16);
  out.fill('0');
  out << fp;
  return out.str();
}

}  // namespace

Dataset gen_dataset(const Catalog& catalog, const GenConfig& cfg, int n_queries, SplitRatios ratios,
                    int candidates_per_query) {
  cfg.validate();
  if (n_queries < 1) throw ValidationError("gen_dataset: need at least one query");
  if (candidates_per_query < 1) throw ValidationError("gen_dataset: candidates per query must be at least 1");
  if (ratios.train < 0 || ratios.val < 0 || ratios.test < 0 ||
      std::abs(ratios.train + ratios.val + ratios.test - 1.0) > 1e-9) {
    throw ValidationError("gen_dataset: split ratios must be nonnegative and sum to 1");
  }
  const auto n_train = static_cast<int>(std::llround(ratios.train * n_queries));
  const auto n_val = std::min(static_cast<int>(std::llround(ratios.val * n_queries)), n_queries - n_train);

  std::vector<int> order(static_cast<std::size_t>(n_queries));
  std::iota(order.begin(), order.end(), 0);
  Rng split_rng(derive_seed(cfg.seed, 0x5b17));
  std::shuffle(order.begin(), order.end(), split_rng);
  std::vector<int> split_of(static_cast<std::size_t>(n_queries));
  for (int pos = 0; pos < n_queries; ++pos) {
    split_of[static_cast<std::size_t>(order[static_cast<std::size_t>(pos)])] = pos < n_train ? 0 : pos < n_train + n_val ? 1 : 2;
  }

  Dataset ds;
  ds.catalog = catalog;
  Json split_ids{{"train", Json::array()}, {"val", Json::array()}, {"test", Json::array()}};
  const char* names[] = {"train", "val", "test"};
  for (int q = 0; q < n_queries; ++q) {
    const auto qid = query_name(q);
    const auto qseed = derive_seed(cfg.seed, static_cast<std::uint64_t>(q) + 1);
    std::vector<PlanTree> plans;
    if (candidates_per_query == 1) {
      Rng rng(qseed);
      PlanTree t = gen_plan(catalog, cfg, rng);
      t.query_id = qid;
      t.plan_id = qid + "_p0";
      t.latency_ms = oracle_latency(t, catalog, cfg.noise_sigma, derive_seed(qseed, 1000));
      plans.push_back(std::move(t));
    } else {
      plans = gen_candidate_set(catalog, cfg, qseed, candidates_per_query, qid).plans;
    }
    const int s = split_of[static_cast<std::size_t>(q)];
    auto& dst = s == 0 ? ds.train : s == 1 ? ds.val : ds.test;
    for (auto& p : plans) dst.push_back(std::move(p));
    split_ids[names[s]].push_back(qid);
  }
  ds.manifest = Json{{"splits", split_ids},
                     {"counts",
                      {{"train", ds.train.size()}, {"val", ds.val.size()}, {"test", ds.test.size()}}},
                     {"seeds", {{"seed", cfg.seed}}},
                     {"n_queries", n_queries},
                     {"candidates_per_query", candidates_per_query},
                     {"config", gen_config_to_json(cfg)},
                     {"catalog_fingerprint", fingerprint_hex(catalog.fingerprint())}};
  return ds;
}

void write_plans_jsonl(std::span<const PlanTree> plans, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  for (const auto& p : plans) out << serialize_plan(p) << '\n';
}

std::vector<PlanTree> read_plans_jsonl(const std::string& path, const Catalog& catalog) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read '" + path + "'");
  std::vector<PlanTree> plans;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      plans.push_back(parse_plan_json(line, catalog));
    } catch (const ValidationError& e) {
      throw ValidationError(path + ":" + std::to_string(number) + ": " + e.what());
    } catch (const Json::exception& e) {
      throw ValidationError(path + ":" + std::to_string(number) + ": " + e.what());
    }
  }
  return plans;
}

void write_dataset(const Dataset& ds, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const fs::path root(dir);
  {
    std::ofstream out(root / "catalog.json", std::ios::binary);
    out << ds.catalog.to_json().dump(2) << '\n';
  }
  write_plans_jsonl(ds.train, (root / "train.jsonl").string());
  write_plans_jsonl(ds.val, (root / "val.jsonl").string());
  write_plans_jsonl(ds.test, (root / "test.jsonl").string());
  std::ofstream out(root / "manifest.json", std::ios::binary);
  out << ds.manifest.dump(2) << '\n';
}

Dataset read_dataset(const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path root(dir);
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw ValidationError("cannot read '" + p.string() + "'");
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  };
  Dataset ds;
  ds.catalog = Catalog::parse(slurp(root / "catalog.json"));
  ds.manifest = Json::parse(slurp(root / "manifest.json"));
  const auto expected = ds.manifest.value("catalog_fingerprint", std::string());
  if (expected != fingerprint_hex(ds.catalog.fingerprint())) {
    throw ValidationError("dataset '" + dir + "': catalog fingerprint " + fingerprint_hex(ds.catalog.fingerprint()) +
                          " does not match manifest (" + expected + ")");
  }
  ds.train = read_plans_jsonl((root / "train.jsonl").string(), ds.catalog);
  ds.val = read_plans_jsonl((root / "val.jsonl").string(), ds.catalog);
  ds.test = read_plans_jsonl((root / "test.jsonl").string(), ds.catalog);
  return ds;
}

// -- EXPLAIN ingestion -----------------------------------------------------------

ExplainOptions ExplainOptions::postgres_defaults() {
  ExplainOptions o;
  o.aliases = {{"Index Only Scan", std::string(kIndexScan)},
               {"Bitmap Heap Scan", std::string(kIndexScan)},
               {"Bitmap Index Scan", ""},
               {"Incremental Sort", std::string(kSort)},
               {"Hash", ""},
               {"Materialize", ""},
               {"Memoize", ""},
               {"Gather", ""},
               {"Gather Merge", ""},
               {"Limit", ""},
               {"Result", ""}};
  return o;
}

namespace {

struct Ingest {
  const Catalog& catalog;
  const ExplainOptions& options;
  std::map<std::string, std::string> alias_to_table;
  int dropped = 0;

  void collect_aliases(const Json& node) {
    if (node.contains("Relation Name")) {
      const auto rel = node["Relation Name"].get<std::string>();
      alias_to_table[node.value("Alias", rel)] = rel;
      alias_to_table[rel] = rel;
    }
    if (node.contains("Plans")) {
      for (const auto& c : node["Plans"]) collect_aliases(c);
    }
  }

  static std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t");
    const auto e = s.find_last_not_of(" \t");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  }

  static std::string strip_parens(std::string s) {
    s = trim(std::move(s));
    while (s.size() >= 2 && s.front() == '(' && s.back() == ')') {
      int depth = 0;
      bool wraps = true;
      for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '(') ++depth;
        if (s[i] == ')') --depth;
        if (depth == 0 && i + 1 < s.size()) {
          wraps = false;
          break;
        }
      }
      if (!wraps) break;
      s = trim(s.substr(1, s.size() - 2));
    }
    return s;
  }

  static std::vector<std::string> split_and(const std::string& s) {
    std::vector<std::string> terms;
    int depth = 0;
    std::size_t start = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] == '(') ++depth;
      if (s[i] == ')') --depth;
      if (depth == 0 && s.compare(i, 5, " AND ") == 0) {
        terms.push_back(s.substr(start, i - start));
        start = i + 5;
      }
    }
    terms.push_back(s.substr(start));
    return terms;
  }

  std::optional<std::string> resolve_column(const std::string& ref, const std::optional<std::string>& own_table) {
    const auto dot = ref.find('.');
    std::string table;
    std::string column = ref;
    if (dot != std::string::npos) {
      auto it = alias_to_table.find(ref.substr(0, dot));
      if (it == alias_to_table.end()) return std::nullopt;
      table = it->second;
      column = ref.substr(dot + 1);
    } else if (own_table) {
      table = *own_table;
    } else {
      std::optional<std::string> unique;
      for (const auto& t : catalog.tables()) {
        if (catalog.column(t.name + "." + column)) {
          if (unique) return std::nullopt;
          unique = t.name;
        }
      }
      if (!unique) return std::nullopt;
      table = *unique;
    }
    const auto q = table + "." + column;
    if (!catalog.column(q)) return std::nullopt;
    return q;
  }

  std::optional<Predicate> parse_term(const std::string& raw, const std::optional<std::string>& own_table) {
    static const std::regex term(R"(^([A-Za-z_][\w]*(?:\.[A-Za-z_][\w]*)?)\s*(>=|<=|=|>|<)\s*(.+)$)");
    const std::string text = strip_parens(raw);
    std::smatch m;
    if (!std::regex_match(text, m, term)) return std::nullopt;
    const auto column = resolve_column(m[1].str(), own_table);
    if (!column) return std::nullopt;
    const auto op = *parse_comparator(m[2].str());
    std::string rhs = strip_parens(m[3].str());
    if (const auto cast = rhs.rfind("::"); cast != std::string::npos && rhs.find('\'') != std::string::npos) {
      rhs = rhs.substr(0, cast);
    }
    const auto& stats = catalog.column_stats(*catalog.column(*column));
    if (rhs.size() >= 2 && rhs.front() == '\'' && rhs.back() == '\'') {
      const std::string lit = rhs.substr(1, rhs.size() - 2);
      if (stats.type == ValueType::String) {
        if (op != Comparator::Eq) return std::nullopt;
        return Predicate::local(*column, op, lit);
      }
      rhs = lit;
    }
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(rhs.data(), rhs.data() + rhs.size(), v);
    if (ec == std::errc() && ptr == rhs.data() + rhs.size()) {
      if (stats.type != ValueType::Numeric) return std::nullopt;
      return Predicate::local(*column, op, v);
    }
    if (op == Comparator::Eq) {
      if (const auto other = resolve_column(rhs, std::nullopt)) return Predicate::join(*column, *other);
    }
    return std::nullopt;
  }

  std::vector<Predicate> predicates(const Json& node, const std::optional<std::string>& own_table) {
    std::vector<Predicate> out;
    for (const char* key : {"Index Cond", "Recheck Cond", "Filter", "Hash Cond", "Merge Cond", "Join Filter"}) {
      if (!node.contains(key)) continue;
      for (const auto& t : split_and(strip_parens(node[key].get<std::string>()))) {
        if (auto p = parse_term(t, own_table)) {
          if (std::find(out.begin(), out.end(), *p) == out.end()) out.push_back(std::move(*p));
        } else {
          ++dropped;
        }
      }
    }
    return out;
  }

  // Returns nullopt when the node collapses away without a replacement.
  std::optional<PlanNode> convert(const Json& j, std::vector<Predicate>& orphaned, const std::string& path) {
    if (!j.contains("Node Type")) throw ValidationError(path + ": missing \"Node Type\"");
    const auto type = j["Node Type"].get<std::string>();
    std::string mapped = type;
    bool collapse = false;
    if (auto it = options.aliases.find(type); it != options.aliases.end()) {
      mapped = it->second;
      collapse = mapped.empty();
    }
    if (!collapse && !catalog.operator_index(mapped)) {
      throw ValidationError(path + ": unknown node type '" + type + "' (no alias maps it onto the operator vocabulary)");
    }
    std::optional<std::string> relation;
    if (j.contains("Relation Name")) {
      relation = j["Relation Name"].get<std::string>();
      if (!catalog.table_index(*relation)) throw ValidationError(path + ": unknown table '" + *relation + "'");
    }
    std::vector<Predicate> preds = predicates(j, relation);

    std::vector<PlanNode> children;
    std::vector<Predicate> from_children;
    if (j.contains("Plans")) {
      for (std::size_t i = 0; i < j["Plans"].size(); ++i) {
        if (auto c = convert(j["Plans"][i], from_children, path + ".Plans[" + std::to_string(i) + "]")) {
          children.push_back(std::move(*c));
        }
      }
    }

    if (collapse) {
      preds.insert(preds.end(), from_children.begin(), from_children.end());
      if (children.size() == 1) {
        auto& child = children[0];
        for (auto& p : preds) {
          if (std::find(child.predicates.begin(), child.predicates.end(), p) == child.predicates.end()) {
            child.predicates.push_back(std::move(p));
          }
        }
        child.tables = merge_tables(child, relation);
        return std::move(child);
      }
      if (!children.empty()) throw ValidationError(path + ": cannot collapse '" + type + "' with several inputs");
      orphaned.insert(orphaned.end(), preds.begin(), preds.end());
      return std::nullopt;
    }
    for (auto& p : from_children) {
      if (std::find(preds.begin(), preds.end(), p) == preds.end()) preds.push_back(std::move(p));
    }
    PlanNode node;
    node.node_type = mapped;
    node.predicates = std::move(preds);
    node.children = std::move(children);
    node.tables = merge_tables(node, relation);
    return node;
  }

  static std::vector<std::string> merge_tables(const PlanNode& node, const std::optional<std::string>& relation) {
    std::vector<std::string> out;
    if (relation) out.push_back(*relation);
    for (const auto& t : node.tables) {
      if (std::find(out.begin(), out.end(), t) == out.end()) out.push_back(t);
    }
    for (const auto& t : predicate_tables(node.predicates)) {
      if (std::find(out.begin(), out.end(), t) == out.end()) out.push_back(t);
    }
    return out;
  }
};

}  // namespace

IngestResult ingest_explain(std::string_view json_text, const Catalog& catalog, const ExplainOptions& options) {
  Json doc;
  try {
    doc = Json::parse(json_text);
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("explain: invalid JSON: ") + e.what());
  }
  if (doc.is_array()) {
    if (doc.empty()) throw ValidationError("explain: empty document");
    doc = doc[0];
  }
  if (!doc.is_object() || !doc.contains("Plan")) throw ValidationError("explain: missing \"Plan\" root key");
  const Json& plan = doc["Plan"];

  Ingest ingest{catalog, options, {}, 0};
  ingest.collect_aliases(plan);
  std::vector<Predicate> orphaned;
  auto root = ingest.convert(plan, orphaned, "$.Plan");
  if (!root) throw ValidationError("explain: plan collapses to nothing");
  for (auto& p : orphaned) root->predicates.push_back(std::move(p));

  IngestResult result;
  result.plan.root = std::move(*root);
  if (plan.contains("Actual Total Time")) result.plan.latency_ms = plan["Actual Total Time"].get<double>();
  result.dropped_predicates = ingest.dropped;
  validate_plan(result.plan, catalog);
  return result;
}

}  // namespace bigg

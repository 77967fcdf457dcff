#pragma once

#include "bigg/plan.hpp"
#include "bigg/layers.hpp"

#include <map>

namespace bigg {

inline constexpr std::string_view kSeqScan = "Seq Scan";
inline constexpr std::string_view kIndexScan = "Index Scan";
inline constexpr std::string_view kHashJoin = "Hash Join";
inline constexpr std::string_view kMergeJoin = "Merge Join";
inline constexpr std::string_view kNestedLoop = "Nested Loop";
inline constexpr std::string_view kSort = "Sort";
inline constexpr std::string_view kAggregate = "Aggregate";

std::vector<std::string> default_operators();

struct GenConfig {
  std::uint64_t seed = 0;
  int n_tables = 12;
  int min_columns = 3;
  int max_columns = 6;
  std::int64_t min_rows = 1000;
  std::int64_t max_rows = 1000000;
  int max_joins = 10;
  int max_join_predicates = 3;
  int max_local_predicates = 5;
  double hash_join_weight = 0.4;
  double merge_join_weight = 0.3;
  double nested_loop_weight = 0.3;
  double index_scan_probability = 0.4;
  double many_to_many_ratio = 0.3;
  double out_of_range_probability = 0.1;
  double sort_root_probability = 0.15;
  double aggregate_root_probability = 0.15;
  double noise_sigma = 0.0;

  void validate() const;
};

Json gen_config_to_json(const GenConfig& cfg);
GenConfig gen_config_from_json(const Json& j);

/// Stream seed for item `index` under `seed` (splitmix64 mixing).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

/// Tables t0..t{n-1}: an "id" key, foreign keys "fk_<table>" to some earlier
/// tables, numeric attributes "n<k>" and string attributes "s<k>".
Catalog gen_catalog(const GenConfig& cfg);

/// Random join tree over distinct tables with scan leaves, join internals
/// and an optional Sort/Aggregate root. `min_joins` lifts the lower bound.
PlanTree gen_plan(const Catalog& catalog, const GenConfig& cfg, Rng& rng, int min_joins = 0);

struct OracleBreakdown {
  double rows = 0.0;   // output cardinality of the root
  double cost = 0.0;   // summed node costs
  double latency_ms = 0.0;
};

/// Analytic latency; noise is lognormal(0, sigma) drawn from `noise_seed`.
OracleBreakdown oracle_breakdown(const PlanNode& root, const Catalog& catalog, double sigma = 0.0,
                                 std::uint64_t noise_seed = 0);
double oracle_latency(const PlanTree& plan, const Catalog& catalog, double sigma = 0.0, std::uint64_t noise_seed = 0);

struct CandidateSet {
  std::string query_id;
  std::vector<PlanTree> plans;
};

/// Base plan plus hint-like variants (forced join algorithms, forced scan
/// types, commuted join inputs), structurally distinct, oracle-labelled.
CandidateSet gen_candidate_set(const Catalog& catalog, const GenConfig& cfg, std::uint64_t query_seed, int k,
                               const std::string& query_id);

struct SplitRatios {
  double train = 0.8, val = 0.1, test = 0.1;
};

struct Dataset {
  Catalog catalog;
  std::vector<PlanTree> train, val, test;
  Json manifest;
};

/// n_queries queries of `candidates_per_query` plans each, split by query.
Dataset gen_dataset(const Catalog& catalog, const GenConfig& cfg, int n_queries, SplitRatios ratios,
                    int candidates_per_query = 1);

void write_dataset(const Dataset& ds, const std::string& dir);
/// Reads catalog.json, the three splits and manifest.json; the manifest's
/// catalog fingerprint must match the catalog.
Dataset read_dataset(const std::string& dir);

std::vector<PlanTree> read_plans_jsonl(const std::string& path, const Catalog& catalog);
void write_plans_jsonl(std::span<const PlanTree> plans, const std::string& path);

/// Maps EXPLAIN node types onto the catalog vocabulary. An empty target
/// collapses the node into its only child (or drops a childless one).
struct ExplainOptions {
  std::map<std::string, std::string> aliases;
  static ExplainOptions postgres_defaults();
};

struct IngestResult {
  PlanTree plan;
  int dropped_predicates = 0;
};

IngestResult ingest_explain(std::string_view json_text, const Catalog& catalog,
                            const ExplainOptions& options = ExplainOptions::postgres_defaults());

}  // namespace bigg

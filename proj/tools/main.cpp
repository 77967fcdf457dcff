#include "run_config.hpp"

#include "bigg/estimator.hpp"
#include "bigg/metrics.hpp"
#include "bigg/verify.hpp"
#include "bigg/workload.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;
using namespace bigg;
using bigg::cli::get_or;

namespace {

void log(const std::string& msg) { std::cerr << "[bigg] " << msg << '\n'; }

class UsageError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

std::string require_string(const Json& cfg, const std::string& pointer, const std::string& flag) {
  const auto v = get_or<std::string>(cfg, pointer, "");
  if (v.empty()) throw UsageError("missing required " + flag);
  return v;
}

fs::path prepare_out(const Json& cfg) {
  const fs::path out = require_string(cfg, "/out", "--out");
  if (fs::exists(out) && !fs::is_empty(out) && !get_or(cfg, "/force", false)) {
    throw ValidationError("output directory '" + out.string() + "' exists and is not empty (pass --force)");
  }
  fs::create_directories(out);
  std::ofstream(out / "resolved-config.json") << cfg.dump(2) << '\n';
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
}

ModelConfig model_config(const Json& cfg) {
  return model_config_from_json(cfg.contains("model") ? cfg["model"] : Json::object());
}

TrainConfig train_config(const Json& cfg) {
  TrainConfig t = train_config_from_json(cfg.contains("train") ? cfg["train"] : Json::object());
  if (!cfg.contains(Json::json_pointer("/train/seed"))) t.seed = get_or<std::uint64_t>(cfg, "/seed", 0);
  return t;
}

std::span<const PlanTree> split_of(const Dataset& ds, const std::string& name) {
  if (name == "train") return ds.train;
  if (name == "val") return ds.val;
  if (name == "test") return ds.test;
  throw ValidationError("unknown split '" + name + "' (train, val, test)");
}

std::vector<double> actual_latencies(std::span<const PlanTree> plans) {
  std::vector<double> out;
  for (const auto& p : plans) {
    if (!p.latency_ms) throw ValidationError("plan '" + p.plan_id + "' has no latency label");
    out.push_back(*p.latency_ms);
  }
  return out;
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

// -- gen-data --------------------------------------------------------------------

int cmd_gen_data(const Json& cfg) {
  const bool has_catalog = !get_or<std::string>(cfg, "/data/catalog", "").empty();
  if (!has_catalog && !cfg.contains(Json::json_pointer("/gen/n_tables"))) {
    throw UsageError("gen-data needs --catalog <file> or --tables <n>");
  }
  GenConfig gen = gen_config_from_json(cfg.contains("gen") ? cfg["gen"] : Json::object());
  gen.seed = get_or<std::uint64_t>(cfg, "/seed", 0);
  gen.validate();
  Json resolved = cfg;
  resolved["gen"].update(gen_config_to_json(gen));
  const fs::path out = prepare_out(resolved);

  Catalog catalog;
  if (has_catalog) {
    std::ifstream in(get_or<std::string>(cfg, "/data/catalog", ""));
    if (!in) throw ValidationError("cannot read catalog '" + get_or<std::string>(cfg, "/data/catalog", "") + "'");
    std::stringstream text;
    text << in.rdbuf();
    catalog = Catalog::parse(text.str());
  } else {
    catalog = gen_catalog(gen);
  }
  const SplitRatios ratios{get_or(cfg, "/gen/ratios/train", 0.8), get_or(cfg, "/gen/ratios/val", 0.1),
                           get_or(cfg, "/gen/ratios/test", 0.1)};
  const auto queries = get_or(cfg, "/gen/queries", 1000);
  const auto k = get_or(cfg, "/gen/candidates_per_query", 1);
  const Dataset ds = gen_dataset(catalog, gen, queries, ratios, k);
  write_dataset(ds, out.string());
  log("wrote " + std::to_string(ds.train.size()) + "/" + std::to_string(ds.val.size()) + "/" +
      std::to_string(ds.test.size()) + " plans to " + out.string());
  return 0;
}

// -- train -----------------------------------------------------------------------

std::string curve_csv(const std::vector<EpochStats>& curve) {
  std::ostringstream out;
  out << "epoch,train_loss,val_loss\n";
  for (const auto& e : curve) out << e.epoch << ',' << fmt(e.train_loss) << ',' << fmt(e.val_loss) << '\n';
  return out.str();
}

EvalReport evaluate_checkpoint(Checkpoint& ckpt, const Catalog& catalog, std::span<const PlanTree> plans) {
  const auto graphs = prepare_graphs(plans, catalog, ckpt.config.kind);
  const auto predicted = predict_latency_ms(ckpt, graphs);
  return evaluate(std::string(model_kind_name(ckpt.config.kind)), std::string(edge_direction_label(ckpt.config.kind)),
                  predicted, actual_latencies(plans));
}

int train_kfold(const Json& cfg, const Dataset& ds, const fs::path& out, const ModelConfig& mc, const TrainConfig& tc) {
  std::vector<PlanTree> all = ds.train;
  all.insert(all.end(), ds.val.begin(), ds.val.end());
  all.insert(all.end(), ds.test.begin(), ds.test.end());
  std::vector<std::string> qids;
  for (const auto& p : all) qids.push_back(p.query_id);
  const auto folds = kfold(qids, tc.folds, tc.seed);
  const int jobs = std::max(1, get_or(cfg, "/jobs", 1));

  std::vector<EvalReport> reports(folds.size());
  std::vector<std::string> errors(folds.size());
  auto run_fold = [&](std::size_t f) {
    try {
      std::vector<PlanTree> pool, test;
      for (auto i : folds[f].train) pool.push_back(all[i]);
      for (auto i : folds[f].test) test.push_back(all[i]);
      std::vector<std::string> pool_ids;
      for (const auto& p : pool) pool_ids.push_back(p.query_id);
      const auto inner = kfold(pool_ids, 10 <= static_cast<int>(pool.size()) ? 10 : 2, tc.seed + f + 1)[0];
      std::vector<PlanTree> train, val;
      for (auto i : inner.train) train.push_back(pool[i]);
      for (auto i : inner.test) val.push_back(pool[i]);
      TrainConfig fold_tc = tc;
      fold_tc.seed = tc.seed + f;
      FitResult r = fit(ds.catalog, train, val, mc, fold_tc);
      save_checkpoint(r.checkpoint, (out / ("fold" + std::to_string(f) + ".ckpt")).string());
      write_text(out / ("curve_fold" + std::to_string(f) + ".csv"), curve_csv(r.curve));
      reports[f] = evaluate_checkpoint(r.checkpoint, ds.catalog, test);
    } catch (const std::exception& e) {
      errors[f] = e.what();
    }
  };
  for (std::size_t start = 0; start < folds.size(); start += static_cast<std::size_t>(jobs)) {
    std::vector<std::thread> workers;
    for (std::size_t f = start; f < std::min(folds.size(), start + static_cast<std::size_t>(jobs)); ++f) {
      workers.emplace_back(run_fold, f);
    }
    for (auto& w : workers) w.join();
  }
  for (std::size_t f = 0; f < folds.size(); ++f) {
    if (!errors[f].empty()) throw Error("fold " + std::to_string(f) + ": " + errors[f]);
  }

  std::ostringstream fold_csv;
  fold_csv << "fold," << eval_csv_header() << '\n';
  EvalReport mean;
  mean.tree_model = std::string(model_kind_name(mc.kind));
  mean.edge_direction = std::string(edge_direction_label(mc.kind));
  Json per_fold = Json::array();
  for (std::size_t f = 0; f < reports.size(); ++f) {
    const auto& r = reports[f];
    fold_csv << f << ',' << eval_csv_row(r) << '\n';
    per_fold.push_back(eval_report_to_json(r));
    const double w = 1.0 / static_cast<double>(reports.size());
    mean.q.median += w * r.q.median;
    mean.q.p90 += w * r.q.p90;
    mean.q.p99 += w * r.q.p99;
    mean.q.top50_mean += w * r.q.top50_mean;
    mean.q.top90_mean += w * r.q.top90_mean;
    mean.q.top99_mean += w * r.q.top99_mean;
    mean.spearman += w * r.spearman;
  }
  write_text(out / "folds.csv", fold_csv.str());
  write_text(out / "report.csv", eval_csv_header() + "\n" + eval_csv_row(mean) + "\n");
  Json report = eval_report_to_json(mean);
  report["folds"] = per_fold;
  write_text(out / "report.json", report.dump(2) + "\n");
  log(std::to_string(folds.size()) + "-fold mean median q-error " + fmt(mean.q.median));
  return 0;
}

int cmd_train(const Json& cfg) {
  const auto data = require_string(cfg, "/data/dir", "--data");
  const ModelConfig mc = model_config(cfg);
  TrainConfig tc = train_config(cfg);
  const int folds = get_or(cfg, "/train/kfold", 0);
  if (folds > 0) tc.folds = folds;
  tc.validate();
  const Dataset ds = read_dataset(data);
  Json resolved = cfg;
  resolved["model"] = model_config_to_json(mc);
  resolved["train"].update(train_config_to_json(tc));
  const fs::path out = prepare_out(resolved);
  if (requires_binary_trees(mc.kind)) {
    const bool all_binary = std::all_of(ds.train.begin(), ds.train.end(), [](const PlanTree& p) { return is_binary(p.root); });
    if (!all_binary) log("tree_cnn: binarizing non-binary plans");
  }
  if (folds > 0) return train_kfold(cfg, ds, out, mc, tc);

  FitResult r = fit(ds.catalog, ds.train, ds.val, mc, tc, [](const EpochStats& e) {
    log("epoch " + std::to_string(e.epoch) + " train " + fmt(e.train_loss) + " val " + fmt(e.val_loss));
  });
  save_checkpoint(r.checkpoint, (out / "model.ckpt").string());
  write_text(out / "curve.csv", curve_csv(r.curve));
  log("best epoch " + std::to_string(r.checkpoint.best_epoch) + " of " + std::to_string(r.checkpoint.epochs_run) +
      ", checkpoint " + (out / "model.ckpt").string());
  return 0;
}

// -- eval / select / bench -------------------------------------------------------

struct Predictor {
  std::optional<Checkpoint> ckpt;
  std::string name;
  std::string direction;
};

Predictor load_predictor(const Json& cfg, const Catalog& catalog) {
  Predictor p;
  if (get_or(cfg, "/oracle_as_model", false)) {
    p.name = "oracle";
    p.direction = "-";
    return p;
  }
  p.ckpt = load_checkpoint(require_string(cfg, "/checkpoint", "--checkpoint"), catalog);
  p.name = std::string(model_kind_name(p.ckpt->config.kind));
  p.direction = std::string(edge_direction_label(p.ckpt->config.kind));
  return p;
}

std::vector<double> predict(Predictor& p, const Catalog& catalog, std::span<const PlanTree> plans) {
  if (!p.ckpt) return actual_latencies(plans);
  return predict_latency_ms(*p.ckpt, prepare_graphs(plans, catalog, p.ckpt->config.kind));
}

int cmd_eval(const Json& cfg) {
  const Dataset ds = read_dataset(require_string(cfg, "/data/dir", "--data"));
  Predictor model = load_predictor(cfg, ds.catalog);
  const auto plans = split_of(ds, get_or<std::string>(cfg, "/split", "test"));
  if (plans.size() < 2) throw ValidationError("eval needs at least 2 plans");
  const fs::path out = prepare_out(cfg);

  const auto predicted = predict(model, ds.catalog, plans);
  EvalReport report = evaluate(model.name, model.direction, predicted, actual_latencies(plans));
  const int reps = get_or(cfg, "/reps", 3);
  if (model.ckpt && reps > 0) {
    auto fast = model.ckpt->model.cast<float>();
    const auto graphs = prepare_graphs(plans, ds.catalog, model.ckpt->config.kind);
    const auto n = std::min<std::size_t>(graphs.size(), static_cast<std::size_t>(get_or(cfg, "/timing_plans", 100)));
    report.timing = time_inference(fast, std::span<const PlanGraph>(graphs).first(n), reps);
  }

  std::ostringstream samples;
  samples << "plan_id,predicted_ms,actual_ms,q_error\n";
  for (std::size_t i = 0; i < plans.size(); ++i) {
    samples << plans[i].plan_id << ',' << fmt(predicted[i]) << ',' << fmt(*plans[i].latency_ms) << ','
            << fmt(report.q_errors[i]) << '\n';
  }
  write_text(out / "qerrors.csv", samples.str());
  write_text(out / "report.csv", eval_csv_header() + "\n" + eval_csv_row(report) + "\n");
  write_text(out / "report.json", eval_report_to_json(report).dump(2) + "\n");
  log(model.name + ": median q-error " + fmt(report.q.median) + ", spearman " + fmt(report.spearman));
  return 0;
}

std::map<std::string, std::vector<std::size_t>> group_by_query(std::span<const PlanTree> plans) {
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < plans.size(); ++i) groups[plans[i].query_id].push_back(i);
  return groups;
}

std::string selection_csv_header() { return "tree_model,median,p90,p99,top50_mean,top90_mean,top99_mean"; }

std::string selection_csv_row(const std::string& name, const QuantileReport& q) {
  return name + "," + fmt(q.median) + "," + fmt(q.p90) + "," + fmt(q.p99) + "," + fmt(q.top50_mean) + "," +
         fmt(q.top90_mean) + "," + fmt(q.top99_mean);
}

int cmd_select(const Json& cfg) {
  const Dataset ds = read_dataset(require_string(cfg, "/data/dir", "--data"));
  Predictor model = load_predictor(cfg, ds.catalog);
  const auto plans = split_of(ds, get_or<std::string>(cfg, "/split", "test"));
  if (plans.empty()) throw ValidationError("select: split has no plans");
  const fs::path out = prepare_out(cfg);

  const auto predicted = predict(model, ds.catalog, plans);
  Rng rng(get_or<std::uint64_t>(cfg, "/seed", 0));
  std::vector<double> subopt, random_subopt;
  std::ostringstream per_query;
  per_query << "query_id,candidates,chosen_plan,suboptimality,random_suboptimality\n";
  for (const auto& [qid, members] : group_by_query(plans)) {
    std::vector<Candidate> cands, random_cands;
    const auto pick = std::uniform_int_distribution<std::size_t>(0, members.size() - 1)(rng);
    for (std::size_t j = 0; j < members.size(); ++j) {
      const auto& p = plans[members[j]];
      cands.push_back({predicted[members[j]], *p.latency_ms});
      random_cands.push_back({j == pick ? 0.0 : 1.0, *p.latency_ms});
    }
    std::size_t chosen = 0;
    for (std::size_t j = 1; j < cands.size(); ++j) {
      if (cands[j].predicted_ms < cands[chosen].predicted_ms) chosen = j;
    }
    subopt.push_back(plan_suboptimality(cands));
    random_subopt.push_back(plan_suboptimality(random_cands));
    per_query << qid << ',' << members.size() << ',' << plans[members[chosen]].plan_id << ',' << fmt(subopt.back())
              << ',' << fmt(random_subopt.back()) << '\n';
  }
  const auto q = quantile_report(subopt);
  const auto rq = quantile_report(random_subopt);
  write_text(out / "suboptimality.csv", per_query.str());
  write_text(out / "report.csv", selection_csv_header() + "\n" + selection_csv_row(model.name, q) + "\n" +
                                     selection_csv_row("random", rq) + "\n");
  write_text(out / "report.json", Json{{"tree_model", model.name},
                                       {"queries", subopt.size()},
                                       {"plan_suboptimality", quantile_report_to_json(q)},
                                       {"random_choice", quantile_report_to_json(rq)}}
                                          .dump(2) + "\n");
  log(model.name + ": median suboptimality " + fmt(q.median) + " over " + std::to_string(subopt.size()) +
      " queries (random choice " + fmt(rq.median) + ")");
  return 0;
}

int cmd_bench(const Json& cfg) {
  const int reps = get_or(cfg, "/reps", 5);
  if (reps <= 0) throw ValidationError("--reps must be positive");
  const Dataset ds = read_dataset(require_string(cfg, "/data/dir", "--data"));
  const auto checkpoints = get_or<std::vector<std::string>>(cfg, "/checkpoints", {});
  if (checkpoints.empty()) throw UsageError("bench needs at least one --checkpoint");
  const auto plans = split_of(ds, get_or<std::string>(cfg, "/split", "test"));
  const auto n = std::min<std::size_t>(plans.size(), static_cast<std::size_t>(get_or(cfg, "/plans", 100)));
  if (n == 0) throw ValidationError("bench: no plans");
  const fs::path out = prepare_out(cfg);

  std::ostringstream csv;
  csv << "tree_model,edge_direction,checkpoint,plans,repetitions,mean_ms,std_ms\n";
  Json rows = Json::array();
  for (const auto& path : checkpoints) {
    Checkpoint ckpt = load_checkpoint(path, ds.catalog);
    auto fast = ckpt.model.cast<float>();
    const auto graphs = prepare_graphs(plans.first(n), ds.catalog, ckpt.config.kind);
    const auto t = time_inference(fast, graphs, reps);
    const std::string name(model_kind_name(ckpt.config.kind));
    csv << name << ',' << edge_direction_label(ckpt.config.kind) << ',' << path << ',' << n << ',' << reps << ','
        << fmt(t.mean_ms) << ',' << fmt(t.std_ms) << '\n';
    rows.push_back({{"tree_model", name}, {"checkpoint", path}, {"plans", n}, {"repetitions", reps},
                    {"mean_ms", t.mean_ms}, {"std_ms", t.std_ms}});
    log(name + ": " + fmt(t.mean_ms) + " ms/plan");
  }
  write_text(out / "report.csv", csv.str());
  write_text(out / "report.json", rows.dump(2) + "\n");
  return 0;
}

// -- gradcheck -------------------------------------------------------------------

std::optional<Primitive> parse_primitive(const std::string& name) {
  for (int i = 0; i <= static_cast<int>(Primitive::Dropout); ++i) {
    const auto p = static_cast<Primitive>(i);
    if (primitive_name(p) == name) return p;
  }
  return std::nullopt;
}

int cmd_gradcheck(const Json& cfg) {
  std::vector<ModelKind> kinds;
  const auto only = get_or<std::string>(cfg, "/model/kind", "");
  if (only.empty() || only == "all") {
    kinds = all_model_kinds();
  } else {
    const auto k = parse_model_kind(only);
    if (!k) throw ValidationError("unknown model kind '" + only + "' (valid: " + model_kind_list() + ")");
    kinds = {*k};
  }
  std::optional<Primitive> corrupt;
  if (get_or(cfg, "/corrupt", false)) {
    const auto name = get_or<std::string>(cfg, "/corrupt_primitive", "matrix-multiply");
    corrupt = parse_primitive(name);
    if (!corrupt) throw ValidationError("unknown primitive '" + name + "'");
  }
  const int seeds = get_or(cfg, "/seeds", 10);
  const auto base = get_or<std::uint64_t>(cfg, "/seed", 0);
  const double tol = get_or(cfg, "/tolerance", 1e-4);
  std::optional<fs::path> out;
  if (!get_or<std::string>(cfg, "/out", "").empty()) out = prepare_out(cfg);

  std::ostringstream csv;
  csv << "tree_model,seed,nodes,max_relative_error,parameter,coordinate,passed\n";
  bool ok = true;
  for (auto kind : kinds) {
    double worst = 0.0;
    bool kind_ok = true;
    for (int s = 0; s < seeds; ++s) {
      const auto r = check_model_gradients(kind, base + static_cast<std::uint64_t>(s), corrupt, 1e-5, tol);
      worst = std::max(worst, r.report.max_relative_error);
      kind_ok = kind_ok && r.report.passed;
      csv << model_kind_name(kind) << ',' << r.seed << ',' << r.nodes << ',' << fmt(r.report.max_relative_error) << ','
          << r.report.offending_parameter << ',' << r.report.offending_coordinate << ','
          << (r.report.passed ? "true" : "false") << '\n';
    }
    std::cout << (kind_ok ? "PASS " : "FAIL ") << model_kind_name(kind) << " max relative error " << worst << '\n';
    ok = ok && kind_ok;
  }
  if (out) write_text(*out / "report.csv", csv.str());
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Query plan representation learning: data generation, training, evaluation"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  cli::Overrides global;
  app.add_option("--config", config_path, "YAML or JSON run configuration");
  global.add<std::uint64_t>(&app, "--seed", "/seed", "Random seed");
  global.add<std::string>(&app, "--out", "/out", "Output directory");
  global.add<int>(&app, "--jobs", "/jobs", "Parallel folds");
  global.add_flag(&app, "--force", "/force", "Overwrite an existing output directory");

  std::map<CLI::App*, std::pair<cli::Overrides, std::function<int(const Json&)>>> commands;
  auto command = [&](const std::string& name, const std::string& help, std::function<int(const Json&)> run) {
    CLI::App* sub = app.add_subcommand(name, help);
    commands[sub].second = std::move(run);
    return std::pair<CLI::App*, cli::Overrides*>{sub, &commands[sub].first};
  };

  {
    auto [sub, o] = command("gen-data", "Generate a synthetic catalog and labelled plan dataset", cmd_gen_data);
    o->add<std::string>(sub, "--catalog", "/data/catalog", "Existing catalog JSON");
    o->add<int>(sub, "--tables", "/gen/n_tables", "Generate a catalog with this many tables");
    o->add<int>(sub, "--queries", "/gen/queries", "Number of queries");
    o->add<int>(sub, "--candidates-per-query", "/gen/candidates_per_query", "Candidate plans per query");
    o->add<double>(sub, "--noise", "/gen/noise_sigma", "Lognormal label noise sigma");
    o->add<int>(sub, "--max-joins", "/gen/max_joins", "Maximum joins per query");
  }
  {
    auto [sub, o] = command("train", "Train a cost model", cmd_train);
    o->add<std::string>(sub, "--data", "/data/dir", "Dataset directory");
    o->add<std::string>(sub, "--model", "/model/kind", "Model kind: " + model_kind_list());
    o->add<int>(sub, "--epochs", "/train/max_epochs", "Maximum epochs");
    o->add<int>(sub, "--patience", "/train/patience", "Early-stopping patience");
    o->add<double>(sub, "--lr", "/train/learning_rate", "Adam learning rate");
    o->add<std::size_t>(sub, "--batch", "/train/batch_size", "Mini-batch size");
    o->add<int>(sub, "--kfold", "/train/kfold", "Cross-validate over k folds");
    o->add<int>(sub, "--layers", "/model/layers", "GNN / Tree-CNN layers");
    o->add<Index>(sub, "--hidden", "/model/hidden", "Hidden width");
    o->add<int>(sub, "--heads", "/model/heads", "Attention heads");
    o->add<double>(sub, "--dropout", "/model/dropout", "Dropout rate");
  }
  for (const char* name : {"eval", "select"}) {
    const bool is_eval = std::string(name) == "eval";
    auto [sub, o] = command(name, is_eval ? "Q-error, Spearman and inference-time report" : "Plan-selection suboptimality report",
                            is_eval ? cmd_eval : cmd_select);
    o->add<std::string>(sub, "--data", "/data/dir", "Dataset directory");
    o->add<std::string>(sub, "--checkpoint", "/checkpoint", "Trained checkpoint");
    o->add<std::string>(sub, "--split", "/split", "train, val or test");
    o->add_flag(sub, "--oracle-as-model", "/oracle_as_model", "Debug: use true labels as predictions");
    if (is_eval) {
      o->add<int>(sub, "--reps", "/reps", "Timing repetitions (0 skips timing)");
      o->add<int>(sub, "--timing-plans", "/timing_plans", "Plans used for timing");
    }
  }
  {
    auto [sub, o] = command("gradcheck", "Finite-difference gradient check of every model kind", cmd_gradcheck);
    o->add<std::string>(sub, "--model", "/model/kind", "Restrict to one model kind");
    o->add<int>(sub, "--seeds", "/seeds", "Random plans per kind");
    o->add_flag(sub, "--corrupt", "/corrupt", "Negative control: corrupt one backward rule");
    o->add<std::string>(sub, "--corrupt-primitive", "/corrupt_primitive", "Primitive to corrupt (default matrix-multiply)");
  }
  {
    auto [sub, o] = command("bench", "Inference timing per checkpoint", cmd_bench);
    o->add<std::string>(sub, "--data", "/data/dir", "Dataset directory");
    o->add<std::vector<std::string>>(sub, "--checkpoint", "/checkpoints", "Checkpoints to time")->expected(1, -1);
    o->add<int>(sub, "--reps", "/reps", "Timing repetitions");
    o->add<int>(sub, "--plans", "/plans", "Plans timed per checkpoint");
    o->add<std::string>(sub, "--split", "/split", "train, val or test");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    for (auto& [sub, entry] : commands) {
      if (!sub->parsed()) continue;
      Json cfg = config_path.empty() ? Json::object() : cli::load_config_file(config_path);
      global.apply(cfg);
      entry.first.apply(cfg);
      cfg["command"] = sub->get_name();
      return entry.second(cfg);
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n" << app.help();
    return 1;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const Json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}

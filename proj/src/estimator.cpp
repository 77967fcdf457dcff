#include "bigg/estimator.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>

namespace bigg {

// -- Labels ----------------------------------------------------------------------

LabelScaler LabelScaler::fit(std::span<const double> latencies_ms) {
  if (latencies_ms.empty()) throw ValidationError("label scaler: no training labels");
  LabelScaler s{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (double y : latencies_ms) {
    if (!(y > 0.0) || !std::isfinite(y)) throw ValidationError("label scaler: latency must be positive and finite");
    const double l = std::log(y);
    s.log_min = std::min(s.log_min, l);
    s.log_max = std::max(s.log_max, l);
  }
  s.validate();
  return s;
}

void LabelScaler::validate() const {
  if (!std::isfinite(log_min) || !std::isfinite(log_max)) throw ValidationError("label scaler: non-finite bounds");
  if (!(log_max > log_min)) {
    throw ValidationError("label scaler: log_max must exceed log_min (all training labels equal?)");
  }
}

double LabelScaler::scale(double latency_ms) const {
  if (!(latency_ms > 0.0)) throw ValidationError("latency must be positive, got " + std::to_string(latency_ms));
  validate();
  return (std::log(latency_ms) - log_min) / (log_max - log_min);
}

double LabelScaler::unscale(double y_out) const { return std::exp(y_out * (log_max - log_min) + log_min); }

double scaled_loss(std::span<const double> y_out, std::span<const double> y_al, const LabelScaler& scaler) {
  if (y_out.size() != y_al.size()) {
    throw ShapeError("loss: " + std::to_string(y_out.size()) + " outputs vs " + std::to_string(y_al.size()) + " labels");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < y_out.size(); ++i) {
    const double d = scaler.scale(y_al[i]) - y_out[i];
    total += d * d;
  }
  return total;
}

// -- Config ----------------------------------------------------------------------

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ValidationError("learning rate must be positive");
  if (batch_size == 0) throw ValidationError("batch size must be positive");
  if (max_epochs < 1) throw ValidationError("max epochs must be at least 1");
  if (patience < 0) throw ValidationError("patience must be nonnegative");
  if (folds < 2) throw ValidationError("fold count must be at least 2");
}

Json train_config_to_json(const TrainConfig& cfg) {
  return Json{{"learning_rate", cfg.learning_rate}, {"batch_size", cfg.batch_size}, {"max_epochs", cfg.max_epochs},
              {"patience", cfg.patience},           {"seed", cfg.seed},             {"folds", cfg.folds}};
}

TrainConfig train_config_from_json(const Json& j) {
  TrainConfig cfg;
  cfg.learning_rate = j.value("learning_rate", cfg.learning_rate);
  cfg.batch_size = j.value("batch_size", cfg.batch_size);
  cfg.max_epochs = j.value("max_epochs", cfg.max_epochs);
  cfg.patience = j.value("patience", cfg.patience);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.folds = j.value("folds", cfg.folds);
  return cfg;
}

// -- Checkpoints -----------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'B', 'I', 'G', 'G', 'C', 'K', 'P', 'T'};

template <typename U>
void write_le(std::ostream& out, U v) {
  unsigned char buf[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(buf), sizeof(U));
}

template <typename U>
U read_le(std::istream& in) {
  unsigned char buf[sizeof(U)];
  in.read(reinterpret_cast<char*>(buf), sizeof(U));
  if (!in) throw Error("checkpoint: truncated file");
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(buf[i]) << (8 * i);
  return v;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, std::ostream& out) {
  Json tensors = Json::array();
  std::uint64_t offset = 0;
  for (const auto& p : ckpt.model.params()) {
    tensors.push_back({{"name", p.name},
                       {"shape", {p.value.rows(), p.value.cols()}},
                       {"precision", "f64"},
                       {"offset", offset}});
    offset += static_cast<std::uint64_t>(p.value.size()) * sizeof(double);
  }
  const Json header{{"config", model_config_to_json(ckpt.config)},
                    {"scaler", {{"log_min", ckpt.scaler.log_min}, {"log_max", ckpt.scaler.log_max}}},
                    {"catalog_fingerprint", ckpt.catalog_fingerprint},
                    {"seed", ckpt.seed},
                    {"epochs_run", ckpt.epochs_run},
                    {"best_epoch", ckpt.best_epoch},
                    {"tensors", tensors}};
  const std::string text = header.dump();
  out.write(kMagic, sizeof(kMagic));
  write_le<std::uint32_t>(out, Checkpoint::kVersion);
  write_le<std::uint64_t>(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& p : ckpt.model.params()) {
    for (Index i = 0; i < p.value.size(); ++i) write_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(p.value.data()[i]));
  }
  if (!out) throw Error("checkpoint: write failed");
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("checkpoint: cannot open '" + path + "' for writing");
  save_checkpoint(ckpt, out);
}

Checkpoint load_checkpoint(std::istream& in, const Catalog& catalog) {
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || !std::equal(magic, magic + sizeof(magic), kMagic)) throw ValidationError("checkpoint: bad magic bytes");
  const auto version = read_le<std::uint32_t>(in);
  if (version != Checkpoint::kVersion) {
    throw ValidationError("checkpoint: unsupported version " + std::to_string(version));
  }
  const auto length = read_le<std::uint64_t>(in);
  std::string text(length, '\0');
  in.read(text.data(), static_cast<std::streamsize>(length));
  if (!in) throw Error("checkpoint: truncated header");
  const Json header = Json::parse(text);

  Checkpoint ckpt;
  ckpt.config = model_config_from_json(header.at("config"));
  ckpt.scaler = LabelScaler{header.at("scaler").at("log_min").get<double>(),
                            header.at("scaler").at("log_max").get<double>()};
  ckpt.catalog_fingerprint = header.at("catalog_fingerprint").get<std::uint64_t>();
  ckpt.seed = header.at("seed").get<std::uint64_t>();
  ckpt.epochs_run = header.at("epochs_run").get<int>();
  ckpt.best_epoch = header.at("best_epoch").get<int>();
  if (ckpt.catalog_fingerprint != catalog.fingerprint()) {
    throw ValidationError("checkpoint: catalog fingerprint mismatch (checkpoint was trained on a different catalog)");
  }
  ckpt.model = CostModel<double>::create(ckpt.config, catalog, ckpt.seed);
  auto& ps = ckpt.model.params();
  const auto& tensors = header.at("tensors");
  if (tensors.size() != ps.size()) {
    throw ValidationError("checkpoint: " + std::to_string(tensors.size()) + " tensors, model expects " +
                          std::to_string(ps.size()));
  }
  for (const auto& t : tensors) {
    const auto name = t.at("name").get<std::string>();
    if (!ps.contains(name)) throw ValidationError("checkpoint: unexpected tensor '" + name + "'");
    if (t.at("precision").get<std::string>() != "f64") throw ValidationError("checkpoint: unsupported precision");
    auto& p = ps.at(name);
    const auto rows = t.at("shape")[0].get<Index>();
    const auto cols = t.at("shape")[1].get<Index>();
    if (rows != p.value.rows() || cols != p.value.cols()) {
      throw ShapeError("checkpoint: tensor '" + name + "' has shape [" + std::to_string(rows) + "x" +
                       std::to_string(cols) + "], model expects " + shape_string(p.value));
    }
    for (Index i = 0; i < p.value.size(); ++i) p.value.data()[i] = std::bit_cast<double>(read_le<std::uint64_t>(in));
  }
  return ckpt;
}

Checkpoint load_checkpoint(const std::string& path, const Catalog& catalog) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("checkpoint: cannot open '" + path + "'");
  return load_checkpoint(in, catalog);
}

// -- Training --------------------------------------------------------------------

std::vector<PlanGraph> prepare_graphs(std::span<const PlanTree> plans, const Catalog& catalog, ModelKind kind) {
  std::vector<PlanGraph> graphs;
  graphs.reserve(plans.size());
  for (const auto& p : plans) {
    graphs.push_back(featurize_plan(requires_binary_trees(kind) ? binarize(p) : p, catalog));
  }
  return graphs;
}

std::vector<double> predict_latency_ms(Checkpoint& ckpt, std::span<const PlanGraph> graphs) {
  auto y = predict_scaled(ckpt.model, graphs);
  for (double& v : y) v = ckpt.scaler.unscale(v);
  return y;
}

namespace {

std::vector<double> latencies(std::span<const PlanTree> plans, const char* split) {
  std::vector<double> out;
  for (const auto& p : plans) {
    if (!p.latency_ms) throw ValidationError(std::string(split) + " plan '" + p.plan_id + "' has no latency");
    out.push_back(*p.latency_ms);
  }
  return out;
}

}  // namespace

FitResult fit(const Catalog& catalog, std::span<const PlanTree> train, std::span<const PlanTree> val,
              const ModelConfig& model_config, const TrainConfig& train_config, const EpochCallback& on_epoch) {
  train_config.validate();
  if (train.empty()) throw ValidationError("fit: empty training split");
  if (val.empty()) throw ValidationError("fit: empty validation split");
  const auto train_y = latencies(train, "training");
  const auto val_y = latencies(val, "validation");

  FitResult result;
  Checkpoint& ckpt = result.checkpoint;
  ckpt.config = model_config;
  ckpt.scaler = LabelScaler::fit(train_y);
  ckpt.catalog_fingerprint = catalog.fingerprint();
  ckpt.seed = train_config.seed;
  ckpt.model = CostModel<double>::create(model_config, catalog, train_config.seed);

  const auto train_graphs = prepare_graphs(train, catalog, model_config.kind);
  const auto val_graphs = prepare_graphs(val, catalog, model_config.kind);
  std::vector<double> targets;
  for (double y : train_y) targets.push_back(ckpt.scaler.scale(y));

  Rng streams(train_config.seed ^ 0x9e3779b97f4a7c15ULL);
  Rng order_rng(streams());
  Rng dropout_rng(streams());
  Rng* dropout = model_config.dropout > 0.0 ? &dropout_rng : nullptr;
  const AdamConfig adam{train_config.learning_rate};

  auto& ps = ckpt.model.params();
  std::vector<Tensor<double>> best;
  double best_loss = std::numeric_limits<double>::infinity();
  int since_best = 0;
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (int epoch = 1; epoch <= train_config.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), order_rng);
    double train_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += train_config.batch_size) {
      const std::size_t end = std::min(order.size(), start + train_config.batch_size);
      std::vector<const PlanGraph*> ptrs;
      Tensor<double> target(static_cast<Index>(end - start), 1);
      for (std::size_t i = start; i < end; ++i) {
        ptrs.push_back(&train_graphs[order[i]]);
        target(static_cast<Index>(i - start), 0) = targets[order[i]];
      }
      const BatchLayout layout = make_batch(std::span<const PlanGraph* const>(ptrs));
      Tape<double> tape(true);
      const auto diff = ckpt.model.forward(tape, layout, dropout) - tape.constant(std::move(target));
      const auto sse = sum(mul(diff, diff));
      train_loss += sse.value()(0, 0);
      tape.backward(scale(sse, 1.0 / static_cast<double>(end - start)));
      adam_step(ps, adam);
    }

    const auto val_out = predict_scaled(ckpt.model, std::span<const PlanGraph>(val_graphs));
    const EpochStats stats{epoch, train_loss, scaled_loss(val_out, val_y, ckpt.scaler)};
    result.curve.push_back(stats);
    if (on_epoch) on_epoch(stats);
    ckpt.epochs_run = epoch;
    if (stats.val_loss < best_loss) {
      best_loss = stats.val_loss;
      ckpt.best_epoch = epoch;
      since_best = 0;
      best.clear();
      for (const auto& p : ps) best.push_back(p.value);
    } else {
      ++since_best;
    }
    if (since_best >= train_config.patience) break;
  }

  std::size_t i = 0;
  for (auto& p : ps) p.value = best[i++];
  return result;
}

std::vector<Fold> kfold(std::span<const std::string> query_ids, int k, std::uint64_t seed) {
  if (k < 2) throw ValidationError("kfold: k must be at least 2");
  std::map<std::string, std::vector<std::size_t>> by_query;
  std::vector<std::string> groups;
  for (std::size_t i = 0; i < query_ids.size(); ++i) {
    auto [it, inserted] = by_query.try_emplace(query_ids[i]);
    if (inserted) groups.push_back(query_ids[i]);
    it->second.push_back(i);
  }
  if (groups.size() < static_cast<std::size_t>(k)) {
    throw ValidationError("kfold: " + std::to_string(groups.size()) + " query groups cannot fill " +
                          std::to_string(k) + " folds");
  }
  Rng rng(seed);
  std::shuffle(groups.begin(), groups.end(), rng);
  std::vector<Fold> folds(static_cast<std::size_t>(k));
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const auto& members = by_query[groups[g]];
    for (std::size_t f = 0; f < folds.size(); ++f) {
      auto& dst = f == g % folds.size() ? folds[f].test : folds[f].train;
      dst.insert(dst.end(), members.begin(), members.end());
    }
  }
  for (auto& f : folds) {
    std::sort(f.train.begin(), f.train.end());
    std::sort(f.test.begin(), f.test.end());
  }
  return folds;
}

}  // namespace bigg

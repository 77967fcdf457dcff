#include "bigg/model.hpp"

#include <array>

namespace bigg {

namespace {

struct KindInfo {
  ModelKind kind;
  std::string_view name;
  std::string_view direction;
};

constexpr std::array<KindInfo, 10> kKinds{{
    {ModelKind::Bigg, "bigg", "bidirectional"},
    {ModelKind::GnnAddPoolSingle, "gnn_addpool_single", "child_to_parent"},
    {ModelKind::GnnGruSingle, "gnn_gru_single", "child_to_parent"},
    {ModelKind::GnnGruUndirected, "gnn_gru_undirected", "undirected"},
    {ModelKind::BiggAddPool, "bigg_addpool", "bidirectional"},
    {ModelKind::Lstm, "lstm", "-"},
    {ModelKind::Gru, "gru", "-"},
    {ModelKind::LstmAttention, "lstm_attention", "-"},
    {ModelKind::TreeLstm, "tree_lstm", "-"},
    {ModelKind::TreeCnn, "tree_cnn", "-"},
}};

const KindInfo& info(ModelKind kind) {
  for (const auto& k : kKinds) {
    if (k.kind == kind) return k;
  }
  throw Error("unknown model kind");
}

}  // namespace

std::string_view model_kind_name(ModelKind kind) { return info(kind).name; }

std::string_view edge_direction_label(ModelKind kind) { return info(kind).direction; }

std::optional<ModelKind> parse_model_kind(std::string_view name) {
  for (const auto& k : kKinds) {
    if (k.name == name) return k.kind;
  }
  return std::nullopt;
}

const std::vector<ModelKind>& all_model_kinds() {
  static const std::vector<ModelKind> kinds = [] {
    std::vector<ModelKind> v;
    for (const auto& k : kKinds) v.push_back(k.kind);
    return v;
  }();
  return kinds;
}

std::string model_kind_list() {
  std::string out;
  for (const auto& k : kKinds) {
    if (!out.empty()) out += ", ";
    out += k.name;
  }
  return out;
}

bool requires_binary_trees(ModelKind kind) { return kind == ModelKind::TreeCnn; }

Json model_config_to_json(const ModelConfig& cfg) {
  return Json{{"kind", std::string(model_kind_name(cfg.kind))},
              {"layers", cfg.layers},
              {"hidden", cfg.hidden},
              {"heads", cfg.heads},
              {"dropout", cfg.dropout},
              {"type_width", cfg.encoder.type_width},
              {"column_width", cfg.encoder.column_width},
              {"head_hidden1", cfg.head_hidden1},
              {"head_hidden2", cfg.head_hidden2}};
}

ModelConfig model_config_from_json(const Json& j) {
  ModelConfig cfg;
  const auto name = j.value("kind", std::string(model_kind_name(cfg.kind)));
  const auto kind = parse_model_kind(name);
  if (!kind) throw ValidationError("unknown model kind '" + name + "' (valid: " + model_kind_list() + ")");
  cfg.kind = *kind;
  cfg.layers = j.value("layers", cfg.layers);
  cfg.hidden = j.value("hidden", cfg.hidden);
  cfg.heads = j.value("heads", cfg.heads);
  cfg.dropout = j.value("dropout", cfg.dropout);
  cfg.encoder.type_width = j.value("type_width", cfg.encoder.type_width);
  cfg.encoder.column_width = j.value("column_width", cfg.encoder.column_width);
  cfg.head_hidden1 = j.value("head_hidden1", cfg.head_hidden1);
  cfg.head_hidden2 = j.value("head_hidden2", cfg.head_hidden2);
  if (cfg.layers < 0) throw ValidationError("layers must be nonnegative");
  if (cfg.heads < 1) throw ValidationError("heads must be at least 1");
  if (cfg.hidden < 1 || cfg.head_hidden1 < 1 || cfg.head_hidden2 < 1 || cfg.encoder.type_width < 1 ||
      cfg.encoder.column_width < 1) {
    throw ValidationError("layer widths must be positive");
  }
  if (!(cfg.dropout >= 0.0 && cfg.dropout < 1.0)) throw ValidationError("dropout must lie in [0, 1)");
  return cfg;
}

template class CostModel<double>;
template class CostModel<float>;

}  // namespace bigg

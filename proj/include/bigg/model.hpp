#pragma once

#include "bigg/encoder.hpp"

#include <optional>
#include <string_view>

namespace bigg {

enum class ModelKind {
  Bigg,
  GnnAddPoolSingle,
  GnnGruSingle,
  GnnGruUndirected,
  BiggAddPool,
  Lstm,
  Gru,
  LstmAttention,
  TreeLstm,
  TreeCnn,
};

std::string_view model_kind_name(ModelKind kind);
std::optional<ModelKind> parse_model_kind(std::string_view name);
const std::vector<ModelKind>& all_model_kinds();
std::string model_kind_list();
/// Edge-direction label ("-" for non-GNN models).
std::string_view edge_direction_label(ModelKind kind);
bool requires_binary_trees(ModelKind kind);

struct ModelConfig {
  ModelKind kind = ModelKind::Bigg;
  int layers = 3;
  Index hidden = 128;
  int heads = 1;
  double dropout = 0.1;
  EncoderConfig encoder;
  Index head_hidden1 = 128;
  Index head_hidden2 = 64;
};

Json model_config_to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const Json& j);

/// Parameters of whichever tree model the config selects; unused members stay empty.
struct TreeParams {
  std::vector<BiggLayerParams> bigg;
  std::vector<ConvParams> conv;
  GruParams gru;
  LstmParams lstm;
  AttentionParams attention;
  TreeLstmParams tree_lstm;
  std::vector<TreeConvParams> tree_conv;
};

struct HeadParams {
  Linear hidden1, hidden2, output;
};

template <typename Scalar>
TreeParams make_tree_params(ParamSet<Scalar>& ps, const ModelConfig& cfg, Index in, Rng& rng) {
  if (cfg.layers < 0) throw Error("layers must be nonnegative");
  if (cfg.heads < 1) throw Error("heads must be at least 1");
  TreeParams t;
  const Index h = cfg.hidden;
  auto width = [&](int layer) { return layer == 0 ? in : h; };
  switch (cfg.kind) {
    case ModelKind::Bigg:
    case ModelKind::BiggAddPool:
      for (int l = 0; l < cfg.layers; ++l) {
        t.bigg.push_back(make_bigg_layer(ps, "tree.layer" + std::to_string(l), width(l), h, cfg.heads, rng));
      }
      break;
    case ModelKind::GnnAddPoolSingle:
    case ModelKind::GnnGruSingle:
    case ModelKind::GnnGruUndirected:
      for (int l = 0; l < cfg.layers; ++l) {
        t.conv.push_back(make_conv(ps, "tree.layer" + std::to_string(l), width(l), h, cfg.heads, rng));
      }
      break;
    case ModelKind::Lstm:
      t.lstm = make_lstm(ps, "tree.lstm", in, h, rng);
      break;
    case ModelKind::LstmAttention:
      t.lstm = make_lstm(ps, "tree.lstm", in, h, rng);
      t.attention = make_attention(ps, "tree.attention", h, rng);
      break;
    case ModelKind::Gru:
      break;
    case ModelKind::TreeLstm:
      t.tree_lstm = make_tree_lstm(ps, "tree.tree_lstm", in, h, rng);
      break;
    case ModelKind::TreeCnn:
      for (int l = 0; l < std::max(cfg.layers, 1); ++l) {
        t.tree_conv.push_back(make_tree_conv(ps, "tree.conv" + std::to_string(l), width(l), h, rng));
      }
      break;
  }
  const bool gru_readout = cfg.kind == ModelKind::Bigg || cfg.kind == ModelKind::GnnGruSingle ||
                           cfg.kind == ModelKind::GnnGruUndirected || cfg.kind == ModelKind::Gru;
  if (gru_readout) {
    const bool raw_input = cfg.kind == ModelKind::Gru || cfg.layers == 0;
    t.gru = make_gru(ps, "tree.gru", raw_input ? in : h, h, rng);
  }
  return t;
}

/// Width of the graph embedding produced by tree_forward.
inline Index embedding_width(const ModelConfig& cfg, Index in) {
  const bool addpool = cfg.kind == ModelKind::GnnAddPoolSingle || cfg.kind == ModelKind::BiggAddPool;
  if (addpool && cfg.layers == 0) return in;
  return cfg.hidden;
}

namespace detail {

template <typename Scalar>
Var<Scalar> activate(const Var<Scalar>& x, double rate, Rng* rng) {
  return maybe_dropout(relu(x), rate, rng);
}

}  // namespace detail

/// Node features after the GNN stack (BiGG layers, single-direction, or
/// undirected convolutions), each followed by ReLU and training-time dropout.
template <typename Scalar>
Var<Scalar> gnn_stack(ParamSet<Scalar>& ps, const TreeParams& t, const ModelConfig& cfg, const GraphBatch<Scalar>& g,
                      Rng* rng) {
  const BatchLayout& lay = *g.layout;
  Var<Scalar> x = g.node_features;
  for (const auto& layer : t.bigg) x = detail::activate(bigg_layer(ps, layer, lay, x), cfg.dropout, rng);
  if (!t.conv.empty()) {
    std::vector<Index> src = lay.c2p_src, dst = lay.c2p_dst;
    if (cfg.kind == ModelKind::GnnGruUndirected) {
      src.insert(src.end(), lay.p2c_src.begin(), lay.p2c_src.end());
      dst.insert(dst.end(), lay.p2c_dst.begin(), lay.p2c_dst.end());
    }
    for (const auto& conv : t.conv) {
      x = detail::activate(transformer_conv(ps, conv, x, std::span<const Index>(src), std::span<const Index>(dst)),
                           cfg.dropout, rng);
    }
  }
  return x;
}

/// Graph-level embedding (B x width) for every plan in the batch. `rng` is
/// the dropout source in training mode and null in evaluation mode.
template <typename Scalar>
Var<Scalar> tree_forward(ParamSet<Scalar>& ps, const TreeParams& t, const ModelConfig& cfg,
                         const GraphBatch<Scalar>& g, Rng* rng) {
  const BatchLayout& lay = *g.layout;
  switch (cfg.kind) {
    case ModelKind::Bigg:
    case ModelKind::GnnGruSingle:
    case ModelKind::GnnGruUndirected:
      return gru_aggregate(ps, t.gru, gnn_stack(ps, t, cfg, g, rng), lay.sequences);
    case ModelKind::BiggAddPool:
    case ModelKind::GnnAddPoolSingle:
      return addpool_aggregate(gnn_stack(ps, t, cfg, g, rng), lay);
    case ModelKind::Gru:
      return gru_aggregate(ps, t.gru, g.node_features, lay.sequences);
    case ModelKind::Lstm:
      return lstm_run(ps, t.lstm, g.node_features, lay.sequences).last;
    case ModelKind::LstmAttention:
      return lstm_attention(ps, t.lstm, t.attention, g.node_features, lay.sequences);
    case ModelKind::TreeLstm:
      return tree_lstm_forward(ps, t.tree_lstm, g.node_features, lay);
    case ModelKind::TreeCnn: {
      std::vector<Index> left, right;
      detail::child_slots(lay, left, right);
      Var<Scalar> x = g.node_features;
      for (const auto& conv : t.tree_conv) x = maybe_dropout(tree_conv(ps, conv, lay, x, left, right), cfg.dropout, rng);
      return dynamic_pool(x, lay);
    }
  }
  throw Error("tree_forward: unknown model kind");
}

template <typename Scalar>
HeadParams make_head(ParamSet<Scalar>& ps, const ModelConfig& cfg, Index in, Rng& rng) {
  HeadParams h;
  h.hidden1 = make_linear(ps, "head.fc1", in, cfg.head_hidden1, rng);
  h.hidden2 = make_linear(ps, "head.fc2", cfg.head_hidden1, cfg.head_hidden2, rng);
  h.output = make_linear(ps, "head.out", cfg.head_hidden2, 1, rng);
  return h;
}

/// Two ReLU hidden layers and a sigmoid output: B x d -> B x 1 in (0, 1).
template <typename Scalar>
Var<Scalar> mlp_head(ParamSet<Scalar>& ps, const HeadParams& h, const Var<Scalar>& embedding, double rate, Rng* rng) {
  Var<Scalar> x = maybe_dropout(relu(apply(ps, h.hidden1, embedding)), rate, rng);
  x = maybe_dropout(relu(apply(ps, h.hidden2, x)), rate, rng);
  return sigmoid(apply(ps, h.output, x));
}

/// Encoder + tree model + cost head over one parameter set.
template <typename Scalar>
class CostModel {
 public:
  CostModel() = default;

  static CostModel create(const ModelConfig& cfg, const Catalog& catalog, std::uint64_t seed) {
    CostModel m;
    m.config_ = cfg;
    Rng rng(seed);
    m.encoder_ = make_encoder(m.params_, catalog, cfg.encoder, rng);
    const Index in = m.encoder_.output_dim();
    m.tree_ = make_tree_params(m.params_, cfg, in, rng);
    m.head_ = make_head(m.params_, cfg, embedding_width(cfg, in), rng);
    return m;
  }

  const ModelConfig& config() const { return config_; }
  ParamSet<Scalar>& params() { return params_; }
  const ParamSet<Scalar>& params() const { return params_; }
  const EncoderParams& encoder() const { return encoder_; }
  const TreeParams& tree() const { return tree_; }
  const HeadParams& head() const { return head_; }

  GraphBatch<Scalar> encode(Tape<Scalar>& tape, const BatchLayout& layout) {
    return encode_plan(tape, params_, encoder_, layout);
  }

  Var<Scalar> embed(Tape<Scalar>& tape, const BatchLayout& layout, Rng* dropout_rng) {
    return tree_forward(params_, tree_, config_, encode(tape, layout), dropout_rng);
  }

  /// Scaled latency estimates, B x 1.
  Var<Scalar> forward(Tape<Scalar>& tape, const BatchLayout& layout, Rng* dropout_rng) {
    return mlp_head(params_, head_, embed(tape, layout, dropout_rng), config_.dropout, dropout_rng);
  }

  /// Same structure, parameters converted to another precision.
  template <typename Other>
  CostModel<Other> cast() const {
    CostModel<Other> m;
    m.config_ = config_;
    m.params_ = params_.template cast<Other>();
    m.encoder_ = encoder_;
    m.tree_ = tree_;
    m.head_ = head_;
    return m;
  }

 private:
  template <typename>
  friend class CostModel;

  ModelConfig config_;
  ParamSet<Scalar> params_;
  EncoderParams encoder_;
  TreeParams tree_;
  HeadParams head_;
};

}  // namespace bigg

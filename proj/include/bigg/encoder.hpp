#pragma once

#include "bigg/batch.hpp"
#include "bigg/layers.hpp"

namespace bigg {

struct EncoderConfig {
  Index type_width = 16;
  Index column_width = 8;
};

/// Learned part of the node encoder: one FC over the node-type one-hot and a
/// dedicated FC per catalog column over its six-slot predicate code.
struct EncoderParams {
  Linear node_type;
  std::vector<Linear> column;                            // by global column
  std::vector<std::vector<std::size_t>> table_columns;   // global column ids per table
  Index num_operators = 0;
  Index num_tables = 0;
  Index type_width = 0;
  Index column_width = 0;

  Index output_dim() const { return type_width + num_tables + num_tables * column_width; }
};

template <typename Scalar>
EncoderParams make_encoder(ParamSet<Scalar>& ps, const Catalog& catalog, const EncoderConfig& cfg, Rng& rng) {
  EncoderParams e;
  e.num_operators = static_cast<Index>(catalog.operators().size());
  e.num_tables = static_cast<Index>(catalog.tables().size());
  e.type_width = cfg.type_width;
  e.column_width = cfg.column_width;
  e.node_type = make_linear(ps, "encoder.node_type", e.num_operators, cfg.type_width, rng);
  e.table_columns.resize(catalog.tables().size());
  for (const auto& ref : catalog.columns()) {
    e.column.push_back(
        make_linear(ps, "encoder.column." + catalog.qualified_name(ref), kComparatorCount, cfg.column_width, rng));
    e.table_columns[ref.table].push_back(ref.global);
  }
  return e;
}

/// Node features for the given raw rows (N x output_dim):
/// [relu(type FC) | table multi-hot | per table: max over its columns of relu(column FC)].
/// A table block is zero for rows that touch none of that table's columns;
/// rows of synthetic ⊥ nodes are zero throughout.
template <typename Scalar>
Var<Scalar> project_rows(Tape<Scalar>& tape, ParamSet<Scalar>& ps, const EncoderParams& enc,
                         std::span<const RawNodeFeatures* const> rows) {
  const auto n = static_cast<Index>(rows.size());
  const auto n_cols = static_cast<std::size_t>(enc.column.size());
  Tensor<Scalar> onehot = Tensor<Scalar>::Zero(n, enc.num_operators);
  Tensor<Scalar> multihot = Tensor<Scalar>::Zero(n, enc.num_tables);
  bool any_bottom = false;
  for (Index r = 0; r < n; ++r) {
    const auto& f = *rows[static_cast<std::size_t>(r)];
    if (static_cast<Index>(f.node_type_onehot.size()) != enc.num_operators ||
        static_cast<Index>(f.table_multihot.size()) != enc.num_tables) {
      throw ShapeError("project_node: raw features (" + std::to_string(f.node_type_onehot.size()) + " operators, " +
                       std::to_string(f.table_multihot.size()) + " tables) do not match encoder (" +
                       std::to_string(enc.num_operators) + ", " + std::to_string(enc.num_tables) + ")");
    }
    for (Index k = 0; k < enc.num_operators; ++k) onehot(r, k) = static_cast<Scalar>(f.node_type_onehot[static_cast<std::size_t>(k)]);
    for (Index k = 0; k < enc.num_tables; ++k) multihot(r, k) = static_cast<Scalar>(f.table_multihot[static_cast<std::size_t>(k)]);
    for (const auto& entry : f.column_cases) {
      if (entry.first >= n_cols) throw ShapeError("project_node: column index beyond encoder");
    }
    any_bottom = any_bottom || f.bottom;
  }

  std::vector<Var<Scalar>> parts;
  parts.push_back(relu(apply(ps, enc.node_type, tape.constant(std::move(onehot)))));
  parts.push_back(tape.constant(std::move(multihot)));

  const Index d = enc.column_width;
  for (std::size_t t = 0; t < enc.table_columns.size(); ++t) {
    const auto& cols = enc.table_columns[t];
    std::vector<Index> active;
    for (Index r = 0; r < n; ++r) {
      const auto& f = *rows[static_cast<std::size_t>(r)];
      const bool touches = std::any_of(f.column_cases.begin(), f.column_cases.end(), [&](const auto& e) {
        return std::find(cols.begin(), cols.end(), e.first) != cols.end();
      });
      if (touches) active.push_back(r);
    }
    if (active.empty() || cols.empty()) {
      parts.push_back(constant_like<Scalar>(tape, n, d, Scalar(0)));
      continue;
    }
    const auto a = static_cast<Index>(active.size());
    std::vector<Var<Scalar>> embeddings;
    for (std::size_t c : cols) {
      Tensor<Scalar> cases(a, kComparatorCount);
      for (Index k = 0; k < a; ++k) {
        const auto code = rows[static_cast<std::size_t>(active[static_cast<std::size_t>(k)])]->cases(c);
        for (int s = 0; s < kComparatorCount; ++s) cases(k, s) = static_cast<Scalar>(code[static_cast<std::size_t>(s)]);
      }
      Var<Scalar> e = relu(apply(ps, enc.column[c], tape.constant(std::move(cases))));
      embeddings.push_back(cols.size() == 1 ? e : reshape(e, a * d, 1));
    }
    Var<Scalar> block = embeddings[0];
    if (cols.size() > 1) {
      block = reshape(row_max(concat(std::span<const Var<Scalar>>(embeddings), 1)), a, d);
    }
    parts.push_back(a == n ? block : scatter_add_rows(block, std::span<const Index>(active), n));
  }

  Var<Scalar> out = concat(std::span<const Var<Scalar>>(parts), 1);
  if (any_bottom) {
    Tensor<Scalar> keep(n, 1);
    for (Index r = 0; r < n; ++r) keep(r, 0) = rows[static_cast<std::size_t>(r)]->bottom ? Scalar(0) : Scalar(1);
    out = row_scale(tape.constant(std::move(keep)), out);
  }
  return out;
}

template <typename Scalar>
Var<Scalar> project_node(Tape<Scalar>& tape, ParamSet<Scalar>& ps, const EncoderParams& enc,
                         const RawNodeFeatures& raw) {
  const RawNodeFeatures* row = &raw;
  return project_rows(tape, ps, enc, std::span<const RawNodeFeatures* const>(&row, 1));
}

/// Node features plus the batch's graph structure.
template <typename Scalar>
struct GraphBatch {
  Var<Scalar> node_features;
  const BatchLayout* layout = nullptr;
};

template <typename Scalar>
GraphBatch<Scalar> encode_plan(Tape<Scalar>& tape, ParamSet<Scalar>& ps, const EncoderParams& enc,
                               const BatchLayout& layout) {
  std::vector<const RawNodeFeatures*> rows;
  rows.reserve(static_cast<std::size_t>(layout.num_rows));
  for (Index r = 0; r < layout.num_rows; ++r) rows.push_back(&layout.row_features(r));
  return GraphBatch<Scalar>{project_rows(tape, ps, enc, std::span<const RawNodeFeatures* const>(rows)), &layout};
}

}  // namespace bigg

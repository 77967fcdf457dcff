#pragma once

#include "bigg/batch.hpp"
#include "bigg/tape.hpp"

#include <cmath>
#include <random>

namespace bigg {

using Rng = std::mt19937_64;

/// uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)), drawn in double so both
/// precisions start from the same values.
template <typename Scalar>
Tensor<Scalar> uniform_init(Index rows, Index cols, Index fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<Index>(fan_in, 1)));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor<Scalar> t(rows, cols);
  for (Index i = 0; i < t.size(); ++i) t.data()[i] = static_cast<Scalar>(dist(rng));
  return t;
}

struct Linear {
  std::size_t weight = 0;
  std::size_t bias = 0;
  bool has_bias = true;
  Index in = 0;
  Index out = 0;
};

template <typename Scalar>
Linear make_linear(ParamSet<Scalar>& ps, const std::string& name, Index in, Index out, Rng& rng,
                   bool bias = true) {
  Linear l;
  l.in = in;
  l.out = out;
  l.has_bias = bias;
  l.weight = ps.add(name + ".weight", uniform_init<Scalar>(in, out, in, rng));
  if (bias) l.bias = ps.add(name + ".bias", uniform_init<Scalar>(1, out, in, rng));
  return l;
}

/// Repeats a 1xd row n times.
template <typename Scalar>
Var<Scalar> broadcast_row(const Var<Scalar>& row, Index n) {
  const std::vector<Index> zeros(static_cast<std::size_t>(n), 0);
  return gather_rows(row, std::span<const Index>(zeros));
}

template <typename Scalar>
Var<Scalar> constant_like(Tape<Scalar>& tape, Index rows, Index cols, Scalar value) {
  return tape.constant(Tensor<Scalar>::Constant(rows, cols, value));
}

/// x (N x in) -> x W + b (N x out)
template <typename Scalar>
Var<Scalar> apply(ParamSet<Scalar>& ps, const Linear& l, const Var<Scalar>& x) {
  auto& tape = *x.tape();
  Var<Scalar> y = matmul(x, tape.param(ps[l.weight]));
  if (l.has_bias) y = y + broadcast_row(tape.param(ps[l.bias]), x.rows());
  return y;
}

/// Inverted dropout with a fresh Bernoulli keep-mask; identity when rng is null.
template <typename Scalar>
Var<Scalar> maybe_dropout(const Var<Scalar>& x, double rate, Rng* rng) {
  if (rng == nullptr || rate <= 0.0) return x;
  std::bernoulli_distribution keep(1.0 - rate);
  Tensor<Scalar> mask(x.rows(), x.cols());
  for (Index i = 0; i < mask.size(); ++i) mask.data()[i] = keep(*rng) ? Scalar(1) : Scalar(0);
  return dropout(x, std::move(mask), static_cast<Scalar>(rate));
}

// -- TransformerConv ----------------------------------------------------------

struct ConvParams {
  Linear root;
  std::vector<Linear> query, key, value;
  Linear merge;  // heads > 1 only, no bias
  Index out = 0;
};

template <typename Scalar>
ConvParams make_conv(ParamSet<Scalar>& ps, const std::string& name, Index in, Index out, int heads, Rng& rng) {
  ConvParams c;
  c.out = out;
  c.root = make_linear(ps, name + ".root", in, out, rng);
  for (int h = 0; h < heads; ++h) {
    const std::string hn = name + ".head" + std::to_string(h);
    c.query.push_back(make_linear(ps, hn + ".query", in, out, rng));
    c.key.push_back(make_linear(ps, hn + ".key", in, out, rng));
    c.value.push_back(make_linear(ps, hn + ".value", in, out, rng));
  }
  if (heads > 1) c.merge = make_linear(ps, name + ".merge", out * heads, out, rng, false);
  return c;
}

/// x'_i = W_root x_i + sum_{j->i} alpha_ij W_value x_j with alpha the softmax,
/// over i's incoming edges, of scaled dot products of query(x_i) and key(x_j).
template <typename Scalar>
Var<Scalar> transformer_conv(ParamSet<Scalar>& ps, const ConvParams& c, const Var<Scalar>& x,
                             std::span<const Index> src, std::span<const Index> dst) {
  const Index n = x.rows();
  Var<Scalar> root = apply(ps, c.root, x);
  if (src.empty()) return root;
  const auto inv_sqrt = static_cast<Scalar>(1.0 / std::sqrt(static_cast<double>(c.out)));
  std::vector<Var<Scalar>> heads;
  for (std::size_t h = 0; h < c.query.size(); ++h) {
    Var<Scalar> q = gather_rows(apply(ps, c.query[h], x), dst);
    Var<Scalar> k = gather_rows(apply(ps, c.key[h], x), src);
    Var<Scalar> v = gather_rows(apply(ps, c.value[h], x), src);
    Var<Scalar> score = scale(row_sum(mul(q, k)), inv_sqrt);
    Var<Scalar> alpha = segment_softmax(score, dst, n);
    heads.push_back(scatter_add_rows(row_scale(alpha, v), dst, n));
  }
  Var<Scalar> agg = heads.size() == 1 ? heads[0]
                                      : matmul(concat(std::span<const Var<Scalar>>(heads), 1),
                                               x.tape()->param(ps[c.merge.weight]));
  return root + agg;
}

// -- Bidirectional layer ------------------------------------------------------

struct BiggLayerParams {
  ConvParams child_to_parent;
  ConvParams parent_to_child;
  std::size_t mix = 0;  // learnable 1x1 p
};

template <typename Scalar>
BiggLayerParams make_bigg_layer(ParamSet<Scalar>& ps, const std::string& name, Index in, Index out, int heads,
                                Rng& rng) {
  BiggLayerParams l;
  l.child_to_parent = make_conv(ps, name + ".c2p", in, out, heads, rng);
  l.parent_to_child = make_conv(ps, name + ".p2c", in, out, heads, rng);
  l.mix = ps.add(name + ".p", Tensor<Scalar>::Constant(1, 1, Scalar(0.5)));
  return l;
}

/// out = p * cp + (1 - p) * pc
template <typename Scalar>
Var<Scalar> mix_directions(const Var<Scalar>& p, const Var<Scalar>& cp, const Var<Scalar>& pc) {
  auto& tape = *p.tape();
  Var<Scalar> one_minus_p = constant_like<Scalar>(tape, 1, 1, Scalar(1)) - p;
  return scale_by(p, cp) + scale_by(one_minus_p, pc);
}

template <typename Scalar>
Var<Scalar> bigg_layer(ParamSet<Scalar>& ps, const BiggLayerParams& l, const BatchLayout& g, const Var<Scalar>& x) {
  Var<Scalar> cp = transformer_conv(ps, l.child_to_parent, x, std::span<const Index>(g.c2p_src),
                                    std::span<const Index>(g.c2p_dst));
  Var<Scalar> pc = transformer_conv(ps, l.parent_to_child, x, std::span<const Index>(g.p2c_src),
                                    std::span<const Index>(g.p2c_dst));
  return mix_directions(x.tape()->param(ps[l.mix]), cp, pc);
}

// -- Readouts -------------------------------------------------------------------

/// Elementwise sum of each plan's rows -> B x d.
template <typename Scalar>
Var<Scalar> addpool_aggregate(const Var<Scalar>& x, const BatchLayout& g) {
  return scatter_add_rows(x, std::span<const Index>(g.plan_of_row), g.num_plans());
}

struct GruParams {
  Linear wz, wr, wh;  // input projections with biases
  std::size_t uz = 0, ur = 0, uh = 0;
  Index hidden = 0;
};

template <typename Scalar>
GruParams make_gru(ParamSet<Scalar>& ps, const std::string& name, Index in, Index hidden, Rng& rng) {
  GruParams p;
  p.hidden = hidden;
  p.wz = make_linear(ps, name + ".wz", in, hidden, rng);
  p.wr = make_linear(ps, name + ".wr", in, hidden, rng);
  p.wh = make_linear(ps, name + ".wh", in, hidden, rng);
  p.uz = ps.add(name + ".uz", uniform_init<Scalar>(hidden, hidden, hidden, rng));
  p.ur = ps.add(name + ".ur", uniform_init<Scalar>(hidden, hidden, hidden, rng));
  p.uh = ps.add(name + ".uh", uniform_init<Scalar>(hidden, hidden, hidden, rng));
  return p;
}

struct LstmParams {
  Linear wi, wf, wo, wg;
  std::size_t ui = 0, uf = 0, uo = 0, ug = 0;
  Index hidden = 0;
};

template <typename Scalar>
LstmParams make_lstm(ParamSet<Scalar>& ps, const std::string& name, Index in, Index hidden, Rng& rng) {
  LstmParams p;
  p.hidden = hidden;
  p.wi = make_linear(ps, name + ".wi", in, hidden, rng);
  p.wf = make_linear(ps, name + ".wf", in, hidden, rng);
  p.wo = make_linear(ps, name + ".wo", in, hidden, rng);
  p.wg = make_linear(ps, name + ".wg", in, hidden, rng);
  p.ui = ps.add(name + ".ui", uniform_init<Scalar>(hidden, hidden, hidden, rng));
  p.uf = ps.add(name + ".uf", uniform_init<Scalar>(hidden, hidden, hidden, rng));
  p.uo = ps.add(name + ".uo", uniform_init<Scalar>(hidden, hidden, hidden, rng));
  p.ug = ps.add(name + ".ug", uniform_init<Scalar>(hidden, hidden, hidden, rng));
  return p;
}

namespace detail {

/// Step t of a left-aligned batch of sequences: the row to read per plan and
/// a 0/1 mask of plans still running.
struct SequenceStep {
  std::vector<Index> rows;
  Tensor<double> active;
  Tensor<double> inactive;
  bool all_active = true;
};

inline std::vector<SequenceStep> sequence_steps(const std::vector<std::vector<Index>>& seqs) {
  std::size_t longest = 0;
  for (const auto& s : seqs) {
    if (s.empty()) throw Error("recurrent readout over an empty sequence");
    longest = std::max(longest, s.size());
  }
  std::vector<SequenceStep> steps(longest);
  const auto b = static_cast<Index>(seqs.size());
  for (std::size_t t = 0; t < longest; ++t) {
    auto& st = steps[t];
    st.active = Tensor<double>::Zero(b, 1);
    st.inactive = Tensor<double>::Zero(b, 1);
    for (std::size_t i = 0; i < seqs.size(); ++i) {
      const bool on = t < seqs[i].size();
      st.rows.push_back(on ? seqs[i][t] : seqs[i].front());
      st.active(static_cast<Index>(i), 0) = on ? 1.0 : 0.0;
      st.inactive(static_cast<Index>(i), 0) = on ? 0.0 : 1.0;
      st.all_active = st.all_active && on;
    }
  }
  return steps;
}

/// Keeps `next` on running rows and `prev` on finished ones, exactly.
template <typename Scalar>
Var<Scalar> masked_update(Tape<Scalar>& tape, const SequenceStep& st, const Var<Scalar>& prev,
                          const Var<Scalar>& next) {
  if (st.all_active) return next;
  Var<Scalar> on = tape.constant(st.active.template cast<Scalar>());
  Var<Scalar> off = tape.constant(st.inactive.template cast<Scalar>());
  return row_scale(on, next) + row_scale(off, prev);
}

}  // namespace detail

/// GRU over each plan's post-order rows from a zero state; returns B x hidden.
template <typename Scalar>
Var<Scalar> gru_aggregate(ParamSet<Scalar>& ps, const GruParams& p, const Var<Scalar>& x,
                          const std::vector<std::vector<Index>>& sequences) {
  auto& tape = *x.tape();
  const auto steps = detail::sequence_steps(sequences);
  const auto b = static_cast<Index>(sequences.size());
  Var<Scalar> xz = apply(ps, p.wz, x);
  Var<Scalar> xr = apply(ps, p.wr, x);
  Var<Scalar> xh = apply(ps, p.wh, x);
  Var<Scalar> uz = tape.param(ps[p.uz]);
  Var<Scalar> ur = tape.param(ps[p.ur]);
  Var<Scalar> uh = tape.param(ps[p.uh]);
  Var<Scalar> h = constant_like<Scalar>(tape, b, p.hidden, Scalar(0));
  Var<Scalar> ones = constant_like<Scalar>(tape, b, p.hidden, Scalar(1));
  for (const auto& st : steps) {
    const std::span<const Index> rows(st.rows);
    Var<Scalar> z = sigmoid(gather_rows(xz, rows) + matmul(h, uz));
    Var<Scalar> r = sigmoid(gather_rows(xr, rows) + matmul(h, ur));
    Var<Scalar> cand = tanh(gather_rows(xh, rows) + matmul(mul(r, h), uh));
    Var<Scalar> next = mul(ones - z, h) + mul(z, cand);
    h = detail::masked_update(tape, st, h, next);
  }
  return h;
}

template <typename Scalar>
struct LstmRun {
  Var<Scalar> last;                       // B x hidden
  std::vector<Var<Scalar>> step_states;   // per step, B x hidden
  std::vector<detail::SequenceStep> steps;
};

template <typename Scalar>
LstmRun<Scalar> lstm_run(ParamSet<Scalar>& ps, const LstmParams& p, const Var<Scalar>& x,
                         const std::vector<std::vector<Index>>& sequences) {
  auto& tape = *x.tape();
  LstmRun<Scalar> run;
  run.steps = detail::sequence_steps(sequences);
  const auto b = static_cast<Index>(sequences.size());
  Var<Scalar> xi = apply(ps, p.wi, x);
  Var<Scalar> xf = apply(ps, p.wf, x);
  Var<Scalar> xo = apply(ps, p.wo, x);
  Var<Scalar> xg = apply(ps, p.wg, x);
  Var<Scalar> ui = tape.param(ps[p.ui]);
  Var<Scalar> uf = tape.param(ps[p.uf]);
  Var<Scalar> uo = tape.param(ps[p.uo]);
  Var<Scalar> ug = tape.param(ps[p.ug]);
  Var<Scalar> h = constant_like<Scalar>(tape, b, p.hidden, Scalar(0));
  Var<Scalar> c = h;
  for (const auto& st : run.steps) {
    const std::span<const Index> rows(st.rows);
    Var<Scalar> i = sigmoid(gather_rows(xi, rows) + matmul(h, ui));
    Var<Scalar> f = sigmoid(gather_rows(xf, rows) + matmul(h, uf));
    Var<Scalar> o = sigmoid(gather_rows(xo, rows) + matmul(h, uo));
    Var<Scalar> g = tanh(gather_rows(xg, rows) + matmul(h, ug));
    Var<Scalar> c_next = mul(f, c) + mul(i, g);
    Var<Scalar> h_next = mul(o, tanh(c_next));
    c = detail::masked_update(tape, st, c, c_next);
    h = detail::masked_update(tape, st, h, h_next);
    run.step_states.push_back(h_next);
  }
  run.last = h;
  return run;
}

struct AttentionParams {
  std::size_t proj = 0;    // hidden x hidden
  std::size_t vector = 0;  // hidden x 1
};

template <typename Scalar>
AttentionParams make_attention(ParamSet<Scalar>& ps, const std::string& name, Index hidden, Rng& rng) {
  AttentionParams a;
  a.proj = ps.add(name + ".proj", uniform_init<Scalar>(hidden, hidden, hidden, rng));
  a.vector = ps.add(name + ".v", uniform_init<Scalar>(hidden, 1, hidden, rng));
  return a;
}

/// sum_i a_i h_i with a = softmax_i(v . tanh(W h_i)) over each plan's LSTM states.
template <typename Scalar>
Var<Scalar> lstm_attention(ParamSet<Scalar>& ps, const LstmParams& lp, const AttentionParams& ap,
                           const Var<Scalar>& x, const std::vector<std::vector<Index>>& sequences) {
  auto& tape = *x.tape();
  const auto run = lstm_run(ps, lp, x, sequences);
  std::vector<Var<Scalar>> states;
  std::vector<Index> owner;
  for (std::size_t t = 0; t < run.steps.size(); ++t) {
    std::vector<Index> live;
    for (std::size_t b = 0; b < sequences.size(); ++b) {
      if (t < sequences[b].size()) live.push_back(static_cast<Index>(b));
    }
    owner.insert(owner.end(), live.begin(), live.end());
    states.push_back(run.steps[t].all_active ? run.step_states[t]
                                             : gather_rows(run.step_states[t], std::span<const Index>(live)));
  }
  Var<Scalar> hs = concat(std::span<const Var<Scalar>>(states), 0);
  Var<Scalar> scores = matmul(tanh(matmul(hs, tape.param(ps[ap.proj]))), tape.param(ps[ap.vector]));
  const auto b = static_cast<Index>(sequences.size());
  Var<Scalar> alpha = segment_softmax(scores, std::span<const Index>(owner), b);
  return scatter_add_rows(row_scale(alpha, hs), std::span<const Index>(owner), b);
}

// -- Tree-LSTM (child-sum) -----------------------------------------------------

struct TreeLstmParams {
  Linear wi, wf, wo, wu;
  std::size_t ui = 0, uf = 0, uo = 0, uu = 0;
  Index hidden = 0;
};

template <typename Scalar>
TreeLstmParams make_tree_lstm(ParamSet<Scalar>& ps, const std::string& name, Index in, Index hidden, Rng& rng) {
  TreeLstmParams p;
  p.hidden = hidden;
  p.wi = make_linear(ps, name + ".wi", in, hidden, rng);
  p.wf = make_linear(ps, name + ".wf", in, hidden, rng);
  p.wo = make_linear(ps, name + ".wo", in, hidden, rng);
  p.wu = make_linear(ps, name + ".wu", in, hidden, rng);
  p.ui = ps.add(name + ".ui", uniform_init<Scalar>(hidden, hidden, hidden, rng));
  p.uf = ps.add(name + ".uf", uniform_init<Scalar>(hidden, hidden, hidden, rng));
  p.uo = ps.add(name + ".uo", uniform_init<Scalar>(hidden, hidden, hidden, rng));
  p.uu = ps.add(name + ".uu", uniform_init<Scalar>(hidden, hidden, hidden, rng));
  return p;
}

/// Evaluates all nodes of equal height together; returns each plan's root state.
template <typename Scalar>
Var<Scalar> tree_lstm_forward(ParamSet<Scalar>& ps, const TreeLstmParams& p, const Var<Scalar>& x,
                              const BatchLayout& g) {
  auto& tape = *x.tape();
  const auto heights = row_heights(g);
  const Index top = heights.empty() ? 0 : *std::max_element(heights.begin(), heights.end());
  std::vector<std::vector<Index>> levels(static_cast<std::size_t>(top + 1));
  for (Index r = 0; r < g.num_rows; ++r) levels[static_cast<std::size_t>(heights[static_cast<std::size_t>(r)])].push_back(r);

  Var<Scalar> xi = apply(ps, p.wi, x);
  Var<Scalar> xf = apply(ps, p.wf, x);
  Var<Scalar> xo = apply(ps, p.wo, x);
  Var<Scalar> xu = apply(ps, p.wu, x);
  Var<Scalar> ui = tape.param(ps[p.ui]);
  Var<Scalar> uf = tape.param(ps[p.uf]);
  Var<Scalar> uo = tape.param(ps[p.uo]);
  Var<Scalar> uu = tape.param(ps[p.uu]);

  std::vector<Index> position(static_cast<std::size_t>(g.num_rows), -1);  // row -> index in stacked states
  std::vector<Var<Scalar>> h_levels, c_levels;
  Var<Scalar> h_all, c_all;
  Index stacked = 0;
  for (const auto& rows : levels) {
    const auto n = static_cast<Index>(rows.size());
    const std::span<const Index> rs(rows);
    Var<Scalar> h, c;
    if (h_levels.empty()) {
      Var<Scalar> i = sigmoid(gather_rows(xi, rs));
      Var<Scalar> o = sigmoid(gather_rows(xo, rs));
      Var<Scalar> u = tanh(gather_rows(xu, rs));
      c = mul(i, u);
      h = mul(o, tanh(c));
    } else {
      std::vector<Index> child_pos, parent_local, parent_row;
      for (Index k = 0; k < n; ++k) {
        for (Index ch : g.children[static_cast<std::size_t>(rows[static_cast<std::size_t>(k)])]) {
          child_pos.push_back(position[static_cast<std::size_t>(ch)]);
          parent_local.push_back(k);
          parent_row.push_back(rows[static_cast<std::size_t>(k)]);
        }
      }
      Var<Scalar> child_h = gather_rows(h_all, std::span<const Index>(child_pos));
      Var<Scalar> child_c = gather_rows(c_all, std::span<const Index>(child_pos));
      Var<Scalar> h_sum = scatter_add_rows(child_h, std::span<const Index>(parent_local), n);
      Var<Scalar> i = sigmoid(gather_rows(xi, rs) + matmul(h_sum, ui));
      Var<Scalar> o = sigmoid(gather_rows(xo, rs) + matmul(h_sum, uo));
      Var<Scalar> u = tanh(gather_rows(xu, rs) + matmul(h_sum, uu));
      Var<Scalar> f = sigmoid(gather_rows(xf, std::span<const Index>(parent_row)) + matmul(child_h, uf));
      Var<Scalar> fc = scatter_add_rows(mul(f, child_c), std::span<const Index>(parent_local), n);
      c = mul(i, u) + fc;
      h = mul(o, tanh(c));
    }
    for (Index k = 0; k < n; ++k) position[static_cast<std::size_t>(rows[static_cast<std::size_t>(k)])] = stacked + k;
    stacked += n;
    h_levels.push_back(h);
    c_levels.push_back(c);
    h_all = h_levels.size() == 1 ? h : concat(std::span<const Var<Scalar>>(h_levels), 0);
    c_all = c_levels.size() == 1 ? c : concat(std::span<const Var<Scalar>>(c_levels), 0);
  }
  std::vector<Index> roots;
  for (const auto& seq : g.sequences) roots.push_back(position[static_cast<std::size_t>(seq.back())]);
  return gather_rows(h_all, std::span<const Index>(roots));
}

// -- Tree-CNN -------------------------------------------------------------------

struct TreeConvParams {
  Linear self;  // with bias
  std::size_t left = 0, right = 0;
  Index out = 0;
};

template <typename Scalar>
TreeConvParams make_tree_conv(ParamSet<Scalar>& ps, const std::string& name, Index in, Index out, Rng& rng) {
  TreeConvParams t;
  t.out = out;
  t.self = make_linear(ps, name + ".self", in, out, rng);
  t.left = ps.add(name + ".left", uniform_init<Scalar>(in, out, in, rng));
  t.right = ps.add(name + ".right", uniform_init<Scalar>(in, out, in, rng));
  return t;
}

namespace detail {

/// Left/right child rows for the triangular kernel; absent and ⊥ children
/// point at an appended zero row (index num_rows).
inline void child_slots(const BatchLayout& g, std::vector<Index>& left, std::vector<Index>& right) {
  left.assign(static_cast<std::size_t>(g.num_rows), g.num_rows);
  right.assign(static_cast<std::size_t>(g.num_rows), g.num_rows);
  for (Index r = 0; r < g.num_rows; ++r) {
    const auto& kids = g.children[static_cast<std::size_t>(r)];
    if (kids.size() > 2) throw Error("tree_cnn: plan is not binarized (node with " + std::to_string(kids.size()) + " children)");
    if (!kids.empty() && !g.bottom[static_cast<std::size_t>(kids[0])]) left[static_cast<std::size_t>(r)] = kids[0];
    if (kids.size() == 2 && !g.bottom[static_cast<std::size_t>(kids[1])]) right[static_cast<std::size_t>(r)] = kids[1];
  }
}

}  // namespace detail

template <typename Scalar>
Var<Scalar> tree_conv(ParamSet<Scalar>& ps, const TreeConvParams& t, const BatchLayout& g, const Var<Scalar>& x,
                      const std::vector<Index>& left, const std::vector<Index>& right) {
  auto& tape = *x.tape();
  Var<Scalar> padded = concat({x, constant_like<Scalar>(tape, 1, x.cols(), Scalar(0))}, 0);
  Var<Scalar> pre = apply(ps, t.self, x) +
                    matmul(gather_rows(padded, std::span<const Index>(left)), tape.param(ps[t.left])) +
                    matmul(gather_rows(padded, std::span<const Index>(right)), tape.param(ps[t.right]));
  Var<Scalar> y = relu(pre);
  if (g.has_bottom()) {
    Tensor<Scalar> keep(g.num_rows, 1);
    for (Index r = 0; r < g.num_rows; ++r) keep(r, 0) = g.bottom[static_cast<std::size_t>(r)] ? Scalar(0) : Scalar(1);
    y = row_scale(tape.constant(std::move(keep)), y);
  }
  return y;
}

/// Elementwise max over each plan's non-⊥ rows -> B x d.
template <typename Scalar>
Var<Scalar> dynamic_pool(const Var<Scalar>& y, const BatchLayout& g) {
  std::vector<Var<Scalar>> pooled;
  for (Index b = 0; b < g.num_plans(); ++b) {
    std::vector<Index> rows;
    for (Index r = g.plan_offset[static_cast<std::size_t>(b)]; r < g.plan_offset[static_cast<std::size_t>(b) + 1]; ++r) {
      if (!g.bottom[static_cast<std::size_t>(r)]) rows.push_back(r);
    }
    Var<Scalar> block = transpose(gather_rows(y, std::span<const Index>(rows)));
    pooled.push_back(transpose(row_max(block)));
  }
  return pooled.size() == 1 ? pooled[0] : concat(std::span<const Var<Scalar>>(pooled), 0);
}

}  // namespace bigg

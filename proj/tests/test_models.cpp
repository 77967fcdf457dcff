#include "bigg/model.hpp"
#include "bigg/verify.hpp"
#include "fixtures.hpp"

#include "tensor_match.hpp"

#include <gtest/gtest.h>

#include <numeric>

using namespace bigg;
using namespace bigg::testing;

namespace {

Tensor<double> random_tensor(Index r, Index c, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Tensor<double> t(r, c);
  for (Index i = 0; i < t.size(); ++i) t.data()[i] = n(rng);
  return t;
}

ModelConfig small_config(ModelKind kind, int layers = 2) {
  ModelConfig mc;
  mc.kind = kind;
  mc.layers = layers;
  mc.hidden = 6;
  mc.heads = 1;
  mc.dropout = 0.0;
  mc.encoder = EncoderConfig{3, 2};
  mc.head_hidden1 = 5;
  mc.head_hidden2 = 4;
  return mc;
}

PlanGraph structure_only(const std::vector<std::vector<Index>>& children, const std::vector<Index>& postorder) {
  PlanGraph g;
  g.rows.resize(children.size());
  g.children = children;
  g.postorder = postorder;
  for (std::size_t p = 0; p < children.size(); ++p) {
    for (Index c : children[p]) {
      g.child_to_parent.push_back({c, static_cast<Index>(p)});
      g.parent_to_child.push_back({static_cast<Index>(p), c});
    }
  }
  return g;
}

// Same graph with row i moved to row perm[i].
PlanGraph relabel(const PlanGraph& g, const std::vector<Index>& perm) {
  PlanGraph out = g;
  for (std::size_t i = 0; i < perm.size(); ++i) {
    out.rows[static_cast<std::size_t>(perm[i])] = g.rows[i];
    std::vector<Index> kids;
    for (Index c : g.children[i]) kids.push_back(perm[static_cast<std::size_t>(c)]);
    out.children[static_cast<std::size_t>(perm[i])] = kids;
  }
  for (auto& [s, d] : out.child_to_parent) s = perm[static_cast<std::size_t>(s)], d = perm[static_cast<std::size_t>(d)];
  for (auto& [s, d] : out.parent_to_child) s = perm[static_cast<std::size_t>(s)], d = perm[static_cast<std::size_t>(d)];
  std::reverse(out.child_to_parent.begin(), out.child_to_parent.end());
  for (auto& r : out.postorder) r = perm[static_cast<std::size_t>(r)];
  return out;
}

double sig(double v) { return 1.0 / (1.0 + std::exp(-v)); }

// x W + b for one row
std::vector<double> affine(const ParamSet<double>& ps, const Linear& l, const std::vector<double>& x) {
  std::vector<double> y(static_cast<std::size_t>(l.out));
  for (Index j = 0; j < l.out; ++j) {
    double a = l.has_bias ? ps[l.bias].value(0, j) : 0.0;
    for (Index i = 0; i < l.in; ++i) a += x[static_cast<std::size_t>(i)] * ps[l.weight].value(i, j);
    y[static_cast<std::size_t>(j)] = a;
  }
  return y;
}

std::vector<double> times(const ParamSet<double>& ps, std::size_t u, const std::vector<double>& h) {
  const auto& m = ps[u].value;
  std::vector<double> y(static_cast<std::size_t>(m.cols()), 0.0);
  for (Index j = 0; j < m.cols(); ++j) {
    for (Index k = 0; k < m.rows(); ++k) y[static_cast<std::size_t>(j)] += h[static_cast<std::size_t>(k)] * m(k, j);
  }
  return y;
}

std::vector<double> row(const Tensor<double>& t, Index r) {
  return std::vector<double>(t.row(r).data(), t.row(r).data() + t.cols());
}

}  // namespace

TEST(ModelKinds, NamesRoundTrip) {
  ASSERT_EQ(all_model_kinds().size(), 10u);
  for (ModelKind k : all_model_kinds()) EXPECT_EQ(parse_model_kind(model_kind_name(k)), k);
  EXPECT_FALSE(parse_model_kind("transformer").has_value());
  EXPECT_NE(model_kind_list().find("tree_cnn"), std::string::npos);
}

TEST(ModelConfigJson, RoundTripAndValidation) {
  ModelConfig mc = small_config(ModelKind::TreeLstm, 1);
  const ModelConfig back = model_config_from_json(model_config_to_json(mc));
  EXPECT_EQ(model_config_to_json(back), model_config_to_json(mc));
  EXPECT_THROW(model_config_from_json(Json{{"kind", "nope"}}), ValidationError);
  EXPECT_THROW(model_config_from_json(Json{{"dropout", 1.0}}), ValidationError);
  EXPECT_THROW(model_config_from_json(Json{{"heads", 0}}), ValidationError);
  EXPECT_THROW(model_config_from_json(Json{{"layers", -1}}), ValidationError);
}

TEST(Forward, EveryKindGivesHiddenWidthEmbeddingAndUnitOutput) {
  const Catalog cat = small_catalog();
  PlanTree plan = three_way();
  ASSERT_EQ(node_count(plan.root), 5u);
  for (ModelKind kind : all_model_kinds()) {
    const ModelConfig mc = small_config(kind);
    auto model = CostModel<double>::create(mc, cat, 1);
    const PlanGraph g = featurize_plan(requires_binary_trees(kind) ? binarize(plan) : plan, cat);
    const BatchLayout lay = make_batch(g);
    Tape<double> tape(false);
    const auto emb = model.embed(tape, lay, nullptr).value();
    EXPECT_EQ(emb.rows(), 1) << model_kind_name(kind);
    EXPECT_EQ(emb.cols(), mc.hidden) << model_kind_name(kind);
    const double y = model.forward(tape, lay, nullptr).value()(0, 0);
    EXPECT_GT(y, 0.0);
    EXPECT_LT(y, 1.0);
  }
}

TEST(Forward, BatchedPlansMatchSinglePlans) {
  const Catalog cat = grad_check_catalog(2);
  std::vector<PlanGraph> graphs;
  for (std::uint64_t s = 0; s < 5; ++s) graphs.push_back(featurize_plan(binarize(random_small_plan(cat, s)), cat));
  std::vector<const PlanGraph*> ptrs;
  for (const auto& g : graphs) ptrs.push_back(&g);
  const BatchLayout batch = make_batch(std::span<const PlanGraph* const>(ptrs));
  for (ModelKind kind : all_model_kinds()) {
    auto model = CostModel<double>::create(small_config(kind), cat, 3);
    Tape<double> tape(false);
    const auto all = model.forward(tape, batch, nullptr).value();
    for (std::size_t i = 0; i < graphs.size(); ++i) {
      const BatchLayout one = make_batch(graphs[i]);
      Tape<double> t1(false);
      EXPECT_NEAR(model.forward(t1, one, nullptr).value()(0, 0), all(static_cast<Index>(i), 0), 1e-12)
          << model_kind_name(kind);
    }
  }
}

TEST(Forward, FloatCastTracksDouble) {
  const Catalog cat = small_catalog();
  auto model = CostModel<double>::create(small_config(ModelKind::Bigg), cat, 4);
  auto f = model.cast<float>();
  const PlanGraph g = featurize_plan(three_way(), cat);
  const BatchLayout lay = make_batch(g);
  Tape<double> td(false);
  Tape<float> tf(false);
  EXPECT_NEAR(model.forward(td, lay, nullptr).value()(0, 0), f.forward(tf, lay, nullptr).value()(0, 0), 1e-5);
}

TEST(Bigg, ZeroLayersEqualsGruBaseline) {
  const Catalog cat = small_catalog();
  auto bigg = CostModel<double>::create(small_config(ModelKind::Bigg, 0), cat, 5);
  auto gru = CostModel<double>::create(small_config(ModelKind::Gru, 0), cat, 5);
  const PlanGraph g = featurize_plan(three_way(), cat);
  const BatchLayout lay = make_batch(g);
  Tape<double> a(false), b(false);
  EXPECT_TRUE(same_tensor(bigg.forward(a, lay, nullptr).value(), gru.forward(b, lay, nullptr).value()));
}

TEST(Bigg, UnitMixingEqualsChildToParentStack) {
  const Catalog cat = small_catalog();
  auto bigg = CostModel<double>::create(small_config(ModelKind::Bigg, 3), cat, 6);
  auto single = CostModel<double>::create(small_config(ModelKind::GnnGruSingle, 3), cat, 7);
  for (auto& p : single.params()) {
    std::string name = p.name;
    const auto layer = name.find("tree.layer");
    if (layer != std::string::npos) {
      const auto dot = name.find('.', layer + 10);
      name.insert(dot, ".c2p");
    }
    p.value = bigg.params().at(name).value;
  }
  for (int l = 0; l < 3; ++l) bigg.params().at("tree.layer" + std::to_string(l) + ".p").value(0, 0) = 1.0;
  const PlanGraph g = featurize_plan(three_way(), cat);
  const BatchLayout lay = make_batch(g);
  Tape<double> a(false), b(false);
  const auto ga = bigg.encode(a, lay);
  const auto gb = single.encode(b, lay);
  const auto xa = gnn_stack(bigg.params(), bigg.tree(), bigg.config(), ga, nullptr).value();
  const auto xb = gnn_stack(single.params(), single.tree(), single.config(), gb, nullptr).value();
  EXPECT_TRUE(same_tensor(xa, xb));
  EXPECT_TRUE(same_tensor(bigg.forward(a, lay, nullptr).value(), single.forward(b, lay, nullptr).value()));
}

TEST(Bigg, InvariantUnderConsistentRelabeling) {
  const Catalog cat = grad_check_catalog(5);
  Rng rng(9);
  for (std::uint64_t s = 0; s < 20; ++s) {
    const PlanGraph g = featurize_plan(random_small_plan(cat, s, 4, 8), cat);
    std::vector<Index> perm(static_cast<std::size_t>(g.size()));
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    const PlanGraph h = relabel(g, perm);
    auto model = CostModel<double>::create(small_config(ModelKind::Bigg, 2), cat, s);
    const BatchLayout la = make_batch(g), lb = make_batch(h);
    Tape<double> a(false), b(false);
    const auto ea = model.embed(a, la, nullptr).value();
    const auto eb = model.embed(b, lb, nullptr).value();
    EXPECT_LE((ea - eb).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Aggregation, AddpoolSums) {
  PlanGraph g = structure_only({{}, {}}, {0, 1});
  const BatchLayout lay = make_batch(g);
  Tape<double> tape(false);
  Tensor<double> x(2, 2);
  x << 1, 2, 3, 4;
  const auto s = addpool_aggregate(tape.constant(x), lay).value();
  EXPECT_EQ(s(0, 0), 4.0);
  EXPECT_EQ(s(0, 1), 6.0);
  const PlanGraph one = structure_only({{}}, {0});
  const BatchLayout l1 = make_batch(one);
  EXPECT_TRUE(same_tensor(addpool_aggregate(tape.constant(x.topRows(1).eval()), l1).value(), x.topRows(1)));
}

TEST(Aggregation, GruIsOrderSensitive) {
  Rng rng(10);
  ParamSet<double> ps;
  const GruParams gru = make_gru(ps, "g", 3, 4, rng);
  const Tensor<double> x = random_tensor(3, 3, rng);
  Tape<double> tape(false);
  const auto a = gru_aggregate(ps, gru, tape.constant(x), {{0, 1, 2}}).value();
  const auto b = gru_aggregate(ps, gru, tape.constant(x), {{1, 0, 2}}).value();
  EXPECT_GT((a - b).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Recurrent, ZeroInputsAndBiasesGiveZeroState) {
  Rng rng(11);
  ParamSet<double> ps;
  const GruParams gru = make_gru(ps, "g", 3, 4, rng);
  const LstmParams lstm = make_lstm(ps, "l", 3, 4, rng);
  for (auto& p : ps) {
    if (p.name.ends_with(".bias")) p.value.setZero();
  }
  Tape<double> tape(false);
  auto x = tape.constant(Tensor<double>::Zero(4, 3));
  EXPECT_TRUE(gru_aggregate(ps, gru, x, {{0, 1, 2, 3}}).value().isZero(0.0));
  EXPECT_TRUE(lstm_run(ps, lstm, x, {{0, 1, 2, 3}}).last.value().isZero(0.0));
}

TEST(Recurrent, LstmMatchesHandUnrolledGates) {
  Rng rng(12);
  ParamSet<double> ps;
  const LstmParams p = make_lstm(ps, "l", 3, 2, rng);
  const Tensor<double> x = random_tensor(3, 3, rng);
  std::vector<double> h(2, 0.0), c(2, 0.0);
  for (Index t = 0; t < 3; ++t) {
    const auto xt = row(x, t);
    const auto ai = affine(ps, p.wi, xt), af = affine(ps, p.wf, xt), ao = affine(ps, p.wo, xt), ag = affine(ps, p.wg, xt);
    const auto hi = times(ps, p.ui, h), hf = times(ps, p.uf, h), ho = times(ps, p.uo, h), hg = times(ps, p.ug, h);
    for (std::size_t j = 0; j < 2; ++j) {
      c[j] = sig(af[j] + hf[j]) * c[j] + sig(ai[j] + hi[j]) * std::tanh(ag[j] + hg[j]);
      h[j] = sig(ao[j] + ho[j]) * std::tanh(c[j]);
    }
  }
  Tape<double> tape(false);
  const auto got = lstm_run(ps, p, tape.constant(x), {{0, 1, 2}}).last.value();
  for (Index j = 0; j < 2; ++j) EXPECT_NEAR(got(0, j), h[static_cast<std::size_t>(j)], 1e-12);
}

TEST(Recurrent, AttentionOverOneOrEqualStates) {
  Rng rng(13);
  ParamSet<double> ps;
  const LstmParams lp = make_lstm(ps, "l", 3, 4, rng);
  const AttentionParams ap = make_attention(ps, "a", 4, rng);
  const Tensor<double> x = random_tensor(1, 3, rng);
  Tape<double> tape(false);
  const auto h1 = lstm_run(ps, lp, tape.constant(x), {{0}}).last.value();
  const auto att = lstm_attention(ps, lp, ap, tape.constant(x), {{0}}).value();
  EXPECT_LE((att - h1).cwiseAbs().maxCoeff(), 1e-15);

  // No recurrence and a closed forget gate: every state depends on its own input only.
  for (std::size_t u : {lp.ui, lp.uf, lp.uo, lp.ug}) ps[u].value.setZero();
  ps[lp.wf.weight].value.setZero();
  ps[lp.wf.bias].value.setConstant(-1e3);
  Tensor<double> same(4, 3);
  for (Index r = 0; r < 4; ++r) same.row(r) = x.row(0);
  Tape<double> fresh(false);
  const auto h = lstm_run(ps, lp, fresh.constant(same), {{0}}).last.value();
  const auto pooled = lstm_attention(ps, lp, ap, fresh.constant(same), {{0, 1, 2, 3}}).value();
  EXPECT_LE((pooled - h).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(TreeLstm, MatchesScalarOracleOnThreeNodes) {
  Rng rng(14);
  ParamSet<double> ps;
  const TreeLstmParams p = make_tree_lstm(ps, "t", 3, 2, rng);
  const Tensor<double> x = random_tensor(3, 3, rng);
  const PlanGraph g = structure_only({{}, {}, {0, 1}}, {0, 1, 2});
  const BatchLayout lay = make_batch(g);

  auto leaf = [&](Index r, std::vector<double>& h, std::vector<double>& c) {
    const auto xr = row(x, r);
    const auto i = affine(ps, p.wi, xr), o = affine(ps, p.wo, xr), u = affine(ps, p.wu, xr);
    for (std::size_t j = 0; j < 2; ++j) {
      c[j] = sig(i[j]) * std::tanh(u[j]);
      h[j] = sig(o[j]) * std::tanh(c[j]);
    }
  };
  std::vector<double> h0(2), c0(2), h1(2), c1(2), hr(2), cr(2);
  leaf(0, h0, c0);
  leaf(1, h1, c1);
  std::vector<double> hsum{h0[0] + h1[0], h0[1] + h1[1]};
  const auto xr = row(x, 2);
  const auto ai = affine(ps, p.wi, xr), ao = affine(ps, p.wo, xr), au = affine(ps, p.wu, xr), af = affine(ps, p.wf, xr);
  const auto ui = times(ps, p.ui, hsum), uo = times(ps, p.uo, hsum), uu = times(ps, p.uu, hsum);
  const auto f0 = times(ps, p.uf, h0), f1 = times(ps, p.uf, h1);
  for (std::size_t j = 0; j < 2; ++j) {
    cr[j] = sig(ai[j] + ui[j]) * std::tanh(au[j] + uu[j]) + sig(af[j] + f0[j]) * c0[j] + sig(af[j] + f1[j]) * c1[j];
    hr[j] = sig(ao[j] + uo[j]) * std::tanh(cr[j]);
  }
  Tape<double> tape(false);
  const auto got = tree_lstm_forward(ps, p, tape.constant(x), lay).value();
  for (Index j = 0; j < 2; ++j) EXPECT_NEAR(got(0, j), hr[static_cast<std::size_t>(j)], 1e-12);
}

TEST(TreeLstm, ChildSwapLeavesParentUnchanged) {
  Rng rng(15);
  ParamSet<double> ps;
  const TreeLstmParams p = make_tree_lstm(ps, "t", 3, 4, rng);
  const Tensor<double> x = random_tensor(3, 3, rng);
  const PlanGraph a = structure_only({{}, {}, {0, 1}}, {0, 1, 2});
  const PlanGraph b = structure_only({{}, {}, {1, 0}}, {1, 0, 2});
  const BatchLayout la = make_batch(a), lb = make_batch(b);
  Tape<double> tape(false);
  const Tensor<double> ha = tree_lstm_forward(ps, p, tape.constant(x), la).value();
  const Tensor<double> hb = tree_lstm_forward(ps, p, tape.constant(x), lb).value();
  EXPECT_TRUE(same_tensor(ha, hb));
}

TEST(TreeLstm, ChainEqualsLstmWithMappedWeights) {
  Rng rng(16);
  ParamSet<double> ps;
  const TreeLstmParams tp = make_tree_lstm(ps, "t", 3, 4, rng);
  const LstmParams lp = make_lstm(ps, "l", 3, 4, rng);
  ps[lp.wi.weight].value = ps[tp.wi.weight].value;
  ps[lp.wi.bias].value = ps[tp.wi.bias].value;
  ps[lp.wf.weight].value = ps[tp.wf.weight].value;
  ps[lp.wf.bias].value = ps[tp.wf.bias].value;
  ps[lp.wo.weight].value = ps[tp.wo.weight].value;
  ps[lp.wo.bias].value = ps[tp.wo.bias].value;
  ps[lp.wg.weight].value = ps[tp.wu.weight].value;
  ps[lp.wg.bias].value = ps[tp.wu.bias].value;
  ps[lp.ui].value = ps[tp.ui].value;
  ps[lp.uf].value = ps[tp.uf].value;
  ps[lp.uo].value = ps[tp.uo].value;
  ps[lp.ug].value = ps[tp.uu].value;
  // chain: row 3 <- 2 <- 1 <- 0, post-order 0,1,2,3
  const PlanGraph g = structure_only({{}, {0}, {1}, {2}}, {0, 1, 2, 3});
  const BatchLayout lay = make_batch(g);
  const Tensor<double> x = random_tensor(4, 3, rng);
  Tape<double> tape(false);
  const auto tree = tree_lstm_forward(ps, tp, tape.constant(x), lay).value();
  const auto seq = lstm_run(ps, lp, tape.constant(x), lay.sequences).last.value();
  EXPECT_LE((tree - seq).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(TreeCnn, SingleNodeWithIdentityKernelIsRelu) {
  ParamSet<double> ps;
  Rng rng(17);
  const TreeConvParams t = make_tree_conv(ps, "c", 3, 3, rng);
  ps[t.self.weight].value = Tensor<double>::Identity(3, 3);
  ps[t.self.bias].value.setZero();
  Tensor<double> x(1, 3);
  x << -1.0, 0.5, 2.0;
  const PlanGraph g = structure_only({{}}, {0});
  const BatchLayout lay = make_batch(g);
  std::vector<Index> left, right;
  detail::child_slots(lay, left, right);
  Tape<double> tape(false);
  const auto pooled = dynamic_pool(tree_conv(ps, t, lay, tape.constant(x), left, right), lay).value();
  EXPECT_EQ(pooled(0, 0), 0.0);
  EXPECT_EQ(pooled(0, 1), 0.5);
  EXPECT_EQ(pooled(0, 2), 2.0);
}

TEST(TreeCnn, BottomChildContributesNothing) {
  const Catalog cat = small_catalog();
  const PlanTree sort = tree(PlanNode{"Sort", {}, {}, {scan("t1")}});
  const PlanGraph with_bottom = featurize_plan(binarize(sort), cat);
  const PlanGraph without = featurize_plan(sort, cat);
  ASSERT_EQ(with_bottom.size(), 3);
  ParamSet<double> ps;
  Rng rng(18);
  const EncoderParams enc = make_encoder(ps, cat, EncoderConfig{3, 2}, rng);
  const TreeConvParams t = make_tree_conv(ps, "c", enc.output_dim(), 4, rng);
  auto run = [&](const PlanGraph& g) {
    const BatchLayout lay = make_batch(g);
    std::vector<Index> left, right;
    detail::child_slots(lay, left, right);
    Tape<double> tape(false);
    auto x = encode_plan(tape, ps, enc, lay).node_features;
    return dynamic_pool(tree_conv(ps, t, lay, x, left, right), lay).value();
  };
  EXPECT_TRUE(same_tensor(run(with_bottom), run(without)));
}

TEST(TreeCnn, MatchesScalarOracleOnSevenNodes) {
  ParamSet<double> ps;
  Rng rng(19);
  const TreeConvParams t = make_tree_conv(ps, "c", 3, 4, rng);
  // complete binary tree in post-order rows: leaves 0,1,3,4; internal 2 (0,1), 5 (3,4); root 6 (2,5)
  const std::vector<std::vector<Index>> kids{{}, {}, {0, 1}, {}, {}, {3, 4}, {2, 5}};
  const PlanGraph g = structure_only(kids, {0, 1, 2, 3, 4, 5, 6});
  const BatchLayout lay = make_batch(g);
  const Tensor<double> x = random_tensor(7, 3, rng);
  std::vector<double> pooled(4, -1e300);
  for (Index r = 0; r < 7; ++r) {
    auto pre = affine(ps, t.self, row(x, r));
    const auto& k = kids[static_cast<std::size_t>(r)];
    if (!k.empty()) {
      const auto l = times(ps, t.left, row(x, k[0])), rr = times(ps, t.right, row(x, k[1]));
      for (std::size_t j = 0; j < 4; ++j) pre[j] += l[j] + rr[j];
    }
    for (std::size_t j = 0; j < 4; ++j) pooled[j] = std::max(pooled[j], std::max(0.0, pre[j]));
  }
  std::vector<Index> left, right;
  detail::child_slots(lay, left, right);
  Tape<double> tape(false);
  const auto got = dynamic_pool(tree_conv(ps, t, lay, tape.constant(x), left, right), lay).value();
  for (Index j = 0; j < 4; ++j) EXPECT_NEAR(got(0, j), pooled[static_cast<std::size_t>(j)], 1e-12);
}

TEST(TreeCnn, RejectsNonBinaryTrees) {
  const PlanGraph g = structure_only({{}, {}, {}, {0, 1, 2}}, {0, 1, 2, 3});
  const BatchLayout lay = make_batch(g);
  std::vector<Index> left, right;
  EXPECT_THROW(detail::child_slots(lay, left, right), Error);
}

TEST(Undirected, EachNodeOfTwoNodeTreeAttendsToTheOther) {
  const Catalog cat = small_catalog();
  const PlanTree a = tree(PlanNode{"Sort", {}, {}, {scan("t1")}});
  PlanTree b = a;
  b.root.node_type = "Aggregate";
  for (ModelKind kind : {ModelKind::GnnGruUndirected, ModelKind::GnnGruSingle}) {
    auto model = CostModel<double>::create(small_config(kind, 1), cat, 20);
    auto child_row = [&](const PlanTree& t) {
      const PlanGraph g = featurize_plan(t, cat);
      const BatchLayout lay = make_batch(g);
      Tape<double> tape(false);
      const auto x = gnn_stack(model.params(), model.tree(), model.config(), model.encode(tape, lay), nullptr).value();
      return Tensor<double>(x.row(0));
    };
    const bool child_sees_parent = child_row(a) != child_row(b);
    EXPECT_EQ(child_sees_parent, kind == ModelKind::GnnGruUndirected) << model_kind_name(kind);
  }
}

TEST(Head, ZeroWeightsGiveHalf) {
  ParamSet<double> ps;
  Rng rng(21);
  ModelConfig mc = small_config(ModelKind::Bigg);
  const HeadParams h = make_head(ps, mc, 6, rng);
  for (auto& p : ps) p.value.setZero();
  Tape<double> tape(false);
  EXPECT_TRUE(same_tensor(mlp_head(ps, h, tape.constant(random_tensor(3, 6, rng)), 0.0, nullptr).value(),
            Tensor<double>::Constant(3, 1, 0.5)));
}

TEST(GradientCheck, EveryKindPassesAndCorruptionIsCaught) {
  for (ModelKind kind : all_model_kinds()) {
    const auto ok = check_model_gradients(kind, 1);
    EXPECT_TRUE(ok.report.passed) << model_kind_name(kind) << " " << ok.report.max_relative_error;
    const auto bad = check_model_gradients(kind, 1, Primitive::MatMul);
    EXPECT_FALSE(bad.report.passed) << model_kind_name(kind);
  }
}

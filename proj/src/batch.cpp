#include "bigg/batch.hpp"

#include <algorithm>
#include <functional>

namespace bigg {

const RawNodeFeatures& BatchLayout::row_features(Index row) const {
  const auto b = static_cast<std::size_t>(plan_of_row[static_cast<std::size_t>(row)]);
  return plans[b]->rows[static_cast<std::size_t>(row - plan_offset[b])];
}

bool BatchLayout::has_bottom() const {
  return std::any_of(bottom.begin(), bottom.end(), [](char c) { return c != 0; });
}

BatchLayout make_batch(std::span<const PlanGraph* const> plans) {
  if (plans.empty()) throw Error("make_batch: no plans");
  BatchLayout b;
  b.plans.assign(plans.begin(), plans.end());
  b.plan_offset.push_back(0);
  for (std::size_t p = 0; p < plans.size(); ++p) {
    const PlanGraph& g = *plans[p];
    if (g.size() == 0) throw Error("make_batch: empty plan '" + g.plan_id + "'");
    const Index off = b.num_rows;
    for (Index r = 0; r < g.size(); ++r) {
      b.plan_of_row.push_back(static_cast<Index>(p));
      b.bottom.push_back(g.rows[static_cast<std::size_t>(r)].bottom ? 1 : 0);
      std::vector<Index> kids;
      for (Index c : g.children[static_cast<std::size_t>(r)]) kids.push_back(c + off);
      b.children.push_back(std::move(kids));
    }
    for (const auto& [src, dst] : g.child_to_parent) {
      b.c2p_src.push_back(src + off);
      b.c2p_dst.push_back(dst + off);
    }
    for (const auto& [src, dst] : g.parent_to_child) {
      b.p2c_src.push_back(src + off);
      b.p2c_dst.push_back(dst + off);
    }
    std::vector<Index> seq;
    for (Index r : g.postorder) seq.push_back(r + off);
    b.sequences.push_back(std::move(seq));
    b.num_rows += g.size();
    b.plan_offset.push_back(b.num_rows);
  }
  return b;
}

BatchLayout make_batch(const PlanGraph& plan) {
  const PlanGraph* p = &plan;
  return make_batch(std::span<const PlanGraph* const>(&p, 1));
}

std::vector<Index> row_heights(const BatchLayout& layout) {
  std::vector<Index> h(static_cast<std::size_t>(layout.num_rows), -1);
  std::function<Index(Index)> height = [&](Index r) -> Index {
    auto& slot = h[static_cast<std::size_t>(r)];
    if (slot >= 0) return slot;
    Index best = 0;
    for (Index c : layout.children[static_cast<std::size_t>(r)]) best = std::max(best, height(c) + 1);
    slot = best;
    return best;
  };
  for (Index r = 0; r < layout.num_rows; ++r) height(r);
  return h;
}

}  // namespace bigg

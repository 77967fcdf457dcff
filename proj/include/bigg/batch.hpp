#pragma once

#include "bigg/features.hpp"

#include <span>

namespace bigg {

/// Structure of a mini-batch of plans laid out as one disjoint graph. Rows of
/// plan b occupy [plan_offset[b], plan_offset[b+1]) in post-order.
struct BatchLayout {
  std::vector<const PlanGraph*> plans;
  Index num_rows = 0;
  std::vector<Index> plan_offset;
  std::vector<Index> plan_of_row;
  // directed edges as parallel (source, destination) row lists
  std::vector<Index> c2p_src, c2p_dst;
  std::vector<Index> p2c_src, p2c_dst;
  std::vector<std::vector<Index>> children;
  std::vector<char> bottom;
  std::vector<std::vector<Index>> sequences;  // post-order rows per plan

  Index num_plans() const { return static_cast<Index>(plans.size()); }
  const RawNodeFeatures& row_features(Index row) const;
  bool has_bottom() const;
};

BatchLayout make_batch(std::span<const PlanGraph* const> plans);
BatchLayout make_batch(const PlanGraph& plan);

/// Height of each row above its deepest descendant leaf (leaves are 0).
std::vector<Index> row_heights(const BatchLayout& layout);

}  // namespace bigg

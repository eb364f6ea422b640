#include "treefed/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace treefed {

double fusion_coefficient(const FusionConfig& config, int child_level) {
  double eps = config.epsilon0 *
               std::pow(config.omega, 1.0 - static_cast<double>(child_level));
  return std::clamp(eps, 0.0, 1.0);
}

namespace {

void blend_spans(const std::vector<LayerSpan>& spans, const FlatParams& parent,
                 FlatParams& child, double eps) {
  for (const auto& span : spans) {
    for (std::size_t i = span.offset; i < span.offset + span.length; ++i) {
      child.values[i] = eps * parent.values[i] + (1.0 - eps) * child.values[i];
    }
  }
}

}  // namespace

std::map<ClientId, FlatParams> disseminate(NodeTree& tree,
                                           const FusionConfig& config,
                                           FusionMode mode) {
  const FlatParams& root_params = tree.node(tree.root).params;
  config.partition.check_covers(root_params);
  auto [fixed_view, variable_view] = split(root_params, config.partition);

  std::deque<NodeId> queue{tree.root};
  while (!queue.empty()) {
    NodeId id = queue.front();
    queue.pop_front();
    const TreeNode& parent = tree.node(id);
    // snapshot: children are updated against the parent's current (already
    // fused) parameters, not against a pre-pass copy
    const FlatParams parent_params = parent.params;
    for (NodeId child_id : parent.children) {
      TreeNode& child = tree.node(child_id);
      const double eps = fusion_coefficient(config, child.level);
      switch (mode) {
        case FusionMode::kDirect:
          child.params.values = parent_params.values;
          break;
        case FusionMode::kFull:
          blend_spans(fixed_view.spans, parent_params, child.params, eps);
          blend_spans(variable_view.spans, parent_params, child.params, eps);
          break;
        case FusionMode::kProgressive:
          blend_spans(variable_view.spans, parent_params, child.params, eps);
          break;
      }
      queue.push_back(child_id);
    }
  }

  std::map<ClientId, FlatParams> leaves;
  for (const auto& [id, node] : tree.nodes) {
    if (node.is_leaf()) {
      leaves.emplace(*node.source_clients.begin(), node.params);
    }
  }
  return leaves;
}

}  // namespace treefed

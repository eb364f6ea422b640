#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "treefed/params.hpp"

namespace treefed {

using ClientId = int;
using NodeId = int;

struct TreeNode {
  NodeId id = -1;
  // Current level of the node. Leaves start at 0; promoted singletons keep
  // their identity but advance level so that child.level + 1 == parent.level
  // on every aggregation edge.
  int level = 0;
  FlatParams params;
  std::optional<NodeId> parent;
  std::vector<NodeId> children;
  std::set<ClientId> source_clients;

  bool is_leaf() const { return children.empty(); }
};

struct NodeTree {
  std::map<NodeId, TreeNode> nodes;
  NodeId root = -1;
  int height = 1;  // level of the root

  const TreeNode& node(NodeId id) const;
  TreeNode& node(NodeId id);
  // Leaf node id for a client, or throws UnknownClient.
  NodeId leaf_of(ClientId client) const;
};

// tau_l = tau0 + beta * (l / H), clamped to <= 1 since cosine similarity
// cannot exceed 1.
struct ThresholdSchedule {
  double tau0 = 0.85;
  double beta = 0.06;
  int height = 3;
};

double threshold_at(const ThresholdSchedule& schedule, int level);

// Connected components of the graph with an edge wherever pairwise cosine
// similarity >= tau. Clusters ordered by smallest member id, members by id.
std::vector<std::vector<NodeId>> cluster_level(
    const std::vector<std::pair<NodeId, const FlatParams*>>& models, double tau);

// Bottom-up tree construction: at each level compute tau_l, cluster,
// aggregate multi-member clusters, promote singletons; models still
// standing at level H are force-merged into a single root.
NodeTree build_tree(const std::vector<std::pair<ClientId, FlatParams>>& leaves,
                    const ThresholdSchedule& schedule);

// Star aggregation expressed as a depth-1 tree: one root whose params are
// the weighted average of all leaves.
NodeTree build_star(const std::vector<std::pair<ClientId, FlatParams>>& leaves);

// [leaf, parent, ..., root] in order of increasing level.
std::vector<const TreeNode*> chain_to_root(const NodeTree& tree,
                                           ClientId leaf_client);

// Structured-text export (one node per line) for the CLI's --dump-tree.
std::string dump_tree(const NodeTree& tree);

}  // namespace treefed

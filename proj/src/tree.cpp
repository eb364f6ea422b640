#include "treefed/tree.hpp"

#include <algorithm>
#include <sstream>

namespace treefed {

const TreeNode& NodeTree::node(NodeId id) const {
  auto it = nodes.find(id);
  if (it == nodes.end()) {
    throw Error(ErrorCode::UnknownClient, "unknown node id");
  }
  return it->second;
}

TreeNode& NodeTree::node(NodeId id) {
  auto it = nodes.find(id);
  if (it == nodes.end()) {
    throw Error(ErrorCode::UnknownClient, "unknown node id");
  }
  return it->second;
}

NodeId NodeTree::leaf_of(ClientId client) const {
  for (const auto& [id, node] : nodes) {
    if (node.is_leaf() && node.source_clients.count(client) != 0) {
      return id;
    }
  }
  throw Error(ErrorCode::UnknownClient,
              "client " + std::to_string(client) + " not in tree");
}

double threshold_at(const ThresholdSchedule& schedule, int level) {
  if (level < 0 || level > schedule.height) {
    throw Error(ErrorCode::LevelOutOfRange,
                "level " + std::to_string(level) + " outside [0, H]");
  }
  double tau = schedule.tau0 +
               schedule.beta * (static_cast<double>(level) /
                                static_cast<double>(schedule.height));
  return std::min(tau, 1.0);
}

std::vector<std::vector<NodeId>> cluster_level(
    const std::vector<std::pair<NodeId, const FlatParams*>>& models,
    double tau) {
  if (models.empty()) {
    throw Error(ErrorCode::EmptyInput, "cluster_level: no models");
  }
  std::vector<std::pair<NodeId, const FlatParams*>> sorted = models;
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  const std::size_t n = sorted.size();
  std::vector<std::size_t> comp(n);
  for (std::size_t i = 0; i < n; ++i) comp[i] = i;
  auto find = [&comp](std::size_t i) {
    while (comp[i] != i) {
      comp[i] = comp[comp[i]];
      i = comp[i];
    }
    return i;
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (cosine_similarity(*sorted[i].second, *sorted[j].second) >= tau) {
        std::size_t ri = find(i), rj = find(j);
        if (ri != rj) comp[std::max(ri, rj)] = std::min(ri, rj);
      }
    }
  }
  // Group by root; roots are already the smallest index of each component,
  // and sorted order means the result is ordered by smallest member id.
  std::vector<std::vector<NodeId>> clusters;
  std::map<std::size_t, std::size_t> root_to_cluster;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t r = find(i);
    auto it = root_to_cluster.find(r);
    if (it == root_to_cluster.end()) {
      root_to_cluster.emplace(r, clusters.size());
      clusters.push_back({sorted[i].first});
    } else {
      clusters[it->second].push_back(sorted[i].first);
    }
  }
  return clusters;
}

namespace {

NodeTree make_leaves(const std::vector<std::pair<ClientId, FlatParams>>& leaves) {
  if (leaves.empty()) {
    throw Error(ErrorCode::EmptyInput, "build_tree: no leaves");
  }
  std::vector<std::pair<ClientId, FlatParams>> sorted = leaves;
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  NodeTree tree;
  NodeId next_id = 0;
  for (auto& [client, params] : sorted) {
    TreeNode node;
    node.id = next_id++;
    node.level = 0;
    node.params = std::move(params);
    node.source_clients = {client};
    tree.nodes.emplace(node.id, std::move(node));
  }
  return tree;
}

NodeId aggregate_cluster(NodeTree& tree, const std::vector<NodeId>& members,
                         int level, NodeId id) {
  TreeNode parent;
  parent.id = id;
  parent.level = level;
  std::vector<FlatParams> child_params;
  child_params.reserve(members.size());
  for (NodeId m : members) {
    TreeNode& child = tree.node(m);
    child.parent = id;
    parent.children.push_back(m);
    parent.source_clients.insert(child.source_clients.begin(),
                                 child.source_clients.end());
    child_params.push_back(child.params);
  }
  parent.params = weighted_average(child_params);
  tree.nodes.emplace(id, std::move(parent));
  return id;
}

}  // namespace

NodeTree build_tree(const std::vector<std::pair<ClientId, FlatParams>>& leaves,
                    const ThresholdSchedule& schedule) {
  NodeTree tree = make_leaves(leaves);
  NodeId next_id = static_cast<NodeId>(tree.nodes.size());

  std::vector<NodeId> active;
  for (const auto& [id, node] : tree.nodes) active.push_back(id);

  if (active.size() == 1) {
    // Degenerate federation: the root is a forced copy of the single leaf.
    TreeNode& leaf = tree.node(active[0]);
    TreeNode root;
    root.id = next_id;
    root.level = 1;
    root.params = leaf.params;
    root.children = {leaf.id};
    root.source_clients = leaf.source_clients;
    leaf.parent = root.id;
    tree.root = root.id;
    tree.height = 1;
    tree.nodes.emplace(root.id, std::move(root));
    return tree;
  }

  for (int level = 1; level <= schedule.height && active.size() > 1; ++level) {
    if (level == schedule.height) {
      // Non-convergence at the cap: force one aggregation into the root.
      NodeId root = aggregate_cluster(tree, active, level, next_id++);
      active = {root};
      break;
    }
    double tau = threshold_at(schedule, level);
    std::vector<std::pair<NodeId, const FlatParams*>> frontier;
    frontier.reserve(active.size());
    for (NodeId id : active) frontier.emplace_back(id, &tree.node(id).params);
    std::vector<NodeId> next_active;
    for (const auto& cluster : cluster_level(frontier, tau)) {
      if (cluster.size() > 1) {
        next_active.push_back(aggregate_cluster(tree, cluster, level, next_id++));
      } else {
        tree.node(cluster[0]).level = level;
        next_active.push_back(cluster[0]);
      }
    }
    std::sort(next_active.begin(), next_active.end());
    active = std::move(next_active);
  }

  tree.root = active[0];
  tree.height = tree.node(tree.root).level;
  return tree;
}

NodeTree build_star(const std::vector<std::pair<ClientId, FlatParams>>& leaves) {
  NodeTree tree = make_leaves(leaves);
  std::vector<NodeId> members;
  for (const auto& [id, node] : tree.nodes) members.push_back(id);
  if (members.size() == 1) {
    ThresholdSchedule unused;
    return build_tree(leaves, unused);
  }
  NodeId root = aggregate_cluster(tree, members,
                                  /*level=*/1,
                                  static_cast<NodeId>(members.size()));
  tree.root = root;
  tree.height = 1;
  return tree;
}

std::vector<const TreeNode*> chain_to_root(const NodeTree& tree,
                                           ClientId leaf_client) {
  NodeId id = tree.leaf_of(leaf_client);
  std::vector<const TreeNode*> chain;
  const TreeNode* node = &tree.node(id);
  chain.push_back(node);
  while (node->parent.has_value()) {
    node = &tree.node(*node->parent);
    chain.push_back(node);
  }
  return chain;
}

std::string dump_tree(const NodeTree& tree) {
  std::ostringstream out;
  out << "tree root=" << tree.root << " height=" << tree.height
      << " nodes=" << tree.nodes.size() << "\n";
  for (const auto& [id, node] : tree.nodes) {
    out << "node id=" << id << " level=" << node.level << " parent=";
    if (node.parent.has_value()) {
      out << *node.parent;
    } else {
      out << "-";
    }
    out << " clients=";
    bool first = true;
    for (ClientId c : node.source_clients) {
      if (!first) out << ",";
      out << c;
      first = false;
    }
    out << " checksum=" << std::hex << checksum(node.params) << std::dec << "\n";
  }
  return out.str();
}

}  // namespace treefed

#pragma once

#include <map>

#include "treefed/tree.hpp"

namespace treefed {

struct FusionConfig {
  double epsilon0 = 0.8;  // initial progressive fusion coefficient
  double omega = 0.5;     // decay factor, in (0, 1)
  LayerPartition partition;
};

enum class FusionMode {
  kDirect,       // parent overwrites all child layers (ablation)
  kFull,         // all layers blended with epsilon_j (ablation)
  kProgressive,  // variable layers blended, fixed layers untouched
};

// epsilon_j = epsilon0 * omega^(1 - l), clamped to [0, 1]; l is the
// child's level so leaves retain the most local specificity.
double fusion_coefficient(const FusionConfig& config, int child_level);

// Top-down breadth-first dissemination from the root. Children blend with
// their parent's already-updated parameters. Mutates the tree in place and
// returns the final per-client leaf parameter map.
std::map<ClientId, FlatParams> disseminate(NodeTree& tree,
                                           const FusionConfig& config,
                                           FusionMode mode = FusionMode::kProgressive);

}  // namespace treefed

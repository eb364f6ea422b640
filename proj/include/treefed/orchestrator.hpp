#pragma once

#include <map>
#include <string>
#include <vector>

#include "treefed/fedstyle.hpp"
#include "treefed/fusion.hpp"
#include "treefed/inference.hpp"
#include "treefed/localsim.hpp"
#include "treefed/metrics.hpp"
#include "treefed/tree.hpp"

namespace treefed {

enum class Topology { kTree, kStar };

struct ExperimentConfig {
  std::vector<DomainSpec> domains;

  int rounds = 15;
  int local_epochs = 5;
  double lr = 0.2;
  std::size_t batch_size = 8;

  ThresholdSchedule schedule;  // tau0, beta, max height H

  double epsilon0 = 0.8;
  double omega = 0.5;
  FusionMode fusion = FusionMode::kProgressive;

  bool fedstyle = true;
  double phi = 0.1;
  double mix_prob = 0.5;

  double depth_coeff = 0.5;
  SelectionStrategy selection = SelectionStrategy::kAllWeighted;

  Topology topology = Topology::kTree;
  LayerPartition partition{{"head"}, {"conv", "hidden"}};
  FeatureExtractor extractor;

  std::uint64_t seed = 0;

  void validate() const;
};

// Four domains with distinct acquisition styles, grouped in two loose
// pairs (bright/low-contrast vs dark/high-gamma) so cross-site shift is
// real but each held-out domain has a plausible sibling.
ExperimentConfig default_config();

// Flat dotted-key structured text, e.g. "fusion.epsilon0 = 0.8".
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::string& path);
std::string format_config(const ExperimentConfig& config);

struct RoundLog {
  int round = 0;
  std::vector<std::vector<std::vector<NodeId>>> clusters_per_level;
  std::vector<std::vector<double>> similarity;  // leaf pairwise, id order
  std::uint64_t tree_checksum = 0;
  std::map<ClientId, double> client_loss;
  std::map<ClientId, ClientId> style_partner;
  double wall_seconds = 0.0;
};

struct FederationState {
  std::map<ClientId, FlatParams> models;
  std::map<ClientId, StyleBuffer> style_buffers;
  NodeTree tree;  // post-fusion tree of the last completed round
  int round = 0;
  std::vector<RoundLog> logs;
};

// Identical random init shared by every client.
FederationState init_state(const ExperimentConfig& config,
                           const std::vector<ClientId>& clients);

// One communication round: style pairing, local training, tree build,
// top-down dissemination, logging.
void run_round(FederationState& state,
               const std::map<ClientId, std::vector<SegSample>>& data,
               const ExperimentConfig& config);

FederationState run_training(const ExperimentConfig& config,
                             const std::map<ClientId, std::vector<SegSample>>& data);

struct FoldResult {
  int held_out = -1;
  int matched_domain = -1;
  double mean_dice = 0.0;        // macro over disc/cup, mean over images
  double mean_hd95 = 0.0;        // infinite values capped at the image diagonal
  std::vector<double> class_dice;  // disc, cup
  std::vector<double> class_hd95;
  std::uint64_t tree_checksum = 0;
};

struct LooReport {
  std::vector<FoldResult> folds;
  double mean_dice = 0.0;
  double dice_std = 0.0;  // population std of fold dices
};

// Leave-one-domain-out: each domain in turn is the unseen target.
LooReport leave_one_out(const ExperimentConfig& config);

std::string format_report(const LooReport& report, const ExperimentConfig& config);
std::string format_report_csv(const LooReport& report);

}  // namespace treefed

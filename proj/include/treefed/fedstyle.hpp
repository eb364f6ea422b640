#pragma once

#include <map>
#include <vector>

#include "treefed/image.hpp"
#include "treefed/params.hpp"
#include "treefed/rng.hpp"

namespace treefed {

// Per-channel mean/std pair; the exchanged style payload. Only statistics
// cross the client boundary, never images.
struct StyleStats {
  std::vector<double> mean;
  std::vector<double> std;
};

struct MixConfig {
  double phi = 0.1;              // Beta concentration
  double activation_prob = 0.5;  // probability of mixing per forward batch
  double epsilon = 1e-6;         // variance floor for constant inputs
};

// Partner = the client with the lowest parameter cosine similarity;
// ties broken by smallest id.
int select_partner(int client, const std::map<int, FlatParams>& all_params);

// Per-channel spatial mean and population standard deviation over the
// whole batch (divide by N*H*W, not N*H*W - 1).
StyleStats extract_stats(const Batch& batch);

// Style mixing: normalize the batch by its own statistics, then re-color
// with the lambda-blend of own and partner statistics.
Batch mix(const Batch& batch, const StyleStats& own, const StyleStats& partner,
          double lambda, double epsilon);

// Buffer of partner statistics published once per round.
using StyleBuffer = std::vector<StyleStats>;

struct MixOutcome {
  Batch batch;
  bool applied = false;
};

// With probability activation_prob, draw lambda ~ Beta(phi, phi), pick one
// StyleStats uniformly from the partner buffer, and mix. Empty buffer on
// activation falls back to identity.
MixOutcome maybe_mix(const Batch& batch, const StyleBuffer& partner_stats,
                     const MixConfig& config, Rng& rng);

}  // namespace treefed

#pragma once

#include <vector>

#include "treefed/error.hpp"
#include "treefed/image.hpp"

namespace treefed {

// 2|P n T| / (|P| + |T|); 1.0 when both masks are empty.
double dice(const Mask& pred, const Mask& truth);

// 95th percentile (linear interpolation) of the symmetric set of
// boundary-to-boundary Euclidean nearest distances. Boundary pixels are
// mask pixels 4-adjacent to background (grid edges count as background).
// 0 when both masks are empty, +inf when exactly one is.
double hd95(const Mask& pred, const Mask& truth);

// Population standard deviation across unseen sites; needs >= 2 values.
double site_std(const std::vector<double>& dices);

struct ClassMetrics {
  double dice = 0.0;
  double hd95 = 0.0;
};

// One-vs-rest per foreground class (disc, cup), in class order 1, 2.
std::vector<ClassMetrics> per_class_metrics(const Mask& pred, const Mask& truth);

}  // namespace treefed

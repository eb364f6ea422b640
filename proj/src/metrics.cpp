#include "treefed/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "treefed/error.hpp"
#include "treefed/localsim.hpp"

namespace treefed {

namespace {

void check_shapes(const Mask& a, const Mask& b) {
  if (a.height != b.height || a.width != b.width) {
    throw Error(ErrorCode::ShapeMismatch, "mask shapes differ");
  }
}

struct Point {
  double y, x;
};

// Mask pixels 4-adjacent to background; out-of-grid counts as background.
std::vector<Point> boundary(const Mask& mask) {
  std::vector<Point> pts;
  const auto h = static_cast<std::ptrdiff_t>(mask.height);
  const auto w = static_cast<std::ptrdiff_t>(mask.width);
  auto fg = [&](std::ptrdiff_t y, std::ptrdiff_t x) {
    if (y < 0 || y >= h || x < 0 || x >= w) return false;
    return mask.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x)) != 0;
  };
  for (std::ptrdiff_t y = 0; y < h; ++y) {
    for (std::ptrdiff_t x = 0; x < w; ++x) {
      if (!fg(y, x)) continue;
      if (!fg(y - 1, x) || !fg(y + 1, x) || !fg(y, x - 1) || !fg(y, x + 1)) {
        pts.push_back({static_cast<double>(y), static_cast<double>(x)});
      }
    }
  }
  return pts;
}

void directed_distances(const std::vector<Point>& from,
                        const std::vector<Point>& to,
                        std::vector<double>& out) {
  for (const Point& p : from) {
    double best = std::numeric_limits<double>::infinity();
    for (const Point& q : to) {
      const double dy = p.y - q.y, dx = p.x - q.x;
      best = std::min(best, dy * dy + dx * dx);
    }
    out.push_back(std::sqrt(best));
  }
}

// Inclusive linear-interpolation percentile.
double percentile(std::vector<double> values, double p) {
  std::sort(values.begin(), values.end());
  const double rank = p * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const auto hi = static_cast<std::size_t>(std::ceil(rank));
  const double frac = rank - std::floor(rank);
  return values[lo] + frac * (values[hi] - values[lo]);
}

}  // namespace

double dice(const Mask& pred, const Mask& truth) {
  check_shapes(pred, truth);
  std::size_t inter = 0, p_count = 0, t_count = 0;
  for (std::size_t i = 0; i < pred.data.size(); ++i) {
    const bool p = pred.data[i] != 0;
    const bool t = truth.data[i] != 0;
    inter += static_cast<std::size_t>(p && t);
    p_count += static_cast<std::size_t>(p);
    t_count += static_cast<std::size_t>(t);
  }
  if (p_count + t_count == 0) return 1.0;
  return 2.0 * static_cast<double>(inter) /
         static_cast<double>(p_count + t_count);
}

double hd95(const Mask& pred, const Mask& truth) {
  check_shapes(pred, truth);
  std::vector<Point> bp = boundary(pred);
  std::vector<Point> bt = boundary(truth);
  if (bp.empty() && bt.empty()) return 0.0;
  if (bp.empty() || bt.empty()) {
    return std::numeric_limits<double>::infinity();
  }
  std::vector<double> distances;
  distances.reserve(bp.size() + bt.size());
  directed_distances(bp, bt, distances);
  directed_distances(bt, bp, distances);
  return percentile(std::move(distances), 0.95);
}

double site_std(const std::vector<double>& dices) {
  if (dices.size() < 2) {
    throw Error(ErrorCode::TooFewSites, "site_std: need >= 2 values");
  }
  double mean = 0.0;
  for (double d : dices) mean += d;
  mean /= static_cast<double>(dices.size());
  double var = 0.0;
  for (double d : dices) var += (d - mean) * (d - mean);
  return std::sqrt(var / static_cast<double>(dices.size()));
}

std::vector<ClassMetrics> per_class_metrics(const Mask& pred,
                                            const Mask& truth) {
  check_shapes(pred, truth);
  std::vector<ClassMetrics> out;
  for (std::uint8_t cls : {kDisc, kCup}) {
    Mask p = Mask::zeros(pred.height, pred.width);
    Mask t = Mask::zeros(truth.height, truth.width);
    for (std::size_t i = 0; i < pred.data.size(); ++i) {
      p.data[i] = pred.data[i] == cls ? 1 : 0;
      t.data[i] = truth.data[i] == cls ? 1 : 0;
    }
    out.push_back({dice(p, t), hd95(p, t)});
  }
  return out;
}

}  // namespace treefed

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "treefed/image.hpp"
#include "treefed/params.hpp"
#include "treefed/rng.hpp"

namespace treefed {

// Mask labels: 0 background, 1 disc, 2 cup (cup nested inside disc).
inline constexpr std::uint8_t kBackground = 0;
inline constexpr std::uint8_t kDisc = 1;
inline constexpr std::uint8_t kCup = 2;
inline constexpr int kNumClasses = 3;

struct SegSample {
  Image image;  // intensities in [0, 1]
  Mask mask;
};

// Controllable stand-in for inter-site acquisition differences: each
// domain renders the same nested-ellipse geometry through its own
// intensity transfer curve and noise level.
struct DomainSpec {
  int domain_id = 0;
  double brightness_shift = 0.0;
  double contrast_gain = 1.0;
  double gamma = 1.0;       // > 0
  double noise_std = 0.0;   // >= 0
  double shape_eccentricity = 0.0;
  std::size_t n_samples = 40;
  std::size_t image_size = 32;
  std::uint64_t seed = 0;
};

std::vector<SegSample> generate_domain(const DomainSpec& spec);

// Per-pixel featurized classifier with a layered parameter vector:
//   conv:   8x5 weights + 8 bias over the handcrafted pixel features
//   hidden: 8x8 weights + 8 bias
//   head:   3x8 weights + 3 bias (per-class scores)
// Pixel features: intensity, local 3x3 mean, horizontal gradient,
// vertical gradient, radial coordinate.
struct ToyModel {
  static constexpr std::size_t kFeatures = 5;
  static constexpr std::size_t kHidden = 8;

  FlatParams params;
};

// Zero-valued model with the federation-wide layer layout.
ToyModel make_toy_model();
// Small random init; all clients start from the same init in a federation.
ToyModel init_toy_model(Rng& rng, double scale = 0.2);

// Per-pixel class scores, channels = kNumClasses.
Image forward(const ToyModel& model, const Image& image);
// Argmax prediction; ties break to the lowest class index.
Mask predict(const ToyModel& model, const Image& image);

// Mean per-pixel cross-entropy over the set.
double cross_entropy(const ToyModel& model, const std::vector<SegSample>& data);

// Mean per-pixel cross-entropy over one batch plus the analytic gradient
// (same layout as the model params). Exposed for the finite-difference check.
double loss_and_grad(const ToyModel& model, const Batch& images,
                     const std::vector<const Mask*>& masks, FlatParams& grad);

// Applied to each input batch before the forward pass; masks are untouched
// and the mixing statistics never enter the gradient.
using MixerHook = std::function<Batch(const Batch&)>;

ToyModel train_local(ToyModel model, const std::vector<SegSample>& data,
                     int epochs, double lr, std::size_t batch_size,
                     const MixerHook* mixer, Rng& rng);

// PGM (P5) dataset exchange used by --export-data / --data-dir.
void write_pgm(const std::string& path, const Image& image);
void write_mask_pgm(const std::string& path, const Mask& mask);
Image read_pgm(const std::string& path);
Mask read_mask_pgm(const std::string& path);

void export_dataset(const std::string& dir,
                    const std::vector<DomainSpec>& specs,
                    const std::vector<std::vector<SegSample>>& domains);
std::pair<std::vector<DomainSpec>, std::vector<std::vector<SegSample>>>
import_dataset(const std::string& dir);

}  // namespace treefed

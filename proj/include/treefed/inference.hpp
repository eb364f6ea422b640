#pragma once

#include <map>
#include <vector>

#include "treefed/image.hpp"
#include "treefed/localsim.hpp"
#include "treefed/tree.hpp"

namespace treefed {

// Aggregated feature statistics of a domain's images:
// [mean(f), std(f), Hist(f)] per image, averaged over the set.
struct DomainDescriptor {
  std::vector<double> vector;
  std::size_t n_images = 0;
};

// Frozen random projection bank standing in for a pretrained backbone.
// The bank is a pure function of (seed, image size), so descriptors are
// bit-identical across runs. Pluggable: anything producing a per-image
// feature vector can replace project().
struct FeatureExtractor {
  std::uint64_t seed = 1234;
  std::size_t n_projections = 32;
  std::size_t hist_bins = 16;

  std::vector<double> project(const Image& image) const;
};

DomainDescriptor extract_descriptor(const std::vector<Image>& images,
                                    const FeatureExtractor& extractor);

// argmax over sources of descriptor cosine similarity; ties break to the
// smallest domain id.
int match_domain(const DomainDescriptor& target,
                 const std::map<int, DomainDescriptor>& sources);

struct EnsembleWeights {
  std::vector<double> weights;  // indexed by chain position, 0 = leaf
  double depth_coeff = 0.5;
};

// softmax over -depth_coeff * h for h = 0..chain_length-1.
EnsembleWeights chain_weights(std::size_t chain_length, double depth_coeff);

// Depth-weighted pixel-wise voting; each model votes its argmax class and
// the heaviest class wins, ties to the smallest class index.
Mask ensemble_predict(const std::vector<const FlatParams*>& chain,
                      const EnsembleWeights& weights, const Image& image);

enum class SelectionStrategy {
  kRootOnly,
  kRootMid,     // root + intermediate nodes, leaf excluded
  kAllEqual,
  kAllWeighted,  // default: decay weights along the full chain
  kBestLeaf,
};

struct InferenceConfig {
  FeatureExtractor extractor;
  double depth_coeff = 0.5;
  SelectionStrategy strategy = SelectionStrategy::kAllWeighted;
};

struct InferenceResult {
  std::vector<Mask> masks;
  int matched_domain = -1;
  std::vector<NodeId> chain_node_ids;  // the voting subset, leaf side first
  std::vector<double> weights;
};

// extract_descriptor -> match_domain -> chain_to_root -> chain_weights ->
// ensemble_predict over all target images.
InferenceResult infer_target(const NodeTree& tree,
                             const std::map<int, DomainDescriptor>& sources,
                             const std::vector<Image>& target_images,
                             const InferenceConfig& config);

}  // namespace treefed

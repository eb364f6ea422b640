#include "treefed/inference.hpp"

#include <algorithm>
#include <cmath>

namespace treefed {

std::vector<double> FeatureExtractor::project(const Image& image) const {
  // Bank regenerated from (seed, H, W); weights are positive and sum to 1
  // per projection, so a constant image maps to a constant feature vector.
  Rng rng(derive_seed(seed, image.height, image.width));
  const std::size_t n = image.height * image.width * image.channels;
  std::vector<double> features(n_projections, 0.0);
  std::vector<double> weights(n);
  for (std::size_t k = 0; k < n_projections; ++k) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      weights[i] = rng.uniform();
      sum += weights[i];
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += weights[i] * image.data[i];
    features[k] = acc / sum;
  }
  return features;
}

namespace {

std::vector<double> image_descriptor(const std::vector<double>& f,
                                     std::size_t hist_bins) {
  const std::size_t n = f.size();
  double mean = 0.0;
  for (double v : f) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : f) var += (v - mean) * (v - mean);
  const double stddev = std::sqrt(var / static_cast<double>(n));

  std::vector<double> hist(hist_bins, 0.0);
  const double lo = *std::min_element(f.begin(), f.end());
  const double hi = *std::max_element(f.begin(), f.end());
  // rounding noise on constant inputs must not masquerade as range
  const double span_floor = 1e-12 * std::max(1.0, std::abs(hi));
  if (hi - lo > span_floor) {
    for (double v : f) {
      auto bin = static_cast<std::size_t>((v - lo) / (hi - lo) *
                                          static_cast<double>(hist_bins));
      if (bin >= hist_bins) bin = hist_bins - 1;
      hist[bin] += 1.0;
    }
  } else {
    hist[0] = static_cast<double>(n);  // degenerate range: all mass in bin 0
  }
  for (double& h : hist) h /= static_cast<double>(n);

  std::vector<double> out;
  out.reserve(2 + hist_bins);
  out.push_back(mean);
  out.push_back(stddev);
  out.insert(out.end(), hist.begin(), hist.end());
  return out;
}

double vec_cosine(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::LengthMismatch, "descriptor lengths differ");
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) {
    throw Error(ErrorCode::ZeroVector, "zero descriptor vector");
  }
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace

DomainDescriptor extract_descriptor(const std::vector<Image>& images,
                                    const FeatureExtractor& extractor) {
  if (images.empty()) {
    throw Error(ErrorCode::EmptyInput, "extract_descriptor: no images");
  }
  DomainDescriptor desc;
  desc.n_images = images.size();
  for (const Image& img : images) {
    std::vector<double> d =
        image_descriptor(extractor.project(img), extractor.hist_bins);
    if (desc.vector.empty()) {
      desc.vector.assign(d.size(), 0.0);
    }
    for (std::size_t i = 0; i < d.size(); ++i) desc.vector[i] += d[i];
  }
  for (double& v : desc.vector) v /= static_cast<double>(images.size());
  return desc;
}

int match_domain(const DomainDescriptor& target,
                 const std::map<int, DomainDescriptor>& sources) {
  if (sources.empty()) {
    throw Error(ErrorCode::EmptySources, "match_domain: no sources");
  }
  int best = -1;
  double best_sim = -2.0;
  for (const auto& [id, desc] : sources) {
    double sim = vec_cosine(target.vector, desc.vector);
    if (sim > best_sim) {  // strict '>' plus map order gives smallest-id ties
      best_sim = sim;
      best = id;
    }
  }
  return best;
}

EnsembleWeights chain_weights(std::size_t chain_length, double depth_coeff) {
  EnsembleWeights w;
  w.depth_coeff = depth_coeff;
  w.weights.resize(chain_length);
  double sum = 0.0;
  for (std::size_t h = 0; h < chain_length; ++h) {
    w.weights[h] = std::exp(-depth_coeff * static_cast<double>(h));
    sum += w.weights[h];
  }
  for (double& v : w.weights) v /= sum;
  return w;
}

Mask ensemble_predict(const std::vector<const FlatParams*>& chain,
                      const EnsembleWeights& weights, const Image& image) {
  if (chain.empty()) {
    throw Error(ErrorCode::EmptyInput, "ensemble_predict: empty chain");
  }
  if (chain.size() != weights.weights.size()) {
    throw Error(ErrorCode::LengthMismatch,
                "ensemble_predict: chain/weights length mismatch");
  }
  std::vector<double> votes(kNumClasses * image.height * image.width, 0.0);
  for (std::size_t h = 0; h < chain.size(); ++h) {
    ToyModel model{*chain[h]};
    Mask pred = predict(model, image);
    for (std::size_t i = 0; i < pred.data.size(); ++i) {
      votes[pred.data[i] * image.height * image.width + i] +=
          weights.weights[h];
    }
  }
  Mask out = Mask::zeros(image.height, image.width);
  const std::size_t plane = image.height * image.width;
  for (std::size_t i = 0; i < plane; ++i) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < kNumClasses; ++c) {
      if (votes[c * plane + i] > votes[best * plane + i]) best = c;
    }
    out.data[i] = static_cast<std::uint8_t>(best);
  }
  return out;
}

InferenceResult infer_target(const NodeTree& tree,
                             const std::map<int, DomainDescriptor>& sources,
                             const std::vector<Image>& target_images,
                             const InferenceConfig& config) {
  InferenceResult result;
  DomainDescriptor target = extract_descriptor(target_images, config.extractor);
  result.matched_domain = match_domain(target, sources);

  std::vector<const TreeNode*> chain = chain_to_root(tree, result.matched_domain);

  // Apply the selection strategy to the full chain.
  std::vector<const TreeNode*> voting;
  EnsembleWeights weights;
  switch (config.strategy) {
    case SelectionStrategy::kRootOnly:
      voting = {chain.back()};
      weights = chain_weights(1, 0.0);
      break;
    case SelectionStrategy::kBestLeaf:
      voting = {chain.front()};
      weights = chain_weights(1, 0.0);
      break;
    case SelectionStrategy::kRootMid:
      voting.assign(chain.begin() + 1, chain.end());
      if (voting.empty()) voting = {chain.back()};
      weights = chain_weights(voting.size(), 0.0);
      break;
    case SelectionStrategy::kAllEqual:
      voting = chain;
      weights = chain_weights(voting.size(), 0.0);
      break;
    case SelectionStrategy::kAllWeighted:
      voting = chain;
      weights = chain_weights(voting.size(), config.depth_coeff);
      break;
  }

  std::vector<const FlatParams*> params;
  for (const TreeNode* node : voting) {
    result.chain_node_ids.push_back(node->id);
    params.push_back(&node->params);
  }
  result.weights = weights.weights;

  result.masks.reserve(target_images.size());
  for (const Image& img : target_images) {
    result.masks.push_back(ensemble_predict(params, weights, img));
  }
  return result;
}

}  // namespace treefed

#include "treefed/fedstyle.hpp"

#include <cmath>
#include <limits>

namespace treefed {

int select_partner(int client, const std::map<int, FlatParams>& all_params) {
  if (all_params.size() < 2) {
    throw Error(ErrorCode::SingleClient,
                "select_partner: need at least two clients");
  }
  auto self = all_params.find(client);
  if (self == all_params.end()) {
    throw Error(ErrorCode::UnknownClient, "select_partner: unknown client");
  }
  int best = -1;
  double best_sim = std::numeric_limits<double>::infinity();
  for (const auto& [id, params] : all_params) {
    if (id == client) continue;
    double sim = cosine_similarity(self->second, params);
    if (sim < best_sim) {  // map order makes ties resolve to smallest id
      best_sim = sim;
      best = id;
    }
  }
  return best;
}

StyleStats extract_stats(const Batch& batch) {
  if (batch.empty()) {
    throw Error(ErrorCode::EmptyBatch, "extract_stats: empty batch");
  }
  const std::size_t channels = batch.front().channels;
  StyleStats stats;
  stats.mean.assign(channels, 0.0);
  stats.std.assign(channels, 0.0);
  std::size_t count = 0;
  for (const auto& img : batch) {
    if (img.channels != channels) {
      throw Error(ErrorCode::ChannelMismatch, "extract_stats: channel mismatch");
    }
    count += img.height * img.width;
  }
  for (std::size_t c = 0; c < channels; ++c) {
    double sum = 0.0;
    for (const auto& img : batch) {
      for (std::size_t y = 0; y < img.height; ++y) {
        for (std::size_t x = 0; x < img.width; ++x) {
          sum += img.at(c, y, x);
        }
      }
    }
    const double mean = sum / static_cast<double>(count);
    double sq = 0.0;
    for (const auto& img : batch) {
      for (std::size_t y = 0; y < img.height; ++y) {
        for (std::size_t x = 0; x < img.width; ++x) {
          const double d = img.at(c, y, x) - mean;
          sq += d * d;
        }
      }
    }
    stats.mean[c] = mean;
    stats.std[c] = std::sqrt(sq / static_cast<double>(count));
  }
  return stats;
}

Batch mix(const Batch& batch, const StyleStats& own, const StyleStats& partner,
          double lambda, double epsilon) {
  if (own.mean.size() != partner.mean.size()) {
    throw Error(ErrorCode::ChannelMismatch, "mix: channel counts differ");
  }
  const std::size_t channels = own.mean.size();
  Batch out = batch;
  for (std::size_t c = 0; c < channels; ++c) {
    const double beta_mix = lambda * own.mean[c] + (1.0 - lambda) * partner.mean[c];
    const double gamma_mix = lambda * own.std[c] + (1.0 - lambda) * partner.std[c];
    const double inv = 1.0 / (own.std[c] + epsilon);
    for (auto& img : out) {
      if (img.channels != channels) {
        throw Error(ErrorCode::ChannelMismatch, "mix: channel counts differ");
      }
      for (std::size_t y = 0; y < img.height; ++y) {
        for (std::size_t x = 0; x < img.width; ++x) {
          img.at(c, y, x) =
              gamma_mix * (img.at(c, y, x) - own.mean[c]) * inv + beta_mix;
        }
      }
    }
  }
  return out;
}

MixOutcome maybe_mix(const Batch& batch, const StyleBuffer& partner_stats,
                     const MixConfig& config, Rng& rng) {
  if (rng.uniform() >= config.activation_prob) {
    return {batch, false};
  }
  double lambda = rng.beta(config.phi);
  if (partner_stats.empty()) {
    return {batch, false};
  }
  const StyleStats& chosen =
      partner_stats[rng.uniform_index(partner_stats.size())];
  StyleStats own = extract_stats(batch);
  return {mix(batch, own, chosen, lambda, config.epsilon), true};
}

}  // namespace treefed

// Acceptance gate: one line per criterion, exit 0 only if every hard
// criterion holds. C8 is a soft directional check; its result is always
// printed with per-seed data and does not gate the exit code.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "treefed/orchestrator.hpp"

using namespace treefed;

namespace {

int hard_failures = 0;

void report(bool ok, bool soft, const std::string& name,
            const std::string& detail) {
  std::printf("[%s]%s %s: %s\n", ok ? "PASS" : "FAIL", soft ? " (soft)" : "",
              name.c_str(), detail.c_str());
  if (!ok && !soft) ++hard_failures;
}

double elapsed(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

// ---- C1: FedAvg degeneracy --------------------------------------------

ExperimentConfig c1_config(std::uint64_t seed) {
  ExperimentConfig config = default_config();
  config.seed = seed;
  config.rounds = 10;
  config.local_epochs = 2;
  config.batch_size = 4;
  config.topology = Topology::kStar;
  config.fusion = FusionMode::kDirect;
  config.fedstyle = false;
  for (auto& d : config.domains) {
    d.n_samples = 8;
    d.image_size = 12;
  }
  return config;
}

void criterion_fedavg() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    ExperimentConfig config = c1_config(seed);
    std::map<ClientId, std::vector<SegSample>> data;
    for (const DomainSpec& spec : config.domains) {
      DomainSpec stamped = spec;
      stamped.seed = spec.seed ^ mix_seed(config.seed);
      data.emplace(spec.domain_id, generate_domain(stamped));
    }
    // independent reference: broadcast, train, sample-weighted average
    Rng init_rng(derive_seed(config.seed, 0x1717));
    FlatParams reference = init_toy_model(init_rng).params;

    std::vector<ClientId> clients;
    for (const auto& [c, unused] : data) clients.push_back(c);
    FederationState state = init_state(config, clients);

    for (int r = 0; r < config.rounds; ++r) {
      double total = 0.0;
      std::vector<double> acc(reference.values.size(), 0.0);
      for (const auto& [client, samples] : data) {
        Rng rng(derive_seed(config.seed,
                            static_cast<std::uint64_t>(client) + 101,
                            static_cast<std::uint64_t>(r) + 1));
        ToyModel local{reference};
        local = train_local(std::move(local), samples, config.local_epochs,
                            config.lr, config.batch_size, nullptr, rng);
        const double n = static_cast<double>(samples.size());
        for (std::size_t i = 0; i < acc.size(); ++i) {
          acc[i] += n * local.params.values[i];
        }
        total += n;
      }
      for (std::size_t i = 0; i < acc.size(); ++i) {
        reference.values[i] = acc[i] / total;
      }

      run_round(state, data, config);
      const FlatParams& root = state.tree.node(state.tree.root).params;
      for (std::size_t i = 0; i < root.values.size(); ++i) {
        worst = std::max(worst, std::abs(root.values[i] - reference.values[i]));
      }
    }
  }
  const double dt = elapsed(t0);
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "max |delta| = %.3g over 10 rounds x 4 clients x 3 seeds, %.1fs",
                worst, dt);
  report(worst < 1e-9 && dt < 60.0, false, "C1 fedavg-degeneracy", buf);
}

// ---- C2: tree invariants ----------------------------------------------

void criterion_tree_invariants() {
  Rng rng(0xace2);
  int bad = 0;
  std::string first_error;
  auto flag = [&](const std::string& msg) {
    ++bad;
    if (first_error.empty()) first_error = msg;
  };
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n_clients = 2 + rng.uniform_index(6);
    const std::size_t dim = 4 + rng.uniform_index(8);
    ThresholdSchedule schedule;
    schedule.tau0 = rng.uniform(-0.2, 0.99);
    schedule.beta = rng.uniform(-0.3, 0.3);
    schedule.height = 1 + static_cast<int>(rng.uniform_index(4));

    std::vector<std::pair<ClientId, FlatParams>> leaves;
    for (std::size_t c = 0; c < n_clients; ++c) {
      FlatParams p = make_params({{"w", dim}}, 1 + rng.uniform_index(5));
      for (double& v : p.values) v = rng.normal(0.0, 1.0);
      leaves.emplace_back(static_cast<ClientId>(c), p);
    }
    NodeTree tree = build_tree(leaves, schedule);

    if (tree.height > schedule.height) flag("height exceeds H");
    if (tree.nodes.count(tree.root) == 0) flag("missing root");
    std::size_t roots = 0;
    for (const auto& [id, node] : tree.nodes) {
      if (!node.parent.has_value()) ++roots;
      if (node.is_leaf()) continue;
      // weighted average of children within 1e-12
      std::vector<FlatParams> kids;
      std::set<ClientId> merged;
      for (NodeId cid : node.children) {
        kids.push_back(tree.node(cid).params);
        for (ClientId c : tree.node(cid).source_clients) {
          if (!merged.insert(c).second) flag("overlapping source clients");
        }
      }
      if (merged != node.source_clients) flag("source client partition");
      FlatParams want = weighted_average(kids);
      for (std::size_t i = 0; i < want.values.size(); ++i) {
        if (std::abs(want.values[i] - node.params.values[i]) > 1e-12) {
          flag("aggregate != weighted average");
          break;
        }
      }
    }
    if (roots != 1) flag("root count != 1");
    if (tree.node(tree.root).source_clients.size() != n_clients) {
      flag("root does not cover all clients");
    }
  }
  char buf[160];
  std::snprintf(buf, sizeof(buf), "100 random instances, %d violations%s%s",
                bad, bad ? ", first: " : "", first_error.c_str());
  report(bad == 0, false, "C2 tree-invariants", buf);
}

// ---- C3: fedstyle identity and moments --------------------------------

void criterion_fedstyle() {
  Rng rng(0xf3d);
  bool ok = true;
  std::string detail = "identity, moments, beta mean all within bounds";

  Batch batch;
  for (int i = 0; i < 3; ++i) {
    Image img = Image::zeros(2, 6, 6);
    for (double& v : img.data) v = rng.uniform(0.1, 0.9);
    batch.push_back(img);
  }
  StyleStats own = extract_stats(batch);
  StyleStats partner;
  partner.mean = {0.7, 0.2};
  partner.std = {0.05, 0.3};

  // lambda = 1 with epsilon = 0 reproduces the input exactly
  Batch same = mix(batch, own, own, 1.0, 0.0);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    for (std::size_t k = 0; k < batch[i].data.size(); ++k) {
      if (std::abs(same[i].data[k] - batch[i].data[k]) > 1e-12) {
        ok = false;
        detail = "lambda=1 mix is not the identity";
      }
    }
  }

  // output moments equal the blended target statistics
  const double lambda = 0.3;
  Batch mixed = mix(batch, own, partner, lambda, 0.0);
  StyleStats out = extract_stats(mixed);
  for (std::size_t c = 0; c < out.mean.size(); ++c) {
    const double beta_mix = lambda * own.mean[c] + (1 - lambda) * partner.mean[c];
    const double gamma_mix = lambda * own.std[c] + (1 - lambda) * partner.std[c];
    if (std::abs(out.mean[c] - beta_mix) > 1e-9 ||
        std::abs(out.std[c] - gamma_mix) > 1e-9) {
      ok = false;
      detail = "mixed batch moments off target";
    }
  }

  // Beta(0.1, 0.1) empirical mean
  Rng beta_rng(0xbe7a);
  double sum = 0.0;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) sum += beta_rng.beta(0.1);
  const double mean = sum / draws;
  if (std::abs(mean - 0.5) > 0.01) {
    ok = false;
    detail = "beta(0.1) mean " + std::to_string(mean);
  }
  report(ok, false, "C3 fedstyle-identity-moments", detail);
}

// ---- C4: fusion convexity and conservation ----------------------------

void criterion_fusion() {
  Rng rng(0xf0510);
  bool ok = true;
  std::string detail = "convexity, fixed layers, eps0=0 no-op on 40 random trees";
  LayerPartition partition{{"head"}, {"body"}};
  for (int trial = 0; trial < 40 && ok; ++trial) {
    const std::size_t n = 2 + rng.uniform_index(5);
    std::vector<std::pair<ClientId, FlatParams>> leaves;
    for (std::size_t c = 0; c < n; ++c) {
      FlatParams p = make_params({{"body", 6}, {"head", 3}}, 1 + rng.uniform_index(4));
      for (double& v : p.values) v = rng.normal(0.0, 1.0);
      leaves.emplace_back(static_cast<ClientId>(c), p);
    }
    ThresholdSchedule schedule;
    schedule.tau0 = rng.uniform(-0.5, 0.95);
    NodeTree tree = build_tree(leaves, schedule);
    NodeTree before = tree;

    FusionConfig noop{0.0, 0.5, partition};
    NodeTree frozen = tree;
    disseminate(frozen, noop, FusionMode::kProgressive);
    for (const auto& [id, node] : frozen.nodes) {
      if (node.params.values != before.node(id).params.values) {
        ok = false;
        detail = "eps0=0 changed parameters";
      }
    }

    FusionConfig config{rng.uniform(0.1, 1.0), rng.uniform(0.2, 0.9), partition};
    disseminate(tree, config, FusionMode::kProgressive);
    for (const auto& [id, node] : tree.nodes) {
      if (!node.parent.has_value()) continue;
      const FlatParams& old = before.node(id).params;
      const FlatParams& parent_now = tree.node(*node.parent).params;
      auto body_old = before.node(id).params.layer("body");
      for (const LayerSpan& span : node.params.layout) {
        const bool fixed = partition.fixed_layers.count(span.name) != 0;
        for (std::size_t i = span.offset; i < span.offset + span.length; ++i) {
          if (fixed) {
            if (node.params.values[i] != old.values[i]) {
              ok = false;
              detail = "fixed layer modified";
            }
          } else {
            const double lo = std::min(old.values[i], parent_now.values[i]);
            const double hi = std::max(old.values[i], parent_now.values[i]);
            if (node.params.values[i] < lo - 1e-12 ||
                node.params.values[i] > hi + 1e-12) {
              ok = false;
              detail = "variable update left the old<->parent segment";
            }
          }
        }
      }
      (void)body_old;
    }
  }
  report(ok, false, "C4 fusion-convexity-conservation", detail);
}

// ---- C5: ensemble weights ---------------------------------------------

void criterion_chain_weights() {
  bool ok = true;
  std::string detail = "sum, monotonicity, hand-computed softmax all within bounds";
  for (std::size_t len : {1u, 2u, 3u, 5u, 8u}) {
    EnsembleWeights w = chain_weights(len, 0.7);
    double sum = 0.0;
    for (std::size_t h = 0; h < len; ++h) {
      sum += w.weights[h];
      if (h > 0 && !(w.weights[h] < w.weights[h - 1])) {
        ok = false;
        detail = "weights not strictly decreasing";
      }
    }
    if (std::abs(sum - 1.0) > 1e-12) {
      ok = false;
      detail = "weights do not sum to 1";
    }
  }
  EnsembleWeights w = chain_weights(3, 0.5);
  const double want[3] = {0.5065, 0.3072, 0.1863};
  for (int i = 0; i < 3; ++i) {
    if (std::abs(w.weights[i] - want[i]) > 1e-4) {
      ok = false;
      detail = "softmax values off the hand computation";
    }
  }
  report(ok, false, "C5 ensemble-weights", detail);
}

// ---- C6: metric oracles and gradient check ----------------------------

double dice_oracle(const Mask& p, const Mask& t) {
  double inter = 0, np = 0, nt = 0;
  for (std::size_t i = 0; i < p.data.size(); ++i) {
    if (p.data[i]) ++np;
    if (t.data[i]) ++nt;
    if (p.data[i] && t.data[i]) ++inter;
  }
  if (np + nt == 0) return 1.0;
  return 2.0 * inter / (np + nt);
}

double hd95_oracle(const Mask& a, const Mask& b) {
  auto boundary = [](const Mask& m) {
    std::vector<std::pair<int, int>> pts;
    const int h = static_cast<int>(m.height), w = static_cast<int>(m.width);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (m.at(y, x) == 0) continue;
        const int dy[] = {-1, 1, 0, 0}, dx[] = {0, 0, -1, 1};
        for (int k = 0; k < 4; ++k) {
          const int ny = y + dy[k], nx = x + dx[k];
          if (ny < 0 || ny >= h || nx < 0 || nx >= w || m.at(ny, nx) == 0) {
            pts.emplace_back(y, x);
            break;
          }
        }
      }
    }
    return pts;
  };
  auto ba = boundary(a), bb = boundary(b);
  if (ba.empty() && bb.empty()) return 0.0;
  if (ba.empty() || bb.empty()) return std::numeric_limits<double>::infinity();
  std::vector<double> ds;
  for (int pass = 0; pass < 2; ++pass) {
    const auto& from = pass == 0 ? ba : bb;
    const auto& to = pass == 0 ? bb : ba;
    for (auto [y, x] : from) {
      double best = std::numeric_limits<double>::infinity();
      for (auto [v, u] : to) {
        best = std::min(best, std::hypot(double(y - v), double(x - u)));
      }
      ds.push_back(best);
    }
  }
  std::sort(ds.begin(), ds.end());
  const double rank = 0.95 * static_cast<double>(ds.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(rank);
  const std::size_t hi = std::min(lo + 1, ds.size() - 1);
  return ds[lo] + (rank - std::floor(rank)) * (ds[hi] - ds[lo]);
}

void criterion_metric_oracles() {
  Rng rng(0x6e6);
  bool ok = true;
  std::string detail;
  for (int trial = 0; trial < 200 && ok; ++trial) {
    const std::size_t h = 1 + rng.uniform_index(8);
    const std::size_t w = 1 + rng.uniform_index(8);
    Mask a = Mask::zeros(h, w), b = Mask::zeros(h, w);
    const double pa = rng.uniform(0.0, 0.8), pb = rng.uniform(0.0, 0.8);
    for (auto& v : a.data) v = rng.uniform() < pa ? 1 : 0;
    for (auto& v : b.data) v = rng.uniform() < pb ? 1 : 0;
    if (std::abs(dice(a, b) - dice_oracle(a, b)) > 1e-12) {
      ok = false;
      detail = "dice mismatch vs oracle";
    }
    const double got = hd95(a, b), want = hd95_oracle(a, b);
    const bool both_inf = std::isinf(got) && std::isinf(want);
    if (!both_inf && std::abs(got - want) > 1e-9) {
      ok = false;
      detail = "hd95 mismatch vs oracle";
    }
  }

  // gradient vs central finite differences
  double worst_rel = 0.0;
  for (std::uint64_t seed : {11ull, 12ull}) {
    Rng mrng(seed);
    ToyModel model = init_toy_model(mrng);
    DomainSpec spec;
    spec.domain_id = 0;
    spec.n_samples = 2;
    spec.image_size = 10;
    spec.seed = seed;
    auto samples = generate_domain(spec);
    Batch batch;
    std::vector<const Mask*> masks;
    for (auto& s : samples) {
      batch.push_back(s.image);
      masks.push_back(&s.mask);
    }
    FlatParams grad = model.params;
    loss_and_grad(model, batch, masks, grad);
    Rng pick(seed + 7);
    FlatParams scratch = model.params;
    for (int k = 0; k < 25; ++k) {
      const std::size_t i = pick.uniform_index(model.params.values.size());
      const double step = 1e-5;
      ToyModel plus = model, minus = model;
      plus.params.values[i] += step;
      minus.params.values[i] -= step;
      const double fd = (loss_and_grad(plus, batch, masks, scratch) -
                         loss_and_grad(minus, batch, masks, scratch)) /
                        (2 * step);
      const double denom =
          std::max({std::abs(fd), std::abs(grad.values[i]), 1e-6});
      worst_rel = std::max(worst_rel, std::abs(fd - grad.values[i]) / denom);
    }
  }
  if (worst_rel >= 1e-4) {
    ok = false;
    detail = "gradient check rel err " + std::to_string(worst_rel);
  }
  if (ok) {
    char buf[120];
    std::snprintf(buf, sizeof(buf),
                  "200 random masks exact; gradient rel err %.2e", worst_rel);
    detail = buf;
  }
  report(ok, false, "C6 metric-oracles", detail);
}

// ---- C7/C8: desk-scale ordering and ablations -------------------------

struct DeskScaleOutcome {
  // indexed [seed][fold]
  std::vector<std::vector<double>> tree_aw, tree_root, star, direct_aw;
};

double eval_dice(const FederationState& state, const ExperimentConfig& config,
                 const std::map<ClientId, std::vector<SegSample>>& data,
                 const std::vector<SegSample>& target,
                 SelectionStrategy strategy) {
  std::map<int, DomainDescriptor> sources;
  for (const auto& [c, samples] : data) {
    std::vector<Image> imgs;
    for (const auto& s : samples) imgs.push_back(s.image);
    sources.emplace(c, extract_descriptor(imgs, config.extractor));
  }
  std::vector<Image> timgs;
  for (const auto& s : target) timgs.push_back(s.image);
  InferenceConfig ic{config.extractor, config.depth_coeff, strategy};
  InferenceResult res = infer_target(state.tree, sources, timgs, ic);
  double d = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    auto pm = per_class_metrics(res.masks[i], target[i].mask);
    d += 0.5 * (pm[0].dice + pm[1].dice);
  }
  return d / static_cast<double>(target.size());
}

double pop_std(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

double mean_of(const std::vector<std::vector<double>>& grid) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& row : grid) {
    for (double v : row) {
      sum += v;
      ++n;
    }
  }
  return sum / static_cast<double>(n);
}

DeskScaleOutcome run_desk_scale() {
  DeskScaleOutcome out;
  for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull, 5ull}) {
    ExperimentConfig config = default_config();
    config.seed = seed;
    std::vector<double> tree_aw, tree_root, star, direct_aw;
    for (const DomainSpec& held : config.domains) {
      std::map<ClientId, std::vector<SegSample>> data;
      for (const DomainSpec& spec : config.domains) {
        if (spec.domain_id == held.domain_id) continue;
        DomainSpec stamped = spec;
        stamped.seed = spec.seed ^ mix_seed(config.seed);
        data.emplace(spec.domain_id, generate_domain(stamped));
      }
      DomainSpec stamped = held;
      stamped.seed = held.seed ^ mix_seed(config.seed);
      const auto target = generate_domain(stamped);

      FederationState tree_state = run_training(config, data);
      tree_aw.push_back(eval_dice(tree_state, config, data, target,
                                  SelectionStrategy::kAllWeighted));
      tree_root.push_back(eval_dice(tree_state, config, data, target,
                                    SelectionStrategy::kRootOnly));

      ExperimentConfig star_config = config;
      star_config.topology = Topology::kStar;
      star_config.fusion = FusionMode::kDirect;
      star_config.fedstyle = false;
      FederationState star_state = run_training(star_config, data);
      star.push_back(eval_dice(star_state, star_config, data, target,
                               SelectionStrategy::kRootOnly));

      ExperimentConfig direct_config = config;
      direct_config.fusion = FusionMode::kDirect;
      FederationState direct_state = run_training(direct_config, data);
      direct_aw.push_back(eval_dice(direct_state, direct_config, data, target,
                                    SelectionStrategy::kAllWeighted));
    }
    out.tree_aw.push_back(tree_aw);
    out.tree_root.push_back(tree_root);
    out.star.push_back(star);
    out.direct_aw.push_back(direct_aw);
  }
  return out;
}

void criterion_desk_scale(const DeskScaleOutcome& out, double dt) {
  const std::size_t n_seeds = out.tree_aw.size();
  const std::size_t n_folds = out.tree_aw[0].size();
  int fold_wins = 0;
  for (std::size_t f = 0; f < n_folds; ++f) {
    double tree = 0.0, star = 0.0;
    for (std::size_t s = 0; s < n_seeds; ++s) {
      tree += out.tree_aw[s][f];
      star += out.star[s][f];
    }
    if (tree >= star) ++fold_wins;
  }
  double tree_std = 0.0, star_std = 0.0;
  for (std::size_t s = 0; s < n_seeds; ++s) {
    tree_std += pop_std(out.tree_aw[s]);
    star_std += pop_std(out.star[s]);
  }
  tree_std /= static_cast<double>(n_seeds);
  star_std /= static_cast<double>(n_seeds);

  char buf[240];
  std::snprintf(buf, sizeof(buf),
                "tree mean %.4f vs star %.4f; fold wins %d/%zu (need >= 3); "
                "mean fold-STD %.4f vs %.4f; %.0fs (budget 600)",
                mean_of(out.tree_aw), mean_of(out.star), fold_wins, n_folds,
                tree_std, star_std, dt);
  report(fold_wins >= 3 && tree_std <= star_std && dt < 600.0, false,
         "C7 desk-scale-ordering", buf);
}

void criterion_ablations(const DeskScaleOutcome& out) {
  const std::size_t n_seeds = out.tree_aw.size();
  auto seed_mean = [](const std::vector<double>& row) {
    double m = 0.0;
    for (double v : row) m += v;
    return m / static_cast<double>(row.size());
  };
  std::string per_seed = "per-seed (all-weighted/root-only/progressive/direct):";
  double aw = 0.0, root = 0.0, prog = 0.0, direct = 0.0;
  for (std::size_t s = 0; s < n_seeds; ++s) {
    const double a = seed_mean(out.tree_aw[s]);
    const double r = seed_mean(out.tree_root[s]);
    const double d = seed_mean(out.direct_aw[s]);
    aw += a;
    root += r;
    prog += a;
    direct += d;
    char buf[96];
    std::snprintf(buf, sizeof(buf), " s%zu %.4f/%.4f/%.4f/%.4f",
                  s + 1, a, r, a, d);
    per_seed += buf;
  }
  aw /= n_seeds;
  root /= n_seeds;
  prog /= n_seeds;
  direct /= n_seeds;

  char buf[128];
  std::snprintf(buf, sizeof(buf),
                "all-weighted %.4f vs root-only %.4f; progressive %.4f vs "
                "direct %.4f. ",
                aw, root, prog, direct);
  report(aw >= root && prog >= direct, true, "C8 ablation-directions",
         buf + per_seed);
}

// ---- C9: end-to-end determinism ---------------------------------------

void criterion_determinism() {
  ExperimentConfig config = default_config();
  config.seed = 4242;
  config.rounds = 4;
  config.local_epochs = 2;
  for (auto& d : config.domains) {
    d.n_samples = 10;
    d.image_size = 16;
  }
  auto run_once = [&config]() {
    LooReport loo = leave_one_out(config);
    std::map<ClientId, std::vector<SegSample>> data;
    for (const DomainSpec& spec : config.domains) {
      DomainSpec stamped = spec;
      stamped.seed = spec.seed ^ mix_seed(config.seed);
      data.emplace(spec.domain_id, generate_domain(stamped));
    }
    FederationState state = run_training(config, data);
    return format_report(loo, config) + format_report_csv(loo) +
           dump_tree(state.tree);
  };
  const std::string a = run_once();
  const std::string b = run_once();
  report(a == b, false, "C9 determinism",
         a == b ? "two identical runs, byte-identical reports and tree dumps"
                : "runs diverged");
}

}  // namespace

int main() {
  criterion_fedavg();
  criterion_tree_invariants();
  criterion_fedstyle();
  criterion_fusion();
  criterion_chain_weights();
  criterion_metric_oracles();
  const auto t0 = std::chrono::steady_clock::now();
  DeskScaleOutcome desk = run_desk_scale();
  const double desk_dt = elapsed(t0);
  criterion_desk_scale(desk, desk_dt);
  criterion_ablations(desk);
  criterion_determinism();
  if (hard_failures) {
    std::printf("acceptance: %d hard criterion failure(s)\n", hard_failures);
    return 1;
  }
  std::printf("acceptance: all hard criteria passed\n");
  return 0;
}

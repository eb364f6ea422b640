#include "treefed/orchestrator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace treefed {

void ExperimentConfig::validate() const {
  if (domains.empty()) throw Error(ErrorCode::ConfigError, "no domains");
  if (rounds < 0) throw Error(ErrorCode::ConfigError, "rounds < 0");
  if (local_epochs < 1) throw Error(ErrorCode::ConfigError, "local_epochs < 1");
  if (schedule.height < 1) throw Error(ErrorCode::ConfigError, "height < 1");
  if (epsilon0 < 0.0 || epsilon0 > 1.0) {
    throw Error(ErrorCode::ConfigError, "epsilon0 outside [0, 1]");
  }
  if (omega <= 0.0 || omega >= 1.0) {
    throw Error(ErrorCode::ConfigError, "omega outside (0, 1)");
  }
  if (phi <= 0.0) throw Error(ErrorCode::ConfigError, "phi <= 0");
  if (mix_prob < 0.0 || mix_prob > 1.0) {
    throw Error(ErrorCode::ConfigError, "mix_prob outside [0, 1]");
  }
  for (const auto& d : domains) {
    if (d.gamma <= 0.0) throw Error(ErrorCode::ConfigError, "gamma <= 0");
    if (d.noise_std < 0.0) throw Error(ErrorCode::ConfigError, "noise_std < 0");
  }
}

ExperimentConfig default_config() {
  ExperimentConfig config;
  config.domains = {
      {0, 0.25, 0.70, 0.90, 0.03, 0.10, 40, 32, 0},
      {1, 0.20, 0.75, 0.95, 0.03, 0.15, 40, 32, 0},
      {2, -0.05, 1.10, 1.60, 0.04, 0.50, 40, 32, 0},
      {3, 0.00, 1.05, 1.50, 0.04, 0.45, 40, 32, 0},
  };
  return config;
}

namespace {

std::uint64_t fnv64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<SegSample> domain_data(const DomainSpec& spec,
                                   std::uint64_t run_seed) {
  DomainSpec stamped = spec;
  stamped.seed = spec.seed ^ mix_seed(run_seed);
  return generate_domain(stamped);
}

StyleBuffer make_style_buffer(const std::vector<SegSample>& data,
                              std::size_t batch_size) {
  if (batch_size == 0) batch_size = data.size();
  StyleBuffer buffer;
  for (std::size_t start = 0; start < data.size(); start += batch_size) {
    Batch batch;
    for (std::size_t i = start; i < std::min(start + batch_size, data.size());
         ++i) {
      batch.push_back(data[i].image);
    }
    buffer.push_back(extract_stats(batch));
  }
  return buffer;
}

}  // namespace

FederationState init_state(const ExperimentConfig& config,
                           const std::vector<ClientId>& clients) {
  FederationState state;
  Rng init_rng(derive_seed(config.seed, 0x1717));
  ToyModel shared = init_toy_model(init_rng);
  for (ClientId c : clients) {
    state.models.emplace(c, shared.params);
  }
  return state;
}

void run_round(FederationState& state,
               const std::map<ClientId, std::vector<SegSample>>& data,
               const ExperimentConfig& config) {
  const auto t0 = std::chrono::steady_clock::now();
  RoundLog log;
  log.round = state.round;

  // Style statistics are published once per client; raw inputs do not
  // change between rounds.
  if (config.fedstyle && state.style_buffers.empty()) {
    for (const auto& [client, samples] : data) {
      state.style_buffers.emplace(client,
                                  make_style_buffer(samples, config.batch_size));
    }
  }

  // (1) pairings from current leaf parameters
  std::map<ClientId, ClientId> partner;
  if (config.fedstyle && state.models.size() >= 2) {
    for (const auto& [client, params] : state.models) {
      partner[client] = select_partner(client, state.models);
    }
    log.style_partner = partner;
  }

  // (2) local training
  MixConfig mix_config{config.phi, config.mix_prob, 1e-6};
  for (auto& [client, params] : state.models) {
    auto it = data.find(client);
    if (it == data.end()) {
      throw Error(ErrorCode::UnknownClient, "no data for client");
    }
    Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(client) + 101,
                        static_cast<std::uint64_t>(state.round) + 1));
    ToyModel model{params};
    MixerHook mixer;
    const MixerHook* hook = nullptr;
    if (config.fedstyle && partner.count(client) != 0) {
      const StyleBuffer& buffer = state.style_buffers.at(partner.at(client));
      mixer = [&buffer, &mix_config, &rng](const Batch& batch) {
        return maybe_mix(batch, buffer, mix_config, rng).batch;
      };
      hook = &mixer;
    }
    model = train_local(std::move(model), it->second, config.local_epochs,
                        config.lr, config.batch_size, hook, rng);
    log.client_loss[client] = cross_entropy(model, it->second);
    params = std::move(model.params);
  }

  // pairwise leaf similarity, client id order
  {
    std::vector<const FlatParams*> leaves;
    for (const auto& [client, params] : state.models) leaves.push_back(&params);
    const std::size_t n = leaves.size();
    log.similarity.assign(n, std::vector<double>(n, 1.0));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const double s = cosine_similarity(*leaves[i], *leaves[j]);
        log.similarity[i][j] = s;
        log.similarity[j][i] = s;
      }
    }
  }

  // (3) aggregation
  std::vector<std::pair<ClientId, FlatParams>> leaves;
  for (const auto& [client, params] : state.models) {
    leaves.emplace_back(client, params);
  }
  state.tree = config.topology == Topology::kStar
                   ? build_star(leaves)
                   : build_tree(leaves, config.schedule);

  for (int level = 1; level <= state.tree.height; ++level) {
    std::vector<std::vector<NodeId>> level_clusters;
    for (const auto& [id, node] : state.tree.nodes) {
      if (!node.is_leaf() && node.level == level && !node.children.empty()) {
        level_clusters.push_back(node.children);
      }
    }
    log.clusters_per_level.push_back(std::move(level_clusters));
  }

  // (4) top-down dissemination
  FusionConfig fusion_config{config.epsilon0, config.omega, config.partition};
  state.models = disseminate(state.tree, fusion_config, config.fusion);

  log.tree_checksum = fnv64(dump_tree(state.tree));
  log.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  state.logs.push_back(std::move(log));
  ++state.round;
}

FederationState run_training(
    const ExperimentConfig& config,
    const std::map<ClientId, std::vector<SegSample>>& data) {
  config.validate();
  std::vector<ClientId> clients;
  for (const auto& [client, samples] : data) clients.push_back(client);
  FederationState state = init_state(config, clients);
  for (int r = 0; r < config.rounds; ++r) {
    run_round(state, data, config);
  }
  if (config.rounds == 0) {
    // still need a tree for inference on the shared init
    std::vector<std::pair<ClientId, FlatParams>> leaves;
    for (auto& [client, params] : state.models) {
      params.sample_count = data.at(client).size();
      leaves.emplace_back(client, params);
    }
    state.tree = config.topology == Topology::kStar
                     ? build_star(leaves)
                     : build_tree(leaves, config.schedule);
  }
  return state;
}

LooReport leave_one_out(const ExperimentConfig& config) {
  config.validate();
  if (config.domains.size() < 3) {
    throw Error(ErrorCode::TooFewDomains, "leave_one_out: need >= 3 domains");
  }
  LooReport report;
  for (const DomainSpec& held_out : config.domains) {
    std::map<ClientId, std::vector<SegSample>> data;
    for (const DomainSpec& spec : config.domains) {
      if (spec.domain_id == held_out.domain_id) continue;
      data.emplace(spec.domain_id, domain_data(spec, config.seed));
    }
    FederationState state = run_training(config, data);

    std::map<int, DomainDescriptor> sources;
    for (const auto& [client, samples] : data) {
      std::vector<Image> images;
      for (const auto& s : samples) images.push_back(s.image);
      sources.emplace(client, extract_descriptor(images, config.extractor));
    }

    std::vector<SegSample> target = domain_data(held_out, config.seed);
    std::vector<Image> target_images;
    for (const auto& s : target) target_images.push_back(s.image);

    InferenceConfig infer_config{config.extractor, config.depth_coeff,
                                 config.selection};
    InferenceResult result =
        infer_target(state.tree, sources, target_images, infer_config);

    FoldResult fold;
    fold.held_out = held_out.domain_id;
    fold.matched_domain = result.matched_domain;
    fold.tree_checksum = state.logs.empty() ? 0 : state.logs.back().tree_checksum;
    fold.class_dice.assign(2, 0.0);
    fold.class_hd95.assign(2, 0.0);
    const double diag = std::hypot(static_cast<double>(held_out.image_size - 1),
                                   static_cast<double>(held_out.image_size - 1));
    for (std::size_t i = 0; i < target.size(); ++i) {
      const auto metrics = per_class_metrics(result.masks[i], target[i].mask);
      for (std::size_t c = 0; c < 2; ++c) {
        fold.class_dice[c] += metrics[c].dice;
        fold.class_hd95[c] += std::min(metrics[c].hd95, diag);
      }
    }
    for (std::size_t c = 0; c < 2; ++c) {
      fold.class_dice[c] /= static_cast<double>(target.size());
      fold.class_hd95[c] /= static_cast<double>(target.size());
    }
    fold.mean_dice = 0.5 * (fold.class_dice[0] + fold.class_dice[1]);
    fold.mean_hd95 = 0.5 * (fold.class_hd95[0] + fold.class_hd95[1]);
    report.folds.push_back(std::move(fold));
  }

  std::vector<double> fold_dices;
  for (const auto& fold : report.folds) fold_dices.push_back(fold.mean_dice);
  report.mean_dice = 0.0;
  for (double d : fold_dices) report.mean_dice += d;
  report.mean_dice /= static_cast<double>(fold_dices.size());
  report.dice_std = site_std(fold_dices);
  return report;
}

namespace {

const char* topology_name(Topology t) {
  return t == Topology::kStar ? "star" : "tree";
}

const char* fusion_name(FusionMode m) {
  switch (m) {
    case FusionMode::kDirect: return "direct";
    case FusionMode::kFull: return "full";
    default: return "progressive";
  }
}

const char* strategy_name(SelectionStrategy s) {
  switch (s) {
    case SelectionStrategy::kRootOnly: return "root";
    case SelectionStrategy::kRootMid: return "root-mid";
    case SelectionStrategy::kAllEqual: return "all-equal";
    case SelectionStrategy::kBestLeaf: return "best-leaf";
    default: return "all-weighted";
  }
}

std::string join_names(const std::set<std::string>& names) {
  std::string out;
  for (const auto& n : names) {
    if (!out.empty()) out += ",";
    out += n;
  }
  return out;
}

}  // namespace

std::string format_config(const ExperimentConfig& config) {
  std::ostringstream out;
  out << "seed = " << config.seed << "\n";
  out << "rounds = " << config.rounds << "\n";
  out << "local_epochs = " << config.local_epochs << "\n";
  out << "lr = " << config.lr << "\n";
  out << "batch_size = " << config.batch_size << "\n";
  out << "topology = " << topology_name(config.topology) << "\n";
  out << "tree.tau0 = " << config.schedule.tau0 << "\n";
  out << "tree.beta = " << config.schedule.beta << "\n";
  out << "tree.height = " << config.schedule.height << "\n";
  out << "fusion.mode = " << fusion_name(config.fusion) << "\n";
  out << "fusion.epsilon0 = " << config.epsilon0 << "\n";
  out << "fusion.omega = " << config.omega << "\n";
  out << "style.enabled = " << (config.fedstyle ? "true" : "false") << "\n";
  out << "style.phi = " << config.phi << "\n";
  out << "style.mix_prob = " << config.mix_prob << "\n";
  out << "infer.depth_coeff = " << config.depth_coeff << "\n";
  out << "infer.strategy = " << strategy_name(config.selection) << "\n";
  out << "infer.extractor_seed = " << config.extractor.seed << "\n";
  out << "infer.projections = " << config.extractor.n_projections << "\n";
  out << "infer.hist_bins = " << config.extractor.hist_bins << "\n";
  out << "partition.fixed = " << join_names(config.partition.fixed_layers)
      << "\n";
  out << "partition.variable = "
      << join_names(config.partition.variable_layers) << "\n";
  out << "domain.count = " << config.domains.size() << "\n";
  for (std::size_t i = 0; i < config.domains.size(); ++i) {
    const DomainSpec& d = config.domains[i];
    out << "domain." << i << ".id = " << d.domain_id << "\n";
    out << "domain." << i << ".brightness_shift = " << d.brightness_shift << "\n";
    out << "domain." << i << ".contrast_gain = " << d.contrast_gain << "\n";
    out << "domain." << i << ".gamma = " << d.gamma << "\n";
    out << "domain." << i << ".noise_std = " << d.noise_std << "\n";
    out << "domain." << i << ".shape_eccentricity = " << d.shape_eccentricity
        << "\n";
    out << "domain." << i << ".n_samples = " << d.n_samples << "\n";
    out << "domain." << i << ".image_size = " << d.image_size << "\n";
    out << "domain." << i << ".seed = " << d.seed << "\n";
  }
  return out.str();
}

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig config = default_config();
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const char* ws = " \t\r\n";
      s.erase(0, s.find_first_not_of(ws));
      auto last = s.find_last_not_of(ws);
      s.erase(last == std::string::npos ? 0 : last + 1);
      return s;
    };
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (!key.empty()) kv[key] = value;
  }

  auto get = [&kv](const std::string& key) -> const std::string* {
    auto it = kv.find(key);
    return it == kv.end() ? nullptr : &it->second;
  };
  auto get_double = [&](const std::string& key, double& out) {
    if (const std::string* v = get(key)) {
      try {
        out = std::stod(*v);
      } catch (const std::exception&) {
        throw Error(ErrorCode::ConfigError, "bad number for " + key);
      }
    }
  };
  auto get_int = [&](const std::string& key, auto& out) {
    if (const std::string* v = get(key)) {
      try {
        out = static_cast<std::remove_reference_t<decltype(out)>>(std::stoll(*v));
      } catch (const std::exception&) {
        throw Error(ErrorCode::ConfigError, "bad integer for " + key);
      }
    }
  };
  auto get_bool = [&](const std::string& key, bool& out) {
    if (const std::string* v = get(key)) {
      if (*v == "true" || *v == "1") out = true;
      else if (*v == "false" || *v == "0") out = false;
      else throw Error(ErrorCode::ConfigError, "bad bool for " + key);
    }
  };

  std::size_t n_domains = config.domains.size();
  get_int("domain.count", n_domains);
  if (n_domains == 0) throw Error(ErrorCode::ConfigError, "domain.count = 0");
  // extend defaults cyclically when more domains are requested
  while (config.domains.size() < n_domains) {
    DomainSpec d = config.domains[config.domains.size() % 4];
    d.domain_id = static_cast<int>(config.domains.size());
    d.seed = config.domains.size();
    config.domains.push_back(d);
  }
  config.domains.resize(n_domains);

  get_int("seed", config.seed);
  get_int("rounds", config.rounds);
  get_int("local_epochs", config.local_epochs);
  get_double("lr", config.lr);
  get_int("batch_size", config.batch_size);
  get_double("tree.tau0", config.schedule.tau0);
  get_double("tree.beta", config.schedule.beta);
  get_int("tree.height", config.schedule.height);
  get_double("fusion.epsilon0", config.epsilon0);
  get_double("fusion.omega", config.omega);
  get_bool("style.enabled", config.fedstyle);
  get_double("style.phi", config.phi);
  get_double("style.mix_prob", config.mix_prob);
  get_double("infer.depth_coeff", config.depth_coeff);
  get_int("infer.extractor_seed", config.extractor.seed);
  get_int("infer.projections", config.extractor.n_projections);
  get_int("infer.hist_bins", config.extractor.hist_bins);

  if (const std::string* v = get("topology")) {
    if (*v == "tree") config.topology = Topology::kTree;
    else if (*v == "star") config.topology = Topology::kStar;
    else throw Error(ErrorCode::ConfigError, "unknown topology " + *v);
  }
  if (const std::string* v = get("fusion.mode")) {
    if (*v == "direct") config.fusion = FusionMode::kDirect;
    else if (*v == "full") config.fusion = FusionMode::kFull;
    else if (*v == "progressive") config.fusion = FusionMode::kProgressive;
    else throw Error(ErrorCode::ConfigError, "unknown fusion.mode " + *v);
  }
  if (const std::string* v = get("infer.strategy")) {
    if (*v == "root") config.selection = SelectionStrategy::kRootOnly;
    else if (*v == "root-mid") config.selection = SelectionStrategy::kRootMid;
    else if (*v == "all-equal") config.selection = SelectionStrategy::kAllEqual;
    else if (*v == "all-weighted") config.selection = SelectionStrategy::kAllWeighted;
    else if (*v == "best-leaf") config.selection = SelectionStrategy::kBestLeaf;
    else throw Error(ErrorCode::ConfigError, "unknown infer.strategy " + *v);
  }
  auto parse_names = [](const std::string& s) {
    std::set<std::string> names;
    std::istringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (!item.empty()) names.insert(item);
    }
    return names;
  };
  if (const std::string* v = get("partition.fixed")) {
    config.partition.fixed_layers = parse_names(*v);
  }
  if (const std::string* v = get("partition.variable")) {
    config.partition.variable_layers = parse_names(*v);
  }

  for (std::size_t i = 0; i < config.domains.size(); ++i) {
    const std::string prefix = "domain." + std::to_string(i) + ".";
    DomainSpec& d = config.domains[i];
    get_int(prefix + "id", d.domain_id);
    get_double(prefix + "brightness_shift", d.brightness_shift);
    get_double(prefix + "contrast_gain", d.contrast_gain);
    get_double(prefix + "gamma", d.gamma);
    get_double(prefix + "noise_std", d.noise_std);
    get_double(prefix + "shape_eccentricity", d.shape_eccentricity);
    get_int(prefix + "n_samples", d.n_samples);
    get_int(prefix + "image_size", d.image_size);
    get_int(prefix + "seed", d.seed);
  }

  config.validate();
  return config;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open config " + path);
  return parse_config(in);
}

std::string format_report(const LooReport& report,
                          const ExperimentConfig& config) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(6);
  out << "protocol leave-one-domain-out topology="
      << topology_name(config.topology)
      << " fusion=" << fusion_name(config.fusion)
      << " fedstyle=" << (config.fedstyle ? "on" : "off")
      << " selection=" << strategy_name(config.selection)
      << " seed=" << config.seed << "\n";
  for (const auto& fold : report.folds) {
    out << "fold held_out=" << fold.held_out
        << " matched=" << fold.matched_domain
        << " dice=" << fold.mean_dice << " hd95=" << fold.mean_hd95
        << " disc_dice=" << fold.class_dice[0]
        << " cup_dice=" << fold.class_dice[1]
        << " disc_hd95=" << fold.class_hd95[0]
        << " cup_hd95=" << fold.class_hd95[1] << " tree=" << std::hex
        << fold.tree_checksum << std::dec << "\n";
  }
  out << "aggregate mean_dice=" << report.mean_dice
      << " dice_std=" << report.dice_std << "\n";
  return out.str();
}

std::string format_report_csv(const LooReport& report) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(6);
  out << "metric";
  for (const auto& fold : report.folds) out << ",site_" << fold.held_out;
  out << ",avg\n";
  out << "dice";
  for (const auto& fold : report.folds) out << "," << fold.mean_dice;
  out << "," << report.mean_dice << "\n";
  out << "hd95";
  double hd_sum = 0.0;
  for (const auto& fold : report.folds) {
    out << "," << fold.mean_hd95;
    hd_sum += fold.mean_hd95;
  }
  out << "," << hd_sum / static_cast<double>(report.folds.size()) << "\n";
  return out.str();
}

}  // namespace treefed

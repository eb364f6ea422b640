#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "treefed/orchestrator.hpp"

namespace fs = std::filesystem;
using namespace treefed;

namespace {

int log_level() {
  const char* env = std::getenv("TREEFED_LOG");
  return env != nullptr ? std::atoi(env) : 1;
}

ExperimentConfig resolve_config(const std::string& config_path,
                                std::optional<std::uint64_t> seed) {
  ExperimentConfig config =
      config_path.empty() ? default_config() : load_config(config_path);
  if (seed.has_value()) config.seed = *seed;
  return config;
}

std::map<ClientId, std::vector<SegSample>> all_domain_data(
    const ExperimentConfig& config, const std::string& data_dir) {
  std::map<ClientId, std::vector<SegSample>> data;
  if (!data_dir.empty()) {
    auto [specs, domains] = import_dataset(data_dir);
    for (std::size_t i = 0; i < specs.size(); ++i) {
      data.emplace(specs[i].domain_id, std::move(domains[i]));
    }
    return data;
  }
  for (const DomainSpec& spec : config.domains) {
    DomainSpec stamped = spec;
    stamped.seed = spec.seed ^ mix_seed(config.seed);
    data.emplace(spec.domain_id, generate_domain(stamped));
  }
  return data;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out << content;
}

int cmd_run(const ExperimentConfig& config, const std::string& out_dir,
            const std::string& data_dir, bool dump_tree_flag,
            const std::string& checkpoint_dir, bool log_style) {
  auto data = all_domain_data(config, data_dir);
  std::vector<ClientId> clients;
  for (const auto& [c, unused] : data) clients.push_back(c);
  FederationState state = init_state(config, clients);
  for (int r = 0; r < config.rounds; ++r) {
    run_round(state, data, config);
    const RoundLog& log = state.logs.back();
    if (log_level() >= 1) {
      std::cout << "round " << log.round << " tree=" << std::hex
                << log.tree_checksum << std::dec << " wall=" << log.wall_seconds
                << "s\n";
    }
    if (log_level() >= 2) {
      for (const auto& [client, loss] : log.client_loss) {
        std::cout << "  client " << client << " loss=" << loss;
        auto it = log.style_partner.find(client);
        if (it != log.style_partner.end()) {
          std::cout << " partner=" << it->second;
        }
        std::cout << "\n";
      }
    }
    if (log_style && config.fedstyle) {
      for (const auto& [client, buffer] : state.style_buffers) {
        std::cout << "style client " << client << " batches=" << buffer.size();
        if (!buffer.empty()) {
          std::cout << " mean0=" << buffer.front().mean[0]
                    << " std0=" << buffer.front().std[0];
        }
        std::cout << "\n";
      }
    }
    if (!checkpoint_dir.empty()) {
      fs::create_directories(checkpoint_dir);
      save_params((fs::path(checkpoint_dir) /
                   ("round_" + std::to_string(log.round) + "_root.bin"))
                      .string(),
                  state.tree.node(state.tree.root).params);
    }
  }
  if (dump_tree_flag) {
    std::string text = dump_tree(state.tree);
    if (out_dir.empty()) {
      std::cout << text;
    } else {
      fs::create_directories(out_dir);
      write_file((fs::path(out_dir) / "tree.txt").string(), text);
    }
  }
  return 0;
}

int cmd_loo(const ExperimentConfig& config, const std::string& out_dir,
            bool explain) {
  LooReport report = leave_one_out(config);
  std::string text = format_report(report, config);
  if (explain) {
    // fold lines already carry the matched domain; echo them to the console
    std::cout << text;
  }
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_file((fs::path(out_dir) / "report.txt").string(), text);
    write_file((fs::path(out_dir) / "report.csv").string(),
               format_report_csv(report));
  } else if (!explain) {
    std::cout << text;
  }
  return 0;
}

int cmd_ablate(const ExperimentConfig& base, const std::string& axis,
               const std::string& out_dir) {
  struct Variant {
    std::string name;
    ExperimentConfig config;
  };
  std::vector<Variant> variants;
  if (axis == "topology") {
    for (Topology t : {Topology::kTree, Topology::kStar}) {
      ExperimentConfig c = base;
      c.topology = t;
      variants.push_back({t == Topology::kTree ? "tree" : "star", c});
    }
  } else if (axis == "fedstyle") {
    for (bool on : {true, false}) {
      ExperimentConfig c = base;
      c.fedstyle = on;
      variants.push_back({on ? "fedstyle-on" : "fedstyle-off", c});
    }
  } else if (axis == "fusion") {
    for (FusionMode m :
         {FusionMode::kDirect, FusionMode::kFull, FusionMode::kProgressive}) {
      ExperimentConfig c = base;
      c.fusion = m;
      const char* name = m == FusionMode::kDirect   ? "direct"
                         : m == FusionMode::kFull   ? "full"
                                                    : "progressive";
      variants.push_back({name, c});
    }
  } else if (axis == "selection") {
    const std::pair<SelectionStrategy, const char*> all[] = {
        {SelectionStrategy::kRootOnly, "root"},
        {SelectionStrategy::kRootMid, "root-mid"},
        {SelectionStrategy::kAllEqual, "all-equal"},
        {SelectionStrategy::kAllWeighted, "all-weighted"},
        {SelectionStrategy::kBestLeaf, "best-leaf"},
    };
    for (const auto& [s, name] : all) {
      ExperimentConfig c = base;
      c.selection = s;
      variants.push_back({name, c});
    }
  } else {
    std::cerr << "unknown ablation axis: " << axis << "\n";
    return 2;
  }

  for (const Variant& variant : variants) {
    LooReport report = leave_one_out(variant.config);
    std::string text = format_report(report, variant.config);
    std::cout << "== " << variant.name << " ==\n" << text;
    if (!out_dir.empty()) {
      fs::create_directories(out_dir);
      write_file((fs::path(out_dir) / (variant.name + ".txt")).string(), text);
    }
  }
  return 0;
}

int cmd_export(const ExperimentConfig& config, const std::string& dir) {
  std::vector<std::vector<SegSample>> domains;
  std::vector<DomainSpec> specs;
  for (const DomainSpec& spec : config.domains) {
    DomainSpec stamped = spec;
    stamped.seed = spec.seed ^ mix_seed(config.seed);
    specs.push_back(stamped);
    domains.push_back(generate_domain(stamped));
  }
  export_dataset(dir, specs, domains);
  std::cout << "exported " << specs.size() << " domains to " << dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"TreeFedDG simulator: tree-structured federated domain "
               "generalization on synthetic segmentation tasks"};
  app.require_subcommand(1);

  std::string config_path, out_dir, data_dir, checkpoint_dir, ablate_axis;
  std::optional<std::uint64_t> seed;
  bool dump_tree_flag = false, explain = false, log_style = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "config file (dotted key = value)")
        ->check(CLI::ExistingFile);
    cmd->add_option("--seed", seed, "override the config seed");
    cmd->add_option("--out", out_dir, "output directory");
  };

  CLI::App* run = app.add_subcommand("run", "train one federation");
  add_common(run);
  run->add_option("--data-dir", data_dir, "load dataset from PGM directory");
  run->add_flag("--dump-tree", dump_tree_flag, "dump the final tree");
  run->add_option("--checkpoint-dir", checkpoint_dir,
                  "write per-round root parameter dumps");
  run->add_flag("--log-style", log_style, "log style buffers per round");

  CLI::App* loo = app.add_subcommand("loo", "leave-one-domain-out evaluation");
  add_common(loo);
  loo->add_flag("--explain", explain,
                "print per-fold matched domain and chain info");

  CLI::App* ablate = app.add_subcommand("ablate", "sweep one ablation axis");
  add_common(ablate);
  ablate->add_option("--axis", ablate_axis,
                     "topology | fedstyle | fusion | selection")
      ->required();

  CLI::App* export_cmd = app.add_subcommand("export-data",
                                            "write the synthetic dataset as PGM");
  add_common(export_cmd);

  CLI::App* dump = app.add_subcommand("dump-tree",
                                      "train and print the final tree");
  add_common(dump);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) != 0 ? 2 : 0;
  }

  try {
    ExperimentConfig config = resolve_config(config_path, seed);
    if (run->parsed()) {
      return cmd_run(config, out_dir, data_dir, dump_tree_flag, checkpoint_dir,
                     log_style);
    }
    if (loo->parsed()) return cmd_loo(config, out_dir, explain);
    if (ablate->parsed()) return cmd_ablate(config, ablate_axis, out_dir);
    if (export_cmd->parsed()) {
      return cmd_export(config, out_dir.empty() ? "dataset" : out_dir);
    }
    if (dump->parsed()) {
      return cmd_run(config, out_dir, "", /*dump_tree_flag=*/true, "", false);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::ConfigError ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

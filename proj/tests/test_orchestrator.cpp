#include <doctest.h>

#include <cmath>
#include <sstream>

#include "treefed/orchestrator.hpp"

using namespace treefed;

namespace {

ExperimentConfig small_config(std::uint64_t seed) {
  ExperimentConfig config = default_config();
  config.seed = seed;
  config.rounds = 3;
  config.local_epochs = 1;
  config.lr = 0.05;
  config.batch_size = 4;
  for (auto& d : config.domains) {
    d.n_samples = 8;
    d.image_size = 12;
  }
  return config;
}

std::map<ClientId, std::vector<SegSample>> make_data(
    const ExperimentConfig& config) {
  std::map<ClientId, std::vector<SegSample>> data;
  for (const DomainSpec& spec : config.domains) {
    DomainSpec stamped = spec;
    stamped.seed = spec.seed ^ mix_seed(config.seed);
    data.emplace(spec.domain_id, generate_domain(stamped));
  }
  return data;
}

// Self-contained textbook FedAvg: broadcast, train, sample-weighted
// average. Written against the math, not against run_round.
std::map<int, FlatParams> reference_fedavg(
    const ExperimentConfig& config,
    const std::map<ClientId, std::vector<SegSample>>& data, int rounds,
    std::vector<FlatParams>* per_round_global) {
  Rng init_rng(derive_seed(config.seed, 0x1717));
  ToyModel shared = init_toy_model(init_rng);
  FlatParams global = shared.params;
  for (int r = 0; r < rounds; ++r) {
    double total = 0.0;
    std::vector<double> acc(global.values.size(), 0.0);
    for (const auto& [client, samples] : data) {
      Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(client) + 101,
                          static_cast<std::uint64_t>(r) + 1));
      ToyModel local{global};
      local = train_local(std::move(local), samples, config.local_epochs,
                          config.lr, config.batch_size, nullptr, rng);
      const double n = static_cast<double>(samples.size());
      for (std::size_t i = 0; i < acc.size(); ++i) {
        acc[i] += n * local.params.values[i];
      }
      total += n;
    }
    for (std::size_t i = 0; i < acc.size(); ++i) {
      global.values[i] = acc[i] / total;
    }
    if (per_round_global != nullptr) per_round_global->push_back(global);
  }
  std::map<int, FlatParams> out;
  for (const auto& [client, samples] : data) out.emplace(client, global);
  return out;
}

}  // namespace

TEST_CASE("star + direct + no fedstyle degenerates to textbook FedAvg") {
  ExperimentConfig config = small_config(11);
  config.topology = Topology::kStar;
  config.fusion = FusionMode::kDirect;
  config.fedstyle = false;
  auto data = make_data(config);

  std::vector<FlatParams> reference_rounds;
  reference_fedavg(config, data, config.rounds, &reference_rounds);

  std::vector<ClientId> clients;
  for (const auto& [c, unused] : data) clients.push_back(c);
  FederationState state = init_state(config, clients);
  for (int r = 0; r < config.rounds; ++r) {
    run_round(state, data, config);
    const FlatParams& root = state.tree.node(state.tree.root).params;
    const FlatParams& want = reference_rounds[static_cast<std::size_t>(r)];
    double max_abs = 0.0;
    for (std::size_t i = 0; i < root.values.size(); ++i) {
      max_abs = std::max(max_abs, std::abs(root.values[i] - want.values[i]));
    }
    CHECK(max_abs < 1e-9);
    // direct distribution: every leaf equals the root
    for (const auto& [client, params] : state.models) {
      CHECK(params.values == root.values);
    }
  }
}

TEST_CASE("round log bookkeeping") {
  ExperimentConfig config = small_config(3);
  auto data = make_data(config);
  std::vector<ClientId> clients;
  for (const auto& [c, unused] : data) clients.push_back(c);
  FederationState state = init_state(config, clients);
  run_round(state, data, config);
  run_round(state, data, config);
  REQUIRE(state.logs.size() == 2);
  for (const RoundLog& log : state.logs) {
    const auto& sim = log.similarity;
    REQUIRE(sim.size() == clients.size());
    for (std::size_t i = 0; i < sim.size(); ++i) {
      CHECK(sim[i][i] == doctest::Approx(1.0).epsilon(1e-12));
      for (std::size_t j = 0; j < sim.size(); ++j) {
        CHECK(sim[i][j] == doctest::Approx(sim[j][i]).epsilon(1e-12));
      }
    }
    CHECK(log.client_loss.size() == clients.size());
    CHECK(log.tree_checksum != 0);
    if (config.fedstyle) CHECK(log.style_partner.size() == clients.size());
  }
  CHECK(state.logs[0].round == 0);
  CHECK(state.logs[1].round == 1);
}

TEST_CASE("fixed-layer conservation through a progressive round") {
  ExperimentConfig config = small_config(5);
  config.fusion = FusionMode::kProgressive;
  config.fedstyle = false;
  auto data = make_data(config);
  std::vector<ClientId> clients;
  for (const auto& [c, unused] : data) clients.push_back(c);
  FederationState state = init_state(config, clients);
  run_round(state, data, config);
  std::map<ClientId, FlatParams> before = state.models;
  run_round(state, data, config);

  // replay local training independently: the post-round head must equal
  // each client's own trained head, untouched by dissemination
  for (const auto& [client, params] : state.models) {
    Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(client) + 101,
                        2));  // round index 1
    ToyModel replay{before.at(client)};
    replay = train_local(std::move(replay), data.at(client),
                         config.local_epochs, config.lr, config.batch_size,
                         nullptr, rng);
    auto got = params.layer("head");
    auto want = replay.params.layer("head");
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == want[i]);
  }
}

TEST_CASE("end-to-end determinism of run and reports") {
  ExperimentConfig config = small_config(21);
  config.rounds = 2;
  auto data = make_data(config);
  auto run_once = [&]() {
    FederationState state = run_training(config, data);
    return dump_tree(state.tree);
  };
  CHECK(run_once() == run_once());
}

TEST_CASE("leave_one_out shape and determinism") {
  ExperimentConfig config = small_config(8);
  config.rounds = 2;
  LooReport a = leave_one_out(config);
  REQUIRE(a.folds.size() == 4);  // 4 domains -> 4 folds, 3 training each
  double mean = 0.0;
  for (const auto& fold : a.folds) {
    CHECK(fold.held_out >= 0);
    CHECK(fold.mean_dice >= 0.0);
    CHECK(fold.mean_dice <= 1.0);
    mean += fold.mean_dice;
  }
  CHECK(a.mean_dice == doctest::Approx(mean / 4.0).epsilon(1e-12));

  LooReport b = leave_one_out(config);
  CHECK(format_report(a, config) == format_report(b, config));
  CHECK(format_report_csv(a) == format_report_csv(b));

  ExperimentConfig tiny = config;
  tiny.domains.resize(2);
  CHECK_THROWS_AS(leave_one_out(tiny), Error);
}

TEST_CASE("rounds = 0 returns the shared initial state") {
  ExperimentConfig config = small_config(2);
  config.rounds = 0;
  auto data = make_data(config);
  FederationState state = run_training(config, data);
  Rng init_rng(derive_seed(config.seed, 0x1717));
  ToyModel shared = init_toy_model(init_rng);
  for (const auto& [client, params] : state.models) {
    CHECK(params.values == shared.params.values);
  }
  CHECK(state.logs.empty());
  CHECK(state.tree.root >= 0);  // tree still available for inference
}

TEST_CASE("config file round trip and errors") {
  ExperimentConfig config = default_config();
  config.seed = 99;
  config.topology = Topology::kStar;
  config.fusion = FusionMode::kFull;
  config.selection = SelectionStrategy::kBestLeaf;
  config.schedule.tau0 = 0.7;
  config.epsilon0 = 0.25;
  config.domains[2].gamma = 2.5;

  std::stringstream text(format_config(config));
  ExperimentConfig parsed = parse_config(text);
  CHECK(parsed.seed == 99);
  CHECK(parsed.topology == Topology::kStar);
  CHECK(parsed.fusion == FusionMode::kFull);
  CHECK(parsed.selection == SelectionStrategy::kBestLeaf);
  CHECK(parsed.schedule.tau0 == doctest::Approx(0.7));
  CHECK(parsed.epsilon0 == doctest::Approx(0.25));
  CHECK(parsed.domains[2].gamma == doctest::Approx(2.5));
  CHECK(format_config(parsed) == format_config(config));

  SUBCASE("comments and whitespace") {
    std::stringstream in("# comment\n  rounds = 7  # trailing\n\nlr=0.125\n");
    ExperimentConfig c = parse_config(in);
    CHECK(c.rounds == 7);
    CHECK(c.lr == doctest::Approx(0.125));
  }
  SUBCASE("bad values rejected with ConfigError") {
    auto expect_config_error = [](const std::string& body) {
      std::stringstream in(body);
      try {
        parse_config(in);
        FAIL_CHECK("expected ConfigError for: " << body);
      } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ConfigError);
      }
    };
    expect_config_error("rounds = banana\n");
    expect_config_error("topology = ring\n");
    expect_config_error("fusion.omega = 1.5\n");
    expect_config_error("style.mix_prob = 2\n");
    expect_config_error("domain.count = 0\n");
  }
}

TEST_CASE("fedstyle pairing is recomputed each round from leaf params") {
  ExperimentConfig config = small_config(13);
  config.fedstyle = true;
  config.rounds = 2;
  auto data = make_data(config);
  FederationState state = run_training(config, data);
  for (const RoundLog& log : state.logs) {
    REQUIRE(log.style_partner.size() == 4);
    for (const auto& [client, partner] : log.style_partner) {
      CHECK(partner != client);
    }
  }
}

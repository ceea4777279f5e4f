#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>

#include "nco/checkpoint.hpp"
#include "nco/oracles.hpp"
#include "nco/trainer.hpp"
#include "test_util.hpp"

using namespace nco;

namespace {

ParamStore make_actor(const PolicyConfig& cfg, std::uint64_t seed) {
  ParamStore store;
  add_policy_params(store, cfg);
  Rng rng(seed);
  init_uniform(store, -0.08, 0.08, rng);
  return store;
}

// every decode sequence the policy can emit: all n! permutations
std::vector<std::vector<int>> all_sequences(int n) {
  std::vector<int> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::vector<std::vector<int>> out;
  do {
    out.push_back(order);
  } while (std::next_permutation(order.begin(), order.end()));
  return out;
}

}  // namespace

TEST_CASE("EMA baseline adopts the first mean, then decays") {
  EmaBaseline b;
  b.alpha = 0.9;
  ema_update(b, 4.0);
  CHECK(b.value == 4.0);
  CHECK(b.initialized);
  ema_update(b, 2.0);
  CHECK(b.value == doctest::Approx(0.9 * 4.0 + 0.1 * 2.0).epsilon(1e-15));
}

TEST_CASE("zero advantage yields zero policy gradient") {
  PolicyConfig cfg{8, 2, 10.0, 1};
  auto store = make_actor(cfg, 3);
  auto inst = generate_tsp(6, 1, 4)[0];
  Rng rng(1);
  Tape tape;
  std::vector<Rollout> rollouts;
  rollouts.push_back(rollout(tape, store, cfg, Instance{inst}, DecodeMode::Sample, 1.0, &rng));
  std::vector<double> baselines = {rollouts[0].objective};  // advantage exactly 0
  store.zero_adjoints();
  reinforce_batch_gradient(rollouts, baselines);
  for (const auto& e : store.entries())
    for (double g : e.adjoint.data) CHECK(g == 0.0);
}

TEST_CASE("policy gradient is linear in the advantage") {
  PolicyConfig cfg{8, 2, 10.0, 1};
  auto store = make_actor(cfg, 5);
  auto inst = generate_tsp(6, 1, 6)[0];

  auto grads_with_baseline = [&](double b) {
    Rng rng(2);
    Tape tape;
    std::vector<Rollout> rollouts;
    rollouts.push_back(rollout(tape, store, cfg, Instance{inst}, DecodeMode::Sample, 1.0, &rng));
    std::vector<double> baselines = {b};
    store.zero_adjoints();
    reinforce_batch_gradient(rollouts, baselines);
    std::vector<double> flat;
    for (const auto& e : store.entries())
      flat.insert(flat.end(), e.adjoint.data.begin(), e.adjoint.data.end());
    return std::pair{flat, rollouts[0].objective};
  };

  auto [g0, obj0] = grads_with_baseline(0.0);
  auto [g1, obj1] = grads_with_baseline(1.0);
  auto [g2, obj2] = grads_with_baseline(2.0);
  CHECK(obj0 == obj1);  // same rollout every time (same seed)
  CHECK(obj1 == obj2);
  // grad(b) = (L - b) dlogp is affine in b: g2 = 2 g1 - g0
  double max_abs = 0.0;
  for (size_t i = 0; i < g0.size(); ++i)
    max_abs = std::max(max_abs, std::fabs(g2[i] - (2.0 * g1[i] - g0[i])));
  CHECK(max_abs <= 1e-12);
}

TEST_CASE("REINFORCE enumeration identity: estimator equals the true gradient") {
  // sum_pi p(pi) (L(pi) - b) dlogp(pi) == d/dtheta E[L] for any constant b
  PolicyConfig cfg{8, 2, 10.0, 1};
  auto store = make_actor(cfg, 7);
  auto inst = generate_tsp(4, 1, 8)[0];
  auto tours = all_sequences(4);

  // true gradient: d E[L] = sum_pi L(pi) p(pi) dlogp(pi) via backward seeds
  auto expected = [&] {
    store.zero_adjoints();
    for (const auto& tour : tours) {
      Tape tape;
      auto r = rollout(tape, store, cfg, Instance{inst}, DecodeMode::Forced, 1.0, nullptr, &tour);
      double p = std::exp(r.total_logp_value);
      tape.backward(r.total_logp, p * r.objective);
    }
    std::vector<double> flat;
    for (const auto& e : store.entries())
      flat.insert(flat.end(), e.adjoint.data.begin(), e.adjoint.data.end());
    return flat;
  }();

  for (double b : {0.0, -1.0, 10.0}) {
    store.zero_adjoints();
    for (const auto& tour : tours) {
      Tape tape;
      auto r = rollout(tape, store, cfg, Instance{inst}, DecodeMode::Forced, 1.0, nullptr, &tour);
      double p = std::exp(r.total_logp_value);
      tape.backward(r.total_logp, p * (r.objective - b));
    }
    size_t k = 0;
    double max_abs = 0.0;
    for (const auto& e : store.entries())
      for (double g : e.adjoint.data) max_abs = std::max(max_abs, std::fabs(g - expected[k++]));
    INFO("baseline " << b);
    CHECK(max_abs <= 1e-8);
  }
}

TEST_CASE("following the exact enumeration gradient strictly decreases E[L]") {
  PolicyConfig cfg{8, 2, 10.0, 1};
  // wider init than training default so the descent signal clears fp noise
  ParamStore store;
  add_policy_params(store, cfg);
  {
    Rng rng(9);
    init_uniform(store, -0.5, 0.5, rng);
  }
  auto inst = generate_tsp(4, 1, 10)[0];
  auto tours = all_sequences(4);

  auto expected_length = [&] {
    double el = 0.0;
    for (const auto& tour : tours) {
      Tape tape;
      tape.grad_enabled = false;
      auto r = rollout(tape, store, cfg, Instance{inst}, DecodeMode::Forced, 1.0, nullptr, &tour);
      el += std::exp(r.total_logp_value) * r.objective;
    }
    return el;
  };

  double last = expected_length();
  double first = last;
  for (int step = 0; step < 50; ++step) {
    store.zero_adjoints();
    double mean = last;  // E[L] is the natural baseline here
    for (const auto& tour : tours) {
      Tape tape;
      auto r = rollout(tape, store, cfg, Instance{inst}, DecodeMode::Forced, 1.0, nullptr, &tour);
      double p = std::exp(r.total_logp_value);
      tape.backward(r.total_logp, p * (r.objective - mean));
    }
    for (auto& e : store.entries())
      for (size_t i = 0; i < e.value.data.size(); ++i)
        e.value.data[i] -= 1.0 * e.adjoint.data[i];
    double now = expected_length();
    CHECK(now < last + 1e-12);
    last = now;
  }
  CHECK(last < first - 1e-3);  // made real progress, not just noise
}

TEST_CASE("baseline/rollout count mismatch is rejected") {
  std::vector<Rollout> empty;
  std::vector<double> baselines = {1.0};
  CHECK_THROWS(reinforce_batch_gradient(empty, baselines));
}

TEST_CASE("training runs, logs metrics and improves over the start (tiny TSP)") {
  TrainConfig cfg;
  cfg.problem = {"tsp", 6, 0.0};
  cfg.batch = 8;
  cfg.steps = 60;
  cfg.hidden = 16;
  cfg.seed = 11;
  cfg.lr_policy = cfg.lr_critic = 1e-2;
  auto result = actor_critic_train(cfg);
  REQUIRE(result.metrics.size() == 60);
  CHECK(result.metrics.front().step == 1);
  CHECK(result.metrics.back().step == 60);
  for (const auto& row : result.metrics) {
    CHECK(std::isfinite(row.mean_objective));
    CHECK(std::isfinite(row.critic_loss));
    CHECK(row.effective_lr == doctest::Approx(1e-2));
  }
  double first10 = 0.0, last10 = 0.0;
  for (int i = 0; i < 10; ++i) {
    first10 += result.metrics[static_cast<size_t>(i)].mean_objective;
    last10 += result.metrics[result.metrics.size() - 10 + static_cast<size_t>(i)].mean_objective;
  }
  CHECK(last10 < first10);  // learning signal, even if modest
}

TEST_CASE("identical seeds give bit-identical training trajectories") {
  TrainConfig cfg;
  cfg.problem = {"tsp", 5, 0.0};
  cfg.batch = 4;
  cfg.steps = 12;
  cfg.hidden = 8;
  cfg.seed = 21;
  auto a = actor_critic_train(cfg);
  auto b = actor_critic_train(cfg);
  for (size_t i = 0; i < a.metrics.size(); ++i) {
    CHECK(a.metrics[i].mean_objective == b.metrics[i].mean_objective);
    CHECK(a.metrics[i].critic_loss == b.metrics[i].critic_loss);
  }
  for (size_t p = 0; p < a.actor.count(); ++p)
    for (size_t i = 0; i < a.actor.entries()[p].value.data.size(); ++i)
      CHECK(a.actor.entries()[p].value.data[i] == b.actor.entries()[p].value.data[i]);
}

TEST_CASE("lr=0 leaves parameters bit-identical to their init") {
  TrainConfig cfg;
  cfg.problem = {"tsp", 5, 0.0};
  cfg.batch = 4;
  cfg.steps = 5;
  cfg.hidden = 8;
  cfg.seed = 22;
  cfg.lr_policy = 0.0;
  cfg.lr_critic = 0.0;
  auto result = actor_critic_train(cfg);

  // with lr=0 parameters never move, so a 1-step run ends where a 5-step
  // run does: both at the initialization
  TrainConfig cfg2 = cfg;
  cfg2.steps = 1;
  auto init_only = actor_critic_train(cfg2);
  for (size_t p = 0; p < result.actor.count(); ++p)
    for (size_t i = 0; i < result.actor.entries()[p].value.data.size(); ++i)
      CHECK(result.actor.entries()[p].value.data[i] ==
            init_only.actor.entries()[p].value.data[i]);
}

TEST_CASE("resume reproduces an uninterrupted run bit-identically") {
  namespace fs = std::filesystem;
  auto dir = fs::temp_directory_path() / "nco_resume_test";
  fs::remove_all(dir);

  TrainConfig cfg;
  cfg.problem = {"tsp", 5, 0.0};
  cfg.batch = 4;
  cfg.steps = 10;
  cfg.hidden = 8;
  cfg.seed = 31;
  cfg.out_dir = (dir / "full").string();
  auto full = actor_critic_train(cfg);

  TrainConfig half = cfg;
  half.steps = 5;
  half.out_dir = (dir / "half").string();
  actor_critic_train(half);

  TrainConfig rest = cfg;
  rest.steps = 10;
  rest.out_dir = (dir / "rest").string();
  auto resumed = actor_critic_train(rest, nullptr, (dir / "half").string() + "/ckpt_final");

  for (size_t p = 0; p < full.actor.count(); ++p)
    for (size_t i = 0; i < full.actor.entries()[p].value.data.size(); ++i)
      CHECK(full.actor.entries()[p].value.data[i] == resumed.actor.entries()[p].value.data[i]);
  for (size_t p = 0; p < full.critic.count(); ++p)
    for (size_t i = 0; i < full.critic.entries()[p].value.data.size(); ++i)
      CHECK(full.critic.entries()[p].value.data[i] == resumed.critic.entries()[p].value.data[i]);
  fs::remove_all(dir);
}

TEST_CASE("EMA baseline variant also trains deterministically") {
  TrainConfig cfg;
  cfg.problem = {"tsp", 5, 0.0};
  cfg.batch = 4;
  cfg.steps = 8;
  cfg.hidden = 8;
  cfg.seed = 41;
  cfg.baseline = "ema";
  auto a = actor_critic_train(cfg);
  auto b = actor_critic_train(cfg);
  CHECK(a.ema.initialized);
  CHECK(a.ema.value == b.ema.value);
  for (size_t i = 0; i < a.metrics.size(); ++i)
    CHECK(a.metrics[i].mean_objective == b.metrics[i].mean_objective);
}

TEST_CASE("knapsack training is feasible end to end") {
  TrainConfig cfg;
  cfg.problem = {"knapsack", 8, 2.0};
  cfg.batch = 4;
  cfg.steps = 10;
  cfg.hidden = 8;
  cfg.seed = 51;
  auto result = actor_critic_train(cfg);
  REQUIRE(result.metrics.size() == 10);
  // objectives are negated values: negative means items were picked
  CHECK(result.metrics.back().mean_objective < 0.0);
}

TEST_CASE("supervised training drives the forced negative log likelihood down") {
  Rng rng(61);
  std::vector<LabeledInstance> labeled;
  for (int i = 0; i < 64; ++i) {
    auto inst = generate_tsp(6, 1, rng.next())[0];
    auto opt = held_karp(inst);
    labeled.push_back({Instance{inst}, opt.solution.indices});
  }
  TrainConfig cfg;
  cfg.problem = {"tsp", 6, 0.0};
  cfg.batch = 8;
  cfg.steps = 150;
  cfg.hidden = 16;
  cfg.seed = 62;
  cfg.lr_policy = 1e-2;
  auto result = supervised_train(cfg, labeled);
  REQUIRE(result.metrics.size() == 150);
  double first10 = 0.0, last10 = 0.0;
  for (int i = 0; i < 10; ++i) {
    first10 += result.metrics[static_cast<size_t>(i)].mean_objective;
    last10 += result.metrics[result.metrics.size() - 10 + static_cast<size_t>(i)].mean_objective;
  }
  CHECK(last10 < first10);
}

TEST_CASE("metrics CSV is stamped with the config hash and parses back") {
  std::vector<MetricsRow> rows = {{1, 3.5, 0.2, 1e-3, 12.0}, {2, 3.4, 0.19, 1e-3, 24.0}};
  auto path = (std::filesystem::temp_directory_path() / "nco_metrics_test.csv").string();
  write_metrics_csv(path, rows, "cafebabe");
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line.find("cafebabe") != std::string::npos);
  std::getline(in, line);
  CHECK(line == "step,mean_objective,critic_loss,effective_lr,wallclock_ms");
  std::getline(in, line);
  CHECK(line.substr(0, 2) == "1,");
  std::filesystem::remove(path);
}

TEST_CASE("invalid configurations are rejected") {
  TrainConfig cfg;
  cfg.batch = 0;
  CHECK_THROWS(cfg.validate());
  cfg.batch = 4;
  cfg.ema_alpha = 1.5;
  CHECK_THROWS(cfg.validate());
  cfg.ema_alpha = 0.99;
  cfg.baseline = "magic";
  CHECK_THROWS(cfg.validate());
}

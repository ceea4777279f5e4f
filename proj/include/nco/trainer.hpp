#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nco/adam.hpp"
#include "nco/critic.hpp"
#include "nco/policy.hpp"

namespace nco {

struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& m) : std::runtime_error(m) {}
};

struct ProblemSpec {
  std::string problem = "tsp";  // "tsp" | "knapsack"
  int n = 20;
  double capacity = 0.0;  // knapsack; <= 0 means default for n

  Instance sample(Rng& rng) const;
};

struct TrainConfig {
  int batch = 64;
  std::int64_t steps = 1000;
  double lr_policy = 1e-3;
  double lr_critic = 1e-3;
  std::int64_t decay_interval = 5000;
  double decay_factor = 0.96;
  int hidden = 64;
  int glimpses = 1;
  double clip_c = 10.0;
  double max_grad_norm = 1.0;
  double ema_alpha = 0.99;
  std::string baseline = "critic";  // "critic" | "ema"
  int critic_process_steps = 3;
  std::uint64_t seed = 1;
  ProblemSpec problem;
  std::int64_t checkpoint_interval = 0;  // 0 = only final
  std::string out_dir;                   // empty = no files written

  void validate() const;
  PolicyConfig policy_config() const { return {hidden, 2, clip_c, glimpses}; }
  CriticConfig critic_config() const { return {hidden, 2, critic_process_steps}; }
};

struct MetricsRow {
  std::int64_t step = 0;
  double mean_objective = 0.0;
  double critic_loss = 0.0;
  double effective_lr = 0.0;
  double wallclock_ms = 0.0;
};

struct EmaBaseline {
  double value = 0.0;
  double alpha = 0.99;
  bool initialized = false;
};

// First call adopts the batch mean; afterwards b <- alpha b + (1-alpha) mean.
void ema_update(EmaBaseline& baseline, double batch_mean);

// Accumulates adjoints of (1/B) sum (L_i - b_i) d/dtheta log p(pi_i) into the
// parameter store each rollout was built against. Advantages are constants:
// nothing flows through the baselines.
void reinforce_batch_gradient(std::span<const Rollout> rollouts, std::span<const double> baselines);

struct TrainResult {
  ParamStore actor;
  ParamStore critic;
  AdamState adam_actor;
  AdamState adam_critic;
  EmaBaseline ema;
  std::vector<MetricsRow> metrics;
};

using InstanceSource = std::function<Instance(Rng&)>;

// Algorithm: per step draw B fresh instances, sample one rollout each at
// T=1, baseline from the critic (or EMA), REINFORCE + clip + Adam for the
// policy, MSE + clip + Adam for the critic.
TrainResult actor_critic_train(const TrainConfig& cfg, InstanceSource source = nullptr,
                               const std::string& resume_prefix = "");

struct LabeledInstance {
  Instance instance;
  std::vector<int> tour;  // optimal tour from an exact oracle
};

// Cross-entropy on oracle tours with teacher forcing.
TrainResult supervised_train(const TrainConfig& cfg, const std::vector<LabeledInstance>& labeled);

void write_metrics_csv(const std::string& path, std::span<const MetricsRow> rows,
                       const std::string& config_hash);

// stable hash of the fields that shape a run; stamped into output files
std::string train_config_hash(const TrainConfig& cfg);

// checkpoint file names under out_dir for a given step tag
std::string ckpt_actor_path(const std::string& dir, const std::string& tag);
std::string ckpt_critic_path(const std::string& dir, const std::string& tag);
std::string ckpt_meta_path(const std::string& dir, const std::string& tag);

}  // namespace nco

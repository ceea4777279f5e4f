#include "nco/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>

#include <nlohmann/json.hpp>

#include "nco/checkpoint.hpp"

namespace nco {

using Clock = std::chrono::steady_clock;

Instance ProblemSpec::sample(Rng& rng) const {
  if (problem == "tsp") {
    TspInstance inst;
    inst.points.resize(static_cast<size_t>(n));
    for (auto& p : inst.points) {
      p[0] = rng.uniform();
      p[1] = rng.uniform();
    }
    return inst;
  }
  if (problem == "knapsack") {
    KnapsackInstance inst;
    inst.capacity = capacity > 0.0 ? capacity : default_knapsack_capacity(n);
    inst.weights.resize(static_cast<size_t>(n));
    inst.values.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
      inst.weights[static_cast<size_t>(i)] = rng.uniform();
      inst.values[static_cast<size_t>(i)] = rng.uniform();
    }
    return inst;
  }
  throw DataError("ProblemSpec: unknown problem " + problem);
}

void TrainConfig::validate() const {
  if (batch < 1) throw DataError("TrainConfig: batch must be >= 1");
  if (steps < 1) throw DataError("TrainConfig: steps must be >= 1");
  if (!(ema_alpha >= 0.0 && ema_alpha < 1.0)) throw DataError("TrainConfig: alpha must be in [0,1)");
  if (!(lr_policy >= 0.0) || !(lr_critic >= 0.0)) throw DataError("TrainConfig: negative learning rate");
  if (baseline != "critic" && baseline != "ema") throw DataError("TrainConfig: unknown baseline " + baseline);
}

void ema_update(EmaBaseline& b, double batch_mean) {
  if (!b.initialized) {
    b.value = batch_mean;
    b.initialized = true;
    return;
  }
  b.value = b.alpha * b.value + (1.0 - b.alpha) * batch_mean;
}

void reinforce_batch_gradient(std::span<const Rollout> rollouts, std::span<const double> baselines) {
  if (rollouts.size() != baselines.size())
    throw DataError("reinforce_batch_gradient: rollout/baseline size mismatch");
  if (rollouts.empty()) throw DataError("reinforce_batch_gradient: empty batch");
  double inv_b = 1.0 / static_cast<double>(rollouts.size());
  for (size_t i = 0; i < rollouts.size(); ++i) {
    double advantage = rollouts[i].objective - baselines[i];
    rollouts[i].tape->backward(rollouts[i].total_logp, advantage * inv_b);
  }
}

std::string train_config_hash(const TrainConfig& cfg) {
  std::ostringstream os;
  os << cfg.batch << '|' << cfg.steps << '|' << cfg.lr_policy << '|' << cfg.lr_critic << '|'
     << cfg.decay_interval << '|' << cfg.decay_factor << '|' << cfg.hidden << '|' << cfg.glimpses
     << '|' << cfg.clip_c << '|' << cfg.max_grad_norm << '|' << cfg.ema_alpha << '|' << cfg.baseline
     << '|' << cfg.critic_process_steps << '|' << cfg.seed << '|' << cfg.problem.problem << '|'
     << cfg.problem.n << '|' << cfg.problem.capacity;
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(bytes_hash(os.str())));
  return buf;
}

std::string ckpt_actor_path(const std::string& dir, const std::string& tag) {
  return dir + "/ckpt_" + tag + "_actor.bin";
}
std::string ckpt_critic_path(const std::string& dir, const std::string& tag) {
  return dir + "/ckpt_" + tag + "_critic.bin";
}
std::string ckpt_meta_path(const std::string& dir, const std::string& tag) {
  return dir + "/ckpt_" + tag + ".json";
}

void write_metrics_csv(const std::string& path, std::span<const MetricsRow> rows,
                       const std::string& config_hash) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::trunc);
    if (!f) throw DataError("write_metrics_csv: cannot open " + tmp);
    f << "# nco config=" << config_hash << "\n";
    f << "step,mean_objective,critic_loss,effective_lr,wallclock_ms\n";
    char buf[160];
    for (const auto& r : rows) {
      std::snprintf(buf, sizeof buf, "%lld,%.17g,%.17g,%.17g,%.3f\n",
                    static_cast<long long>(r.step), r.mean_objective, r.critic_loss,
                    r.effective_lr, r.wallclock_ms);
      f << buf;
    }
  }
  std::filesystem::rename(tmp, path);
}

namespace {

constexpr std::uint64_t kDataSalt = 0xDA7A0001ULL;
constexpr std::uint64_t kSampleSalt = 0x5A3B7E00ULL;

void save_state(const TrainConfig& cfg, const std::string& tag, const ParamStore& actor,
                const ParamStore& critic, const AdamState& aa, const AdamState& ac,
                const EmaBaseline& ema, std::span<const MetricsRow> metrics) {
  if (cfg.out_dir.empty()) return;
  std::filesystem::create_directories(cfg.out_dir);
  save_checkpoint(ckpt_actor_path(cfg.out_dir, tag), actor, &aa);
  save_checkpoint(ckpt_critic_path(cfg.out_dir, tag), critic, &ac);
  nlohmann::json meta{{"step", aa.step},
                      {"ema_value", ema.value},
                      {"ema_initialized", ema.initialized},
                      {"config", train_config_hash(cfg)}};
  std::ofstream f(ckpt_meta_path(cfg.out_dir, tag), std::ios::trunc);
  f << meta.dump(2) << "\n";
  write_metrics_csv(cfg.out_dir + "/metrics.csv", metrics, train_config_hash(cfg));
}

void check_architecture(const ParamStore& loaded, const ParamStore& fresh, const std::string& what) {
  if (loaded.count() != fresh.count())
    throw DataError("resume: " + what + " checkpoint has a different parameter set");
  for (size_t i = 0; i < fresh.entries().size(); ++i) {
    const auto &a = loaded.entries()[i], &b = fresh.entries()[i];
    if (a.name != b.name || a.value.shape != b.value.shape)
      throw DataError("resume: " + what + " architecture mismatch at " + b.name + " (" +
                      a.value.shape_str() + " vs " + b.value.shape_str() + ")");
  }
}

}  // namespace

TrainResult actor_critic_train(const TrainConfig& cfg, InstanceSource source,
                               const std::string& resume_prefix) {
  cfg.validate();
  TrainResult out;
  PolicyConfig pcfg = cfg.policy_config();
  CriticConfig ccfg = cfg.critic_config();
  add_policy_params(out.actor, pcfg);
  add_critic_params(out.critic, ccfg);
  {
    Rng init_rng(Rng::derive(cfg.seed, 0x1417));
    init_network(out.actor, 0.08, init_rng);
    init_network(out.critic, 0.08, init_rng);
    set_forget_bias(out.actor, "actor/enc", 1.0);
    set_forget_bias(out.actor, "actor/dec", 1.0);
    set_forget_bias(out.critic, "critic/enc", 1.0);
  }
  out.adam_actor = AdamState::init(out.actor, cfg.lr_policy, cfg.decay_interval, cfg.decay_factor);
  out.adam_critic = AdamState::init(out.critic, cfg.lr_critic, cfg.decay_interval, cfg.decay_factor);
  out.ema.alpha = cfg.ema_alpha;

  std::int64_t start_step = 0;
  if (!resume_prefix.empty()) {
    Checkpoint a = load_checkpoint(resume_prefix + "_actor.bin");
    Checkpoint c = load_checkpoint(resume_prefix + "_critic.bin");
    check_architecture(a.params, out.actor, "actor");
    check_architecture(c.params, out.critic, "critic");
    out.actor = std::move(a.params);
    out.critic = std::move(c.params);
    if (!a.adam || !c.adam) throw DataError("resume: checkpoint lacks optimizer state");
    out.adam_actor = std::move(*a.adam);
    out.adam_critic = std::move(*c.adam);
    start_step = out.adam_actor.step;
    std::ifstream mf(resume_prefix + ".json");
    if (mf) {
      nlohmann::json meta = nlohmann::json::parse(mf);
      out.ema.value = meta.value("ema_value", 0.0);
      out.ema.initialized = meta.value("ema_initialized", false);
    }
  }

  if (!source) source = [&cfg](Rng& rng) { return cfg.problem.sample(rng); };

  std::vector<double> objectives(static_cast<size_t>(cfg.batch));
  std::vector<double> baselines(static_cast<size_t>(cfg.batch));
  std::vector<double> preds(static_cast<size_t>(cfg.batch));

  for (std::int64_t t = start_step + 1; t <= cfg.steps; ++t) {
    auto t0 = Clock::now();
    Rng data_rng(Rng::derive(cfg.seed, kDataSalt + static_cast<std::uint64_t>(t)));
    std::vector<Instance> batch;
    batch.reserve(static_cast<size_t>(cfg.batch));
    for (int i = 0; i < cfg.batch; ++i) batch.push_back(source(data_rng));

    bool ema_mode = cfg.baseline == "ema";
    if (ema_mode && !out.ema.initialized) {
      // cold start: roll the batch out once to center the first advantage
      std::vector<std::unique_ptr<Tape>> tapes;
      std::vector<Rollout> rollouts;
      double mean_l = 0.0;
      for (int i = 0; i < cfg.batch; ++i) {
        tapes.push_back(std::make_unique<Tape>());
        Rng srng(Rng::derive(cfg.seed, kSampleSalt + static_cast<std::uint64_t>(t) * 100003ULL +
                                           static_cast<std::uint64_t>(i)));
        rollouts.push_back(rollout(*tapes.back(), out.actor, pcfg, batch[static_cast<size_t>(i)],
                                   DecodeMode::Sample, 1.0, &srng));
        objectives[static_cast<size_t>(i)] = rollouts.back().objective;
        mean_l += rollouts.back().objective;
      }
      mean_l /= cfg.batch;
      std::fill(baselines.begin(), baselines.end(), mean_l);
      reinforce_batch_gradient(rollouts, baselines);
      ema_update(out.ema, mean_l);
      preds = baselines;
    } else {
      for (int i = 0; i < cfg.batch; ++i) {
        Tape tape;
        Rng srng(Rng::derive(cfg.seed, kSampleSalt + static_cast<std::uint64_t>(t) * 100003ULL +
                                           static_cast<std::uint64_t>(i)));
        Rollout r = rollout(tape, out.actor, pcfg, batch[static_cast<size_t>(i)],
                            DecodeMode::Sample, 1.0, &srng);
        double obj = r.objective;
        objectives[static_cast<size_t>(i)] = obj;

        double b;
        if (ema_mode) {
          b = out.ema.value;
        } else {
          Val bval = critic_forward(tape, out.critic, ccfg, batch[static_cast<size_t>(i)]);
          b = tape.val(bval).at(0);
          // d/db of (1/B) (b - L)^2
          tape.backward(bval, 2.0 * (b - obj) / cfg.batch);
        }
        preds[static_cast<size_t>(i)] = b;
        baselines[static_cast<size_t>(i)] = b;
        tape.backward(r.total_logp, (obj - b) / cfg.batch);
      }
      if (ema_mode) {
        double mean_l = 0.0;
        for (double L : objectives) mean_l += L;
        ema_update(out.ema, mean_l / cfg.batch);
      }
    }

    double mean_l = 0.0;
    for (double L : objectives) mean_l += L;
    mean_l /= cfg.batch;
    double closs = critic_loss(preds, objectives);
    if (!std::isfinite(mean_l) || !std::isfinite(closs) ||
        !std::isfinite(global_grad_norm(out.actor))) {
      save_state(cfg, "diag", out.actor, out.critic, out.adam_actor, out.adam_critic, out.ema,
                 out.metrics);
      throw NumericError("actor_critic_train: non-finite loss at step " + std::to_string(t) +
                         (cfg.out_dir.empty() ? "" : "; state dumped to " + cfg.out_dir));
    }

    clip_global_norm(out.actor, cfg.max_grad_norm);
    clip_global_norm(out.critic, cfg.max_grad_norm);
    adam_step(out.actor, out.adam_actor);
    adam_step(out.critic, out.adam_critic);
    out.actor.zero_adjoints();
    out.critic.zero_adjoints();

    MetricsRow row;
    row.step = t;
    row.mean_objective = mean_l;
    row.critic_loss = closs;
    row.effective_lr = out.adam_actor.effective_lr();
    row.wallclock_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    out.metrics.push_back(row);

    if (cfg.checkpoint_interval > 0 && t % cfg.checkpoint_interval == 0 && t != cfg.steps)
      save_state(cfg, "step" + std::to_string(t), out.actor, out.critic, out.adam_actor,
                 out.adam_critic, out.ema, out.metrics);
  }
  save_state(cfg, "final", out.actor, out.critic, out.adam_actor, out.adam_critic, out.ema,
             out.metrics);
  return out;
}

TrainResult supervised_train(const TrainConfig& cfg, const std::vector<LabeledInstance>& labeled) {
  cfg.validate();
  if (labeled.empty()) throw DataError("supervised_train: no labeled instances");
  for (const auto& li : labeled) {
    const auto* tsp = std::get_if<TspInstance>(&li.instance);
    if (!tsp) throw DataError("supervised_train: labels must be TSP tours");
    tour_length(*tsp, li.tour);  // validates the permutation
  }
  TrainResult out;
  PolicyConfig pcfg = cfg.policy_config();
  add_policy_params(out.actor, pcfg);
  {
    Rng init_rng(Rng::derive(cfg.seed, 0x1417));
    init_network(out.actor, 0.08, init_rng);
    set_forget_bias(out.actor, "actor/enc", 1.0);
    set_forget_bias(out.actor, "actor/dec", 1.0);
  }
  out.adam_actor = AdamState::init(out.actor, cfg.lr_policy, cfg.decay_interval, cfg.decay_factor);

  for (std::int64_t t = 1; t <= cfg.steps; ++t) {
    auto t0 = Clock::now();
    Rng pick_rng(Rng::derive(cfg.seed, kDataSalt + static_cast<std::uint64_t>(t)));
    double mean_nll = 0.0;
    for (int i = 0; i < cfg.batch; ++i) {
      const auto& li = labeled[pick_rng.below(labeled.size())];
      Tape tape;
      Rollout r = rollout(tape, out.actor, pcfg, li.instance, DecodeMode::Forced, 1.0, nullptr,
                          &li.tour);
      mean_nll -= r.total_logp_value;
      tape.backward(r.total_logp, -1.0 / cfg.batch);
    }
    mean_nll /= cfg.batch;
    if (!std::isfinite(mean_nll)) throw NumericError("supervised_train: non-finite loss");
    clip_global_norm(out.actor, cfg.max_grad_norm);
    adam_step(out.actor, out.adam_actor);
    out.actor.zero_adjoints();
    MetricsRow row;
    row.step = t;
    row.mean_objective = mean_nll;
    row.effective_lr = out.adam_actor.effective_lr();
    row.wallclock_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    out.metrics.push_back(row);
  }
  if (!cfg.out_dir.empty()) {
    std::filesystem::create_directories(cfg.out_dir);
    save_checkpoint(ckpt_actor_path(cfg.out_dir, "final"), out.actor, &out.adam_actor);
    write_metrics_csv(cfg.out_dir + "/metrics.csv", out.metrics, train_config_hash(cfg));
  }
  return out;
}

}  // namespace nco

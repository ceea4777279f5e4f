#include "nco/search.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>
#include <numeric>

namespace nco {

using Clock = std::chrono::steady_clock;

namespace {

constexpr std::uint64_t kSearchSampleSalt = 0x5EA4C40000ULL;
constexpr std::uint64_t kShuffleSalt = 0x5F0FF1E000ULL;
constexpr std::uint64_t kInitSalt = 0x1C1DE2700ULL;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

PolicyConfig policy_cfg_from(const SearchConfig& cfg, const ParamStore& params) {
  PolicyConfig p;
  p.d = params.value("actor/start").rows();
  p.clip_c = cfg.clip_c;
  p.glimpses = cfg.glimpses;
  return p;
}

Rng sample_rng(const SearchConfig& cfg, std::uint64_t iter, std::uint64_t i) {
  return Rng(Rng::derive(cfg.seed, kSearchSampleSalt + iter * 1000003ULL + i));
}

// permutation sigma: shuffled position i holds original element sigma[i]
std::vector<int> shuffle_perm(int n, Rng& rng) {
  std::vector<int> sigma(static_cast<size_t>(n));
  std::iota(sigma.begin(), sigma.end(), 0);
  for (int i = n - 1; i > 0; --i)
    std::swap(sigma[static_cast<size_t>(i)], sigma[rng.below(static_cast<std::uint64_t>(i + 1))]);
  return sigma;
}

Instance apply_perm(const Instance& inst, const std::vector<int>& sigma) {
  if (const auto* tsp = std::get_if<TspInstance>(&inst)) {
    TspInstance out;
    out.points.reserve(sigma.size());
    for (int i : sigma) out.points.push_back(tsp->points[static_cast<size_t>(i)]);
    return out;
  }
  const auto& ks = std::get<KnapsackInstance>(inst);
  KnapsackInstance out;
  out.capacity = ks.capacity;
  for (int i : sigma) {
    out.weights.push_back(ks.weights[static_cast<size_t>(i)]);
    out.values.push_back(ks.values[static_cast<size_t>(i)]);
  }
  return out;
}

std::vector<int> map_back(const std::vector<int>& choices, const std::vector<int>& sigma) {
  std::vector<int> out;
  out.reserve(choices.size());
  for (int c : choices) out.push_back(sigma[static_cast<size_t>(c)]);
  return out;
}

Solution solution_from_indices(const Instance& inst, const std::vector<int>& indices) {
  Solution s;
  if (const auto* tsp = std::get_if<TspInstance>(&inst)) {
    s.kind = Solution::Kind::Tour;
    s.indices = indices;
    s.objective = tour_length(*tsp, indices);
  } else {
    s.kind = Solution::Kind::ItemSet;
    s.indices = indices;
    s.objective = knapsack_value(std::get<KnapsackInstance>(inst), indices);
  }
  return s;
}

double min_objective(const Instance& inst, const Solution& s) {
  return std::holds_alternative<TspInstance>(inst) ? s.objective : -s.objective;
}

Solution random_solution(const Instance& inst, Rng& rng) {
  if (const auto* tsp = std::get_if<TspInstance>(&inst)) {
    auto perm = shuffle_perm(tsp->size(), rng);
    return solution_from_indices(inst, perm);
  }
  const auto& ks = std::get<KnapsackInstance>(inst);
  std::vector<int> sel;
  std::vector<int> feasible;
  for (;;) {
    auto dm = knapsack_decode_mask(ks, sel);
    if (dm.done) break;
    feasible.clear();
    for (int i = 0; i < ks.size(); ++i)
      if (!dm.mask[static_cast<size_t>(i)]) feasible.push_back(i);
    sel.push_back(feasible[rng.below(feasible.size())]);
  }
  return solution_from_indices(inst, sel);
}

bool is_milestone(std::uint64_t consumed, std::uint64_t batch, std::uint64_t budget) {
  if (consumed >= budget) return true;
  std::uint64_t m = batch;
  while (m < consumed) m *= 10;
  return m == consumed;
}

}  // namespace

Strategy strategy_from_name(const std::string& name) {
  if (name == "greedy") return Strategy::Greedy;
  if (name == "greedy_at_k") return Strategy::GreedyAtK;
  if (name == "sampling") return Strategy::Sampling;
  if (name == "active_search") return Strategy::ActiveSearch;
  throw DataError("unknown search strategy: " + name);
}

std::string strategy_name(Strategy s) {
  switch (s) {
    case Strategy::Greedy: return "greedy";
    case Strategy::GreedyAtK: return "greedy_at_k";
    case Strategy::Sampling: return "sampling";
    case Strategy::ActiveSearch: return "active_search";
  }
  return "?";
}

Solution greedy_search(const Instance& inst, ParamStore& params, const SearchConfig& cfg) {
  Tape tape;
  tape.grad_enabled = false;
  Rollout r = rollout(tape, params, policy_cfg_from(cfg, params), inst, DecodeMode::Greedy,
                      cfg.temperature, nullptr);
  return rollout_solution(inst, r);
}

Solution greedy_at_k(const Instance& inst, std::vector<ParamStore*> checkpoints,
                     const SearchConfig& cfg) {
  if (checkpoints.empty()) throw DataError("greedy_at_k: no checkpoints");
  Solution best;
  double best_min = 0.0;
  bool first = true;
  for (ParamStore* params : checkpoints) {
    Solution s = greedy_search(inst, *params, cfg);
    double m = min_objective(inst, s);
    if (first || m < best_min) {
      best = s;
      best_min = m;
      first = false;
    }
  }
  return best;
}

SearchTrace sample_search(const Instance& inst, ParamStore& params, const SearchConfig& cfg) {
  if (cfg.budget < 1) throw DataError("sample_search: budget must be >= 1");
  if (!(cfg.temperature > 0.0)) throw DataError("sample_search: temperature must be > 0");
  auto t0 = Clock::now();
  PolicyConfig pcfg = policy_cfg_from(cfg, params);
  SearchTrace trace;
  bool have = false;
  double best_min = 0.0;
  std::uint64_t consumed = 0;
  std::uint64_t iter = 0;
  std::uint64_t bsz = static_cast<std::uint64_t>(cfg.batch);
  while (consumed < cfg.budget) {
    std::vector<int> sigma;
    Instance work = inst;
    if (cfg.shuffle) {
      Rng srng(Rng::derive(cfg.seed, kShuffleSalt + iter));
      sigma = shuffle_perm(instance_size(inst), srng);
      work = apply_perm(inst, sigma);
    }
    std::uint64_t take = std::min(bsz, cfg.budget - consumed);
    for (std::uint64_t i = 0; i < take; ++i) {
      Tape tape;
      tape.grad_enabled = false;
      Rng rng = sample_rng(cfg, iter, i);
      Rollout r = rollout(tape, params, pcfg, work, DecodeMode::Sample, cfg.temperature, &rng);
      std::vector<int> indices = cfg.shuffle ? map_back(r.choices, sigma) : r.choices;
      Solution s = solution_from_indices(inst, indices);
      double m = min_objective(inst, s);
      ++consumed;
      if (!have || m < best_min) {
        best_min = m;
        trace.best = s;
        have = true;
      }
      if (is_milestone(consumed, bsz, cfg.budget))
        trace.points.push_back({consumed, best_min, ms_since(t0)});
    }
    ++iter;
  }
  trace.best_min_objective = best_min;
  return trace;
}

ActiveSearchResult active_search(const Instance& inst, const ParamStore& start_params,
                                 const SearchConfig& cfg) {
  if (cfg.budget < 1) throw DataError("active_search: budget must be >= 1");
  auto t0 = Clock::now();
  ActiveSearchResult out;
  out.refined = start_params;  // refined in place below
  PolicyConfig pcfg = policy_cfg_from(cfg, out.refined);
  AdamState adam = AdamState::init(out.refined, cfg.active_lr, 0, 1.0);
  EmaBaseline ema;
  ema.alpha = cfg.ema_alpha;

  Rng init_rng(Rng::derive(cfg.seed, kInitSalt));
  Solution incumbent = random_solution(inst, init_rng);
  double best_min = min_objective(inst, incumbent);
  out.trace.points.push_back({0, best_min, ms_since(t0)});

  std::uint64_t bsz = static_cast<std::uint64_t>(cfg.batch);
  std::uint64_t iters = (cfg.budget + bsz - 1) / bsz;
  std::vector<double> objectives(static_cast<size_t>(cfg.batch));
  std::uint64_t consumed = 0;
  for (std::uint64_t iter = 0; iter < iters; ++iter) {
    std::vector<int> sigma;
    Instance work = inst;
    if (cfg.shuffle) {
      Rng srng(Rng::derive(cfg.seed, kShuffleSalt + iter));
      sigma = shuffle_perm(instance_size(inst), srng);
      work = apply_perm(inst, sigma);
    }
    std::vector<std::unique_ptr<Tape>> tapes;
    std::vector<Rollout> rollouts;
    for (std::uint64_t i = 0; i < bsz; ++i) {
      tapes.push_back(std::make_unique<Tape>());
      Rng rng = sample_rng(cfg, iter, i);
      rollouts.push_back(rollout(*tapes.back(), out.refined, pcfg, work, DecodeMode::Sample,
                                 cfg.temperature, &rng));
      objectives[static_cast<size_t>(i)] = rollouts.back().objective;
      ++consumed;
      std::vector<int> indices = cfg.shuffle ? map_back(rollouts.back().choices, sigma)
                                             : rollouts.back().choices;
      Solution s = solution_from_indices(inst, indices);
      double m = min_objective(inst, s);
      if (m < best_min) {
        best_min = m;
        incumbent = s;
      }
      if (is_milestone(consumed, bsz, iters * bsz))
        out.trace.points.push_back({consumed, best_min, ms_since(t0)});
    }
    double mean_l = 0.0;
    for (double L : objectives) mean_l += L;
    mean_l /= static_cast<double>(bsz);
    double b = ema.initialized ? ema.value : mean_l;
    std::vector<double> baselines(static_cast<size_t>(bsz), b);
    reinforce_batch_gradient(rollouts, baselines);
    ema_update(ema, mean_l);
    clip_global_norm(out.refined, 1.0);
    adam_step(out.refined, adam);
    out.refined.zero_adjoints();
  }
  out.trace.best = incumbent;
  out.trace.best_min_objective = best_min;
  return out;
}

}  // namespace nco

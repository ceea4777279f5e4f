#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nco/trainer.hpp"

namespace nco {

enum class Strategy { Greedy, GreedyAtK, Sampling, ActiveSearch };

Strategy strategy_from_name(const std::string& name);
std::string strategy_name(Strategy s);

struct SearchConfig {
  Strategy strategy = Strategy::Greedy;
  std::uint64_t budget = 1;  // candidate rollouts (K); models for greedy@K
  int batch = 128;           // rollouts per iteration (sampling, active search)
  double temperature = 1.0;
  double clip_c = 10.0;
  int glimpses = 1;
  double active_lr = 1e-5;
  double ema_alpha = 0.99;
  bool shuffle = true;  // active search input permutation
  std::uint64_t seed = 1;
};

struct TracePoint {
  std::uint64_t candidates = 0;
  double best_objective = 0.0;  // minimization form
  double wall_ms = 0.0;
};

struct SearchTrace {
  std::vector<TracePoint> points;  // milestones at {B, 10B, 100B, ...} and K
  Solution best;                   // natural objective
  double best_min_objective = 0.0;
};

Solution greedy_search(const Instance& inst, ParamStore& params, const SearchConfig& cfg);

// best of one greedy rollout per checkpoint
Solution greedy_at_k(const Instance& inst, std::vector<ParamStore*> checkpoints,
                     const SearchConfig& cfg);

SearchTrace sample_search(const Instance& inst, ParamStore& params, const SearchConfig& cfg);

struct ActiveSearchResult {
  SearchTrace trace;
  ParamStore refined;
};

// Algorithm: ceil(K/B) iterations; each samples B rollouts of a shuffled
// copy of the input, keeps the incumbent in original index space, and takes
// one REINFORCE step against an EMA baseline of the sampled objectives.
ActiveSearchResult active_search(const Instance& inst, const ParamStore& start_params,
                                 const SearchConfig& cfg);

}  // namespace nco

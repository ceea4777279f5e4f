#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nco/problems.hpp"

namespace nco {

enum class Proof { Exact, Heuristic };

struct OracleResult {
  Solution solution;
  Proof proof = Proof::Heuristic;
  std::uint64_t nodes = 0;  // DP states / enumerated candidates / B&B nodes
  double wall_ms = 0.0;
};

// Thrown when branch-and-bound hits its node budget; carries the incumbent
// and the residual bound gap so callers can still report something.
struct OracleBudgetError : std::runtime_error {
  Solution incumbent;
  double bound_gap;
  OracleBudgetError(std::string msg, Solution inc, double gap)
      : std::runtime_error(std::move(msg)), incumbent(std::move(inc)), bound_gap(gap) {}
};

inline constexpr int kHeldKarpMaxN = 20;
inline constexpr int kBruteForceMaxN = 9;

// Exact TSP via dynamic programming over (visited subset, last city),
// Theta(2^n n^2). n <= 20 (the 2^n * n table).
OracleResult held_karp(const TspInstance& inst);

// Exhaustive minimum over all closed tours, n <= 9. Cross-check oracle.
OracleResult brute_force(const TspInstance& inst);

OracleResult nearest_neighbor(const TspInstance& inst, int start = 0);

// First-improvement 2-opt, lexicographic (i,j) scan with restart after each
// improving exchange. Deterministic.
OracleResult two_opt(const TspInstance& inst, const std::vector<int>& initial_tour);

// Exact 0-1 knapsack: depth-first branch and bound with the fractional
// relaxation as upper bound, items pre-sorted by value/weight ratio.
OracleResult knapsack_branch_and_bound(const KnapsackInstance& inst,
                                       std::uint64_t node_cap = 2'000'000'000ULL);

OracleResult greedy_ratio(const KnapsackInstance& inst);

// Best of K uniformly sampled feasible solutions (random permutation for
// TSP, masked random inclusion for knapsack).
OracleResult random_search(const Instance& inst, std::uint64_t k, std::uint64_t seed);

// tours compare bit-identically after canonicalization: start at city 0,
// orient so the second city has the lower index
std::vector<int> canonical_tour(const std::vector<int>& tour);

// --- oracle cache sidecar ---
struct OracleCacheRow {
  int index = 0;
  bool ok = true;
  std::string error;  // when !ok
  Proof proof = Proof::Exact;
  double objective = 0.0;
  std::vector<int> indices;
};

struct OracleCache {
  std::string algo;
  std::uint64_t dataset_hash = 0;
  std::vector<OracleCacheRow> rows;
};

void write_oracle_cache(const std::string& path, const OracleCache& cache);
OracleCache read_oracle_cache(const std::string& path);

}  // namespace nco

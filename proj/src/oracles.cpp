#include "nco/oracles.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

namespace nco {
namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::vector<double> distance_matrix(const TspInstance& inst) {
  int n = inst.size();
  std::vector<double> d(static_cast<size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double dx = inst.points[i][0] - inst.points[j][0];
      double dy = inst.points[i][1] - inst.points[j][1];
      d[static_cast<size_t>(i) * n + j] = std::sqrt(dx * dx + dy * dy);
    }
  return d;
}

}  // namespace

std::vector<int> canonical_tour(const std::vector<int>& tour) {
  int n = static_cast<int>(tour.size());
  int pos0 = static_cast<int>(std::find(tour.begin(), tour.end(), 0) - tour.begin());
  std::vector<int> t(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) t[i] = tour[static_cast<size_t>((pos0 + i) % n)];
  if (n > 2 && t[1] > t[static_cast<size_t>(n - 1)]) std::reverse(t.begin() + 1, t.end());
  return t;
}

OracleResult held_karp(const TspInstance& inst) {
  auto t0 = Clock::now();
  int n = inst.size();
  if (n < 2 || n > kHeldKarpMaxN)
    throw DataError("held_karp: n must be in [2, 20]; use two_opt for larger instances");
  auto d = distance_matrix(inst);
  if (n == 2) {
    Solution sol{Solution::Kind::Tour, {0, 1}, tour_length(inst, {0, 1})};
    return {sol, Proof::Exact, 1, ms_since(t0)};
  }
  // city 0 fixed as start; DP over subsets of 1..n-1
  int m = n - 1;
  size_t full = size_t{1} << m;
  std::vector<double> dp(full * static_cast<size_t>(m), 1e18);
  std::vector<std::uint8_t> par(full * static_cast<size_t>(m), 0);
  for (int j = 0; j < m; ++j) dp[(size_t{1} << j) * static_cast<size_t>(m) + j] = d[static_cast<size_t>(j) + 1];
  std::uint64_t states = 0;
  for (size_t mask = 1; mask < full; ++mask) {
    const size_t base = mask * static_cast<size_t>(m);
    for (std::uint64_t jb = mask; jb; jb &= jb - 1) {
      const int j = std::countr_zero(jb);
      const size_t prev = mask ^ (size_t{1} << j);
      if (prev == 0) continue;
      const size_t pbase = prev * static_cast<size_t>(m);
      const double* dj = &d[static_cast<size_t>(j + 1) * n];
      double best = 1e18;
      int bestk = 0;
      for (std::uint64_t kb = prev; kb; kb &= kb - 1) {
        const int k = std::countr_zero(kb);
        const double c = dp[pbase + k] + dj[k + 1];
        if (c < best) {
          best = c;
          bestk = k;
        }
      }
      states += static_cast<std::uint64_t>(std::popcount(prev));
      dp[base + j] = best;
      par[base + j] = static_cast<std::uint8_t>(bestk);
    }
  }
  size_t last_mask = full - 1;
  double best = 1e18;
  int bestj = 0;
  for (int j = 0; j < m; ++j) {
    double c = dp[last_mask * static_cast<size_t>(m) + j] + d[static_cast<size_t>(j + 1) * n];
    if (c < best) {
      best = c;
      bestj = j;
    }
  }
  std::vector<int> tour(static_cast<size_t>(n));
  size_t mask = last_mask;
  int j = bestj;
  for (int pos = n - 1; pos >= 1; --pos) {
    tour[static_cast<size_t>(pos)] = j + 1;
    int pj = par[mask * static_cast<size_t>(m) + j];
    mask ^= size_t{1} << j;
    j = pj;
  }
  tour[0] = 0;
  tour = canonical_tour(tour);
  Solution sol{Solution::Kind::Tour, tour, tour_length(inst, tour)};
  return {sol, Proof::Exact, states, ms_since(t0)};
}

OracleResult brute_force(const TspInstance& inst) {
  auto t0 = Clock::now();
  int n = inst.size();
  if (n < 2 || n > kBruteForceMaxN) throw DataError("brute_force: n must be in [2, 9]");
  auto d = distance_matrix(inst);
  std::vector<int> rest(static_cast<size_t>(n - 1));
  std::iota(rest.begin(), rest.end(), 1);
  std::vector<int> best_tour;
  double best = 1e18;
  std::uint64_t cands = 0;
  do {
    double len = d[static_cast<size_t>(rest[0])];
    for (int i = 0; i + 1 < n - 1; ++i)
      len += d[static_cast<size_t>(rest[static_cast<size_t>(i)]) * n + rest[static_cast<size_t>(i + 1)]];
    len += d[static_cast<size_t>(rest[static_cast<size_t>(n - 2)]) * n];
    ++cands;
    if (len < best) {
      best = len;
      best_tour = rest;
    }
  } while (std::next_permutation(rest.begin(), rest.end()));
  std::vector<int> tour{0};
  tour.insert(tour.end(), best_tour.begin(), best_tour.end());
  tour = canonical_tour(tour);
  Solution sol{Solution::Kind::Tour, tour, tour_length(inst, tour)};
  return {sol, Proof::Exact, cands, ms_since(t0)};
}

OracleResult nearest_neighbor(const TspInstance& inst, int start) {
  auto t0 = Clock::now();
  int n = inst.size();
  if (start < 0 || start >= n) throw DataError("nearest_neighbor: bad start city");
  auto d = distance_matrix(inst);
  std::vector<std::uint8_t> used(static_cast<size_t>(n), 0);
  std::vector<int> tour{start};
  used[static_cast<size_t>(start)] = 1;
  for (int step = 1; step < n; ++step) {
    int cur = tour.back();
    int best = -1;
    double bd = 1e18;
    for (int j = 0; j < n; ++j) {
      if (used[static_cast<size_t>(j)]) continue;
      double c = d[static_cast<size_t>(cur) * n + j];
      if (c < bd) {
        bd = c;
        best = j;
      }
    }
    tour.push_back(best);
    used[static_cast<size_t>(best)] = 1;
  }
  Solution sol{Solution::Kind::Tour, tour, tour_length(inst, tour)};
  return {sol, Proof::Heuristic, static_cast<std::uint64_t>(n), ms_since(t0)};
}

OracleResult two_opt(const TspInstance& inst, const std::vector<int>& initial_tour) {
  auto t0 = Clock::now();
  int n = inst.size();
  tour_length(inst, initial_tour);  // validates
  auto d = distance_matrix(inst);
  auto dd = [&](int a, int b) { return d[static_cast<size_t>(a) * n + b]; };
  std::vector<int> t = initial_tour;
  std::uint64_t moves = 0;
  bool improved = true;
  while (improved) {
    improved = false;
    for (int i = 0; i + 2 < n && !improved; ++i) {
      int jmax = (i == 0) ? n - 2 : n - 1;  // (0, n-1) would exchange the same edge pair
      for (int j = i + 2; j <= jmax; ++j) {
        int a = t[static_cast<size_t>(i)], b = t[static_cast<size_t>(i + 1)];
        int c = t[static_cast<size_t>(j)], e = t[static_cast<size_t>((j + 1) % n)];
        double delta = dd(a, c) + dd(b, e) - dd(a, b) - dd(c, e);
        if (delta < -1e-12) {
          std::reverse(t.begin() + i + 1, t.begin() + j + 1);
          ++moves;
          improved = true;
          break;
        }
      }
    }
  }
  Solution sol{Solution::Kind::Tour, t, tour_length(inst, t)};
  return {sol, Proof::Heuristic, moves, ms_since(t0)};
}

namespace {

std::vector<int> ratio_order(const KnapsackInstance& inst) {
  std::vector<int> order(static_cast<size_t>(inst.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    double ra = inst.values[static_cast<size_t>(a)] / inst.weights[static_cast<size_t>(a)];
    double rb = inst.values[static_cast<size_t>(b)] / inst.weights[static_cast<size_t>(b)];
    return ra > rb;  // stable sort keeps lower index first on ties
  });
  return order;
}

}  // namespace

OracleResult knapsack_branch_and_bound(const KnapsackInstance& inst, std::uint64_t node_cap) {
  auto t0 = Clock::now();
  int n = inst.size();
  auto order = ratio_order(inst);
  std::vector<double> w(static_cast<size_t>(n)), v(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    w[static_cast<size_t>(i)] = inst.weights[static_cast<size_t>(order[static_cast<size_t>(i)])];
    v[static_cast<size_t>(i)] = inst.values[static_cast<size_t>(order[static_cast<size_t>(i)])];
  }
  // empty set is always feasible, so the incumbent starts at value 0
  double best = 0.0;
  std::vector<std::uint8_t> taken(static_cast<size_t>(n), 0), best_taken(taken);
  std::uint64_t nodes = 0;

  // fractional relaxation over items pos..n-1 given remaining capacity
  auto bound = [&](int pos, double cap, double val) {
    for (int i = pos; i < n; ++i) {
      if (w[static_cast<size_t>(i)] <= cap) {
        cap -= w[static_cast<size_t>(i)];
        val += v[static_cast<size_t>(i)];
      } else {
        val += v[static_cast<size_t>(i)] * (cap / w[static_cast<size_t>(i)]);
        break;
      }
    }
    return val;
  };

  double final_bound_gap = 0.0;
  auto dfs = [&](auto&& self, int pos, double cap, double val) -> void {
    if (++nodes > node_cap) {
      Solution inc{Solution::Kind::ItemSet, {}, best};
      for (int i = 0; i < n; ++i)
        if (!best_taken.empty() && best_taken[static_cast<size_t>(i)])
          inc.indices.push_back(order[static_cast<size_t>(i)]);
      throw OracleBudgetError("knapsack_branch_and_bound: node budget exceeded", inc,
                              final_bound_gap);
    }
    if (pos == n) {
      if (val > best) {
        best = val;
        best_taken = taken;
      }
      return;
    }
    double ub = bound(pos, cap, val);
    final_bound_gap = std::max(final_bound_gap, ub - best);
    if (ub <= best + 1e-12) return;
    if (w[static_cast<size_t>(pos)] <= cap) {
      taken[static_cast<size_t>(pos)] = 1;
      self(self, pos + 1, cap - w[static_cast<size_t>(pos)], val + v[static_cast<size_t>(pos)]);
      taken[static_cast<size_t>(pos)] = 0;
    }
    self(self, pos + 1, cap, val);
  };
  dfs(dfs, 0, inst.capacity, 0.0);

  Solution sol{Solution::Kind::ItemSet, {}, 0.0};
  for (int i = 0; i < n; ++i)
    if (best_taken[static_cast<size_t>(i)]) sol.indices.push_back(order[static_cast<size_t>(i)]);
  std::sort(sol.indices.begin(), sol.indices.end());
  sol.objective = knapsack_value(inst, sol.indices);
  return {sol, Proof::Exact, nodes, ms_since(t0)};
}

OracleResult greedy_ratio(const KnapsackInstance& inst) {
  auto t0 = Clock::now();
  auto order = ratio_order(inst);
  double cap = inst.capacity;
  Solution sol{Solution::Kind::ItemSet, {}, 0.0};
  for (int i : order) {
    if (inst.weights[static_cast<size_t>(i)] <= cap) {
      cap -= inst.weights[static_cast<size_t>(i)];
      sol.indices.push_back(i);
    }
  }
  std::sort(sol.indices.begin(), sol.indices.end());
  sol.objective = knapsack_value(inst, sol.indices);
  return {sol, Proof::Heuristic, static_cast<std::uint64_t>(inst.size()), ms_since(t0)};
}

OracleResult random_search(const Instance& inst, std::uint64_t k, std::uint64_t seed) {
  auto t0 = Clock::now();
  if (k < 1) throw DataError("random_search: k must be >= 1");
  Rng rng(seed);
  if (const auto* tsp = std::get_if<TspInstance>(&inst)) {
    int n = tsp->size();
    std::vector<int> perm(static_cast<size_t>(n));
    Solution best;
    best.kind = Solution::Kind::Tour;
    best.objective = 1e18;
    for (std::uint64_t c = 0; c < k; ++c) {
      std::iota(perm.begin(), perm.end(), 0);
      for (int i = n - 1; i > 0; --i)
        std::swap(perm[static_cast<size_t>(i)], perm[rng.below(static_cast<std::uint64_t>(i + 1))]);
      double len = tour_length(*tsp, perm);
      if (len < best.objective) {
        best.objective = len;
        best.indices = perm;
      }
    }
    return {best, Proof::Heuristic, k, ms_since(t0)};
  }
  const auto& ks = std::get<KnapsackInstance>(inst);
  Solution best;
  best.kind = Solution::Kind::ItemSet;
  best.objective = -1.0;
  std::vector<int> sel;
  std::vector<int> feasible;
  for (std::uint64_t c = 0; c < k; ++c) {
    sel.clear();
    for (;;) {
      auto dm = knapsack_decode_mask(ks, sel);
      if (dm.done) break;
      feasible.clear();
      for (int i = 0; i < ks.size(); ++i)
        if (!dm.mask[static_cast<size_t>(i)]) feasible.push_back(i);
      sel.push_back(feasible[rng.below(feasible.size())]);
    }
    double val = knapsack_value(ks, sel);
    if (val > best.objective) {
      best.objective = val;
      best.indices = sel;
      std::sort(best.indices.begin(), best.indices.end());
    }
  }
  return {best, Proof::Heuristic, k, ms_since(t0)};
}

void write_oracle_cache(const std::string& path, const OracleCache& cache) {
  std::ostringstream os;
  os << "oracle algo=" << cache.algo << " dataset_hash=" << cache.dataset_hash
     << " count=" << cache.rows.size() << "\n";
  char buf[32];
  for (const auto& r : cache.rows) {
    os << r.index << ' ';
    if (!r.ok) {
      os << "error " << r.error << "\n";
      continue;
    }
    os << (r.proof == Proof::Exact ? "exact" : "heuristic") << ' ';
    std::snprintf(buf, sizeof buf, "%.17g", r.objective);
    os << buf;
    for (int i : r.indices) os << ' ' << i;
    os << "\n";
  }
  std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::trunc);
    if (!f) throw DataError("write_oracle_cache: cannot open " + tmp);
    f << os.str();
  }
  std::rename(tmp.c_str(), path.c_str());
}

OracleCache read_oracle_cache(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("read_oracle_cache: cannot open " + path);
  std::string header;
  if (!std::getline(f, header)) throw DataError("read_oracle_cache: empty file");
  OracleCache cache;
  std::istringstream hs(header);
  std::string tag, kv;
  hs >> tag;
  if (tag != "oracle") throw DataError("read_oracle_cache: bad header");
  size_t count = 0;
  while (hs >> kv) {
    auto eq = kv.find('=');
    std::string key = kv.substr(0, eq), val = kv.substr(eq + 1);
    if (key == "algo")
      cache.algo = val;
    else if (key == "dataset_hash")
      cache.dataset_hash = std::stoull(val);
    else if (key == "count")
      count = std::stoull(val);
  }
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    OracleCacheRow r;
    std::string status;
    ls >> r.index >> status;
    if (status == "error") {
      r.ok = false;
      std::getline(ls, r.error);
      if (!r.error.empty() && r.error.front() == ' ') r.error.erase(0, 1);
    } else {
      r.proof = status == "exact" ? Proof::Exact : Proof::Heuristic;
      ls >> r.objective;
      int idx;
      while (ls >> idx) r.indices.push_back(idx);
    }
    cache.rows.push_back(std::move(r));
  }
  if (cache.rows.size() != count) throw DataError("read_oracle_cache: row count mismatch");
  return cache;
}

}  // namespace nco

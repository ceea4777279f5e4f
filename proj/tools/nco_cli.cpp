// Command-line front end: dataset generation, training, search, evaluation,
// oracle runs with caching, tour rendering, micro-benchmarks.
//
// Exit codes: 0 success, 1 usage, 2 data error, 3 numeric failure.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "nco/checkpoint.hpp"
#include "nco/report.hpp"
#include "nco/search.hpp"
#include "nco/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

struct CommonOpts {
  std::uint64_t seed = 1;
};

std::string dataset_manifest_path(const std::string& dataset_path) {
  return dataset_path + ".manifest.json";
}

void write_manifest(const std::string& dataset_path, const nco::Dataset& ds) {
  json m{{"problem", ds.problem},
         {"n", ds.n},
         {"count", ds.instances.size()},
         {"seed", ds.seed},
         {"code_version", nco::kCodeVersion},
         {"content_hash", nco::file_hash(dataset_path)}};
  if (ds.problem == "knapsack") m["capacity"] = ds.capacity;
  nco::write_text_file(dataset_manifest_path(dataset_path), m.dump(2) + "\n");
}

int cmd_generate(const std::string& problem, int n, int count, std::uint64_t seed, double capacity,
                 const std::string& out, bool overwrite) {
  if (count <= 0) throw nco::DataError("generate: count must be >= 1");
  if (fs::exists(out) && !overwrite)
    throw nco::DataError("generate: " + out + " exists (use --overwrite)");
  nco::Dataset ds = nco::make_dataset(problem, n, count, seed, capacity);
  nco::write_dataset(out, ds);
  write_manifest(out, ds);
  std::cout << "wrote " << out << " (" << ds.instances.size() << " " << problem << n
            << " instances)\n";
  return kExitOk;
}

std::string oracle_algo_for(const nco::Dataset& ds, std::string requested) {
  if (!requested.empty()) return requested;
  if (ds.problem == "tsp") return ds.n <= nco::kHeldKarpMaxN ? "held_karp" : "two_opt";
  return "branch_and_bound";
}

nco::OracleCacheRow run_oracle_one(const std::string& algo, const nco::Instance& inst, int idx,
                                   std::uint64_t seed) {
  nco::OracleCacheRow row;
  row.index = idx;
  try {
    nco::OracleResult res;
    if (algo == "held_karp") {
      res = nco::held_karp(std::get<nco::TspInstance>(inst));
    } else if (algo == "brute_force") {
      res = nco::brute_force(std::get<nco::TspInstance>(inst));
    } else if (algo == "two_opt") {
      const auto& tsp = std::get<nco::TspInstance>(inst);
      res = nco::two_opt(tsp, nco::nearest_neighbor(tsp).solution.indices);
    } else if (algo == "branch_and_bound") {
      res = nco::knapsack_branch_and_bound(std::get<nco::KnapsackInstance>(inst));
    } else if (algo == "greedy_ratio") {
      res = nco::greedy_ratio(std::get<nco::KnapsackInstance>(inst));
    } else if (algo == "random_search") {
      res = nco::random_search(inst, 1000, nco::Rng::derive(seed, static_cast<std::uint64_t>(idx)));
    } else {
      throw nco::DataError("oracle: unknown algorithm " + algo);
    }
    row.proof = res.proof;
    row.objective = res.solution.objective;
    row.indices = res.solution.indices;
  } catch (const nco::DataError& e) {
    row.ok = false;
    row.error = e.what();
  } catch (const nco::OracleBudgetError& e) {
    row.ok = false;
    row.error = e.what();
  }
  return row;
}

std::string oracle_cache_path(const std::string& dataset_path, const std::string& algo) {
  return dataset_path + "." + algo + ".oracle";
}

nco::OracleCache ensure_oracle_cache(const std::string& dataset_path, const nco::Dataset& ds,
                                     const std::string& algo, std::uint64_t seed, bool* was_cached) {
  std::string path = oracle_cache_path(dataset_path, algo);
  std::uint64_t hash = nco::file_hash(dataset_path);
  if (fs::exists(path)) {
    nco::OracleCache cache = nco::read_oracle_cache(path);
    if (cache.dataset_hash != hash)
      throw nco::DataError("oracle: cache " + path + " was built for a different dataset");
    if (was_cached) *was_cached = true;
    return cache;
  }
  nco::OracleCache cache;
  cache.algo = algo;
  cache.dataset_hash = hash;
  for (size_t i = 0; i < ds.instances.size(); ++i)
    cache.rows.push_back(run_oracle_one(algo, ds.instances[i], static_cast<int>(i), seed));
  nco::write_oracle_cache(path, cache);
  if (was_cached) *was_cached = false;
  return cache;
}

int cmd_oracle(const std::string& dataset_path, std::string algo, std::uint64_t seed) {
  nco::Dataset ds = nco::read_dataset(dataset_path);
  algo = oracle_algo_for(ds, algo);
  bool cached = false;
  auto t0 = std::chrono::steady_clock::now();
  nco::OracleCache cache = ensure_oracle_cache(dataset_path, ds, algo, seed, &cached);
  double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  size_t ok = 0;
  double sum = 0.0;
  for (const auto& r : cache.rows)
    if (r.ok) {
      ++ok;
      sum += r.objective;
    }
  std::cout << (cached ? "cache hit: " : "computed: ") << oracle_cache_path(dataset_path, algo)
            << "\n"
            << "algo=" << algo << " ok=" << ok << "/" << cache.rows.size()
            << " mean_objective=" << (ok ? sum / static_cast<double>(ok) : 0.0) << " wall_ms=" << ms
            << "\n";
  return kExitOk;
}

nco::ParamStore load_actor(const std::string& path) {
  return nco::load_checkpoint(path).params;
}

int cmd_train(nco::TrainConfig cfg, const std::string& resume, const std::string& mode) {
  fs::create_directories(cfg.out_dir);
  if (mode == "actor-critic") {
    nco::actor_critic_train(cfg, nullptr, resume);
  } else {
    throw nco::DataError("train: unknown mode " + mode);
  }
  std::cout << "trained " << cfg.steps << " steps; outputs in " << cfg.out_dir << "\n";
  return kExitOk;
}

struct EvalInputs {
  nco::Dataset ds;
  std::vector<nco::ParamStore> checkpoints;
  nco::SearchConfig scfg;
  std::string out_dir;
  std::string oracle_algo;  // "" = none
  int limit = 0;            // 0 = all instances
  std::uint64_t seed = 1;
};

int cmd_eval(EvalInputs& in, const std::string& dataset_path) {
  bool maximize = in.ds.problem == "knapsack";
  std::vector<std::optional<double>> optima(in.ds.instances.size());
  std::vector<bool> certified(in.ds.instances.size(), false);
  if (!in.oracle_algo.empty()) {
    nco::OracleCache cache =
        ensure_oracle_cache(dataset_path, in.ds, in.oracle_algo, in.seed, nullptr);
    for (const auto& r : cache.rows)
      if (r.ok) {
        optima[static_cast<size_t>(r.index)] = r.objective;
        certified[static_cast<size_t>(r.index)] = r.proof == nco::Proof::Exact;
      }
  }
  size_t count = in.limit > 0 ? std::min<size_t>(in.ds.instances.size(), static_cast<size_t>(in.limit))
                              : in.ds.instances.size();
  nco::EvalReport report;
  report.config_hash = std::to_string(nco::bytes_hash(
      strategy_name(in.scfg.strategy) + "|" + std::to_string(in.scfg.budget) + "|" +
      std::to_string(in.scfg.temperature) + "|" + std::to_string(in.scfg.seed)));
  for (size_t i = 0; i < count; ++i) {
    const nco::Instance& inst = in.ds.instances[i];
    nco::SearchConfig scfg = in.scfg;
    scfg.seed = nco::Rng::derive(in.scfg.seed, i);
    auto t0 = std::chrono::steady_clock::now();
    nco::Solution sol;
    switch (scfg.strategy) {
      case nco::Strategy::Greedy:
        sol = nco::greedy_search(inst, in.checkpoints[0], scfg);
        break;
      case nco::Strategy::GreedyAtK: {
        std::vector<nco::ParamStore*> cks;
        for (auto& c : in.checkpoints) cks.push_back(&c);
        sol = nco::greedy_at_k(inst, cks, scfg);
        break;
      }
      case nco::Strategy::Sampling:
        sol = nco::sample_search(inst, in.checkpoints[0], scfg).best;
        break;
      case nco::Strategy::ActiveSearch:
        sol = nco::active_search(inst, in.checkpoints[0], scfg).trace.best;
        break;
    }
    double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    nco::EvalRow row;
    row.instance_id = static_cast<int>(i);
    row.strategy = strategy_name(scfg.strategy);
    row.budget = scfg.strategy == nco::Strategy::Greedy ? 1 : scfg.budget;
    row.objective = sol.objective;
    row.wall_ms = ms;
    if (optima[i]) {
      row.optimal = *optima[i];
      row.ratio = nco::optimality_ratio(maximize, row.objective, *optima[i]);
    }
    report.rows.push_back(row);
  }
  report.finalize();
  fs::create_directories(in.out_dir);
  nco::write_eval_csv(in.out_dir + "/per_instance.csv", report);
  nco::write_sorted_ratios_csv(in.out_dir + "/sorted_ratios.csv", report);
  nco::write_aggregate_json(in.out_dir + "/aggregate.json", report);
  std::cout << "eval: " << count << " instances, mean_objective=" << report.mean_objective;
  if (report.mean_ratio) std::cout << " mean_ratio=" << *report.mean_ratio;
  std::cout << "\noutputs in " << in.out_dir << "\n";
  return kExitOk;
}

int cmd_render(const std::string& dataset_path, int index, const std::string& tour_str,
               const std::string& out) {
  nco::Dataset ds = nco::read_dataset(dataset_path);
  if (index < 0 || index >= static_cast<int>(ds.instances.size()))
    throw nco::DataError("render: instance index out of range");
  const auto* tsp = std::get_if<nco::TspInstance>(&ds.instances[static_cast<size_t>(index)]);
  if (!tsp) throw nco::DataError("render: only TSP solutions can be rendered");
  std::vector<int> tour;
  std::stringstream ss(tour_str);
  std::string tok;
  while (std::getline(ss, tok, ',')) tour.push_back(std::stoi(tok));
  nco::write_text_file(out, nco::render_tour_svg(*tsp, tour));
  std::cout << "wrote " << out << "\n";
  return kExitOk;
}

int cmd_bench(std::uint64_t seed) {
  using Clock = std::chrono::steady_clock;
  std::cout << "component,work,wall_ms\n";
  {
    auto insts = nco::generate_tsp(20, 50, seed);
    auto t0 = Clock::now();
    double acc = 0;
    for (const auto& i : insts) acc += nco::held_karp(i).solution.objective;
    std::printf("held_karp,50xTSP20,%.1f\n",
                std::chrono::duration<double, std::milli>(Clock::now() - t0).count());
    (void)acc;
  }
  {
    nco::ParamStore store;
    nco::PolicyConfig pcfg{64, 2, 10.0, 1};
    nco::add_policy_params(store, pcfg);
    nco::Rng rng(seed);
    nco::init_uniform(store, -0.08, 0.08, rng);
    auto insts = nco::generate_tsp(20, 64, seed);
    auto t0 = Clock::now();
    for (const auto& i : insts) {
      nco::Tape tape;
      nco::Rng r2(1);
      auto ro = nco::rollout(tape, store, pcfg, i, nco::DecodeMode::Sample, 1.0, &r2);
      tape.backward(ro.total_logp, 1.0);
    }
    std::printf("rollout+backward,64xTSP20 d=64,%.1f\n",
                std::chrono::duration<double, std::milli>(Clock::now() - t0).count());
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"neural combinatorial optimization workbench"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "write a dataset file + manifest");
  std::string g_problem = "tsp", g_out;
  int g_n = 20, g_count = 1000;
  double g_capacity = 0.0;
  std::uint64_t g_seed = 1;
  bool g_overwrite = false;
  gen->add_option("--problem", g_problem)->check(CLI::IsMember({"tsp", "knapsack"}));
  gen->add_option("-n,--size", g_n);
  gen->add_option("--count", g_count);
  gen->add_option("--seed", g_seed)->required();
  gen->add_option("--capacity", g_capacity);
  gen->add_option("--out", g_out)->required();
  gen->add_flag("--overwrite", g_overwrite);

  // train
  auto* tr = app.add_subcommand("train", "actor-critic policy-gradient training");
  nco::TrainConfig tcfg;
  std::string t_resume, t_mode = "actor-critic", t_preset;
  tr->set_config("--config");
  tr->add_option("--preset", t_preset,
                 "rl-greedy | rl-sampling | rl-as | as (named configuration bundles)");
  tr->add_option("--problem", tcfg.problem.problem)->check(CLI::IsMember({"tsp", "knapsack"}));
  tr->add_option("-n,--size", tcfg.problem.n);
  tr->add_option("--capacity", tcfg.problem.capacity);
  tr->add_option("--steps", tcfg.steps);
  tr->add_option("--batch", tcfg.batch);
  tr->add_option("--hidden", tcfg.hidden);
  tr->add_option("--lr", tcfg.lr_policy);
  tr->add_option("--lr-critic", tcfg.lr_critic);
  tr->add_option("--decay-interval", tcfg.decay_interval);
  tr->add_option("--decay-factor", tcfg.decay_factor);
  tr->add_option("--glimpses", tcfg.glimpses);
  tr->add_option("--clip-c", tcfg.clip_c);
  tr->add_option("--max-grad-norm", tcfg.max_grad_norm);
  tr->add_option("--baseline", tcfg.baseline)->check(CLI::IsMember({"critic", "ema"}));
  tr->add_option("--alpha", tcfg.ema_alpha);
  tr->add_option("--seed", tcfg.seed)->required();
  tr->add_option("--out", tcfg.out_dir)->required();
  tr->add_option("--checkpoint-interval", tcfg.checkpoint_interval);
  tr->add_option("--resume", t_resume, "checkpoint prefix (e.g. out/ckpt_step100)");

  // search / eval share most options
  auto add_search_opts = [](CLI::App* cmd, std::string& dataset, std::vector<std::string>& ckpts,
                            std::string& strategy, nco::SearchConfig& scfg) {
    cmd->add_option("--dataset", dataset)->required();
    cmd->add_option("--checkpoint", ckpts)->required();
    cmd->add_option("--strategy", strategy)
        ->check(CLI::IsMember({"greedy", "greedy_at_k", "sampling", "active_search"}));
    cmd->add_option("--budget", scfg.budget);
    cmd->add_option("--batch", scfg.batch);
    cmd->add_option("-T,--temperature", scfg.temperature);
    cmd->add_option("--clip-c", scfg.clip_c);
    cmd->add_option("--glimpses", scfg.glimpses);
    cmd->add_option("--active-lr", scfg.active_lr);
    cmd->add_option("--alpha", scfg.ema_alpha);
    cmd->add_option("--no-shuffle", scfg.shuffle)->transform(CLI::Validator());
    cmd->add_option("--seed", scfg.seed)->required();
  };

  auto* se = app.add_subcommand("search", "run one strategy over a dataset, emit trace CSVs");
  std::string s_dataset, s_strategy = "sampling", s_out;
  std::vector<std::string> s_ckpts;
  nco::SearchConfig s_scfg;
  int s_limit = 0;
  add_search_opts(se, s_dataset, s_ckpts, s_strategy, s_scfg);
  se->add_option("--out", s_out)->required();
  se->add_option("--limit", s_limit);

  auto* ev = app.add_subcommand("eval", "evaluate a strategy against an oracle reference");
  std::string e_dataset, e_strategy = "greedy", e_out, e_oracle;
  std::vector<std::string> e_ckpts;
  nco::SearchConfig e_scfg;
  int e_limit = 0;
  add_search_opts(ev, e_dataset, e_ckpts, e_strategy, e_scfg);
  ev->add_option("--out", e_out)->required();
  ev->add_option("--oracle", e_oracle, "oracle algorithm for the reference column");
  ev->add_option("--limit", e_limit);

  // oracle
  auto* orc = app.add_subcommand("oracle", "run an exact/heuristic oracle over a dataset, cached");
  std::string o_dataset, o_algo;
  std::uint64_t o_seed = 1;
  orc->add_option("--dataset", o_dataset)->required();
  orc->add_option("--algo", o_algo,
                  "held_karp | brute_force | two_opt | branch_and_bound | greedy_ratio | random_search");
  orc->add_option("--seed", o_seed);

  // render
  auto* re = app.add_subcommand("render", "draw a tour as SVG");
  std::string r_dataset, r_tour, r_out;
  int r_index = 0;
  re->add_option("--dataset", r_dataset)->required();
  re->add_option("--index", r_index);
  re->add_option("--tour", r_tour)->required();
  re->add_option("--out", r_out)->required();

  auto* be = app.add_subcommand("bench", "micro-benchmarks");
  std::uint64_t b_seed = 1;
  be->add_option("--seed", b_seed);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) return cmd_generate(g_problem, g_n, g_count, g_seed, g_capacity, g_out, g_overwrite);
    if (*tr) {
      // Presets adjust defaults; explicit flags already parsed win
      if (t_preset == "as") tcfg.baseline = "ema";
      return cmd_train(tcfg, t_resume, t_mode);
    }
    if (*orc) return cmd_oracle(o_dataset, o_algo, o_seed);
    if (*re) return cmd_render(r_dataset, r_index, r_tour, r_out);
    if (*be) return cmd_bench(b_seed);
    if (*se || *ev) {
      bool is_eval = static_cast<bool>(*ev);
      EvalInputs in;
      std::string dataset = is_eval ? e_dataset : s_dataset;
      in.ds = nco::read_dataset(dataset);
      in.scfg = is_eval ? e_scfg : s_scfg;
      in.scfg.strategy = nco::strategy_from_name(is_eval ? e_strategy : s_strategy);
      in.out_dir = is_eval ? e_out : s_out;
      in.oracle_algo = is_eval ? e_oracle : "";
      in.limit = is_eval ? e_limit : s_limit;
      in.seed = in.scfg.seed;
      for (const auto& c : (is_eval ? e_ckpts : s_ckpts)) in.checkpoints.push_back(load_actor(c));
      if (in.scfg.strategy == nco::Strategy::GreedyAtK &&
          in.checkpoints.size() != static_cast<size_t>(in.scfg.budget) && in.scfg.budget != 1)
        in.scfg.budget = in.checkpoints.size();
      if (is_eval && in.oracle_algo.empty()) {
        in.oracle_algo = oracle_algo_for(in.ds, "");
      }
      if (!is_eval) {
        // search: emit per-instance traces
        size_t count = in.limit > 0
                           ? std::min<size_t>(in.ds.instances.size(), static_cast<size_t>(in.limit))
                           : in.ds.instances.size();
        fs::create_directories(in.out_dir);
        for (size_t i = 0; i < count; ++i) {
          nco::SearchConfig scfg = in.scfg;
          scfg.seed = nco::Rng::derive(in.scfg.seed, i);
          nco::SearchTrace trace;
          if (scfg.strategy == nco::Strategy::ActiveSearch)
            trace = nco::active_search(in.ds.instances[i], in.checkpoints[0], scfg).trace;
          else if (scfg.strategy == nco::Strategy::Sampling)
            trace = nco::sample_search(in.ds.instances[i], in.checkpoints[0], scfg);
          else
            throw nco::DataError("search: use eval for greedy strategies");
          nco::write_trace_csv(in.out_dir + "/trace_" + std::to_string(i) + ".csv",
                               static_cast<int>(i), strategy_name(scfg.strategy), trace,
                               std::to_string(scfg.seed));
        }
        std::cout << "traces in " << in.out_dir << "\n";
        return kExitOk;
      }
      return cmd_eval(in, dataset);
    }
    return kExitUsage;
  } catch (const nco::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const nco::DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
}

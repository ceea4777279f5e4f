#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nco/oracles.hpp"
#include "nco/search.hpp"

namespace nco {

inline constexpr const char* kCodeVersion = "0.1.0";

struct EvalRow {
  int instance_id = 0;
  std::string strategy;
  std::uint64_t budget = 0;
  double objective = 0.0;             // natural objective
  std::optional<double> optimal;      // certified or reference value
  std::optional<double> ratio;        // >= 1 when reference is a certified optimum
  double wall_ms = 0.0;
};

struct EvalReport {
  std::vector<EvalRow> rows;
  double mean_objective = 0.0;
  std::optional<double> mean_optimal;
  std::optional<double> mean_ratio;
  std::vector<double> sorted_ratios;  // the sorted ratio-to-optimality curve
  std::string config_hash;

  void finalize();  // aggregates from rows
};

// ratio to optimality: objective/optimal for minimization (TSP),
// optimal/objective for maximization (knapsack)
double optimality_ratio(bool maximize, double objective, double optimal);

void write_eval_csv(const std::string& path, const EvalReport& report);
void write_sorted_ratios_csv(const std::string& path, const EvalReport& report);
void write_aggregate_json(const std::string& path, const EvalReport& report);

void write_trace_csv(const std::string& path, int instance_id, const std::string& strategy,
                     const SearchTrace& trace, const std::string& config_hash);

// Deterministic SVG: unit-square viewport, cities as circles, the tour as a
// closed polyline, caption with the length. TSP only.
std::string render_tour_svg(const TspInstance& inst, const std::vector<int>& tour);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace nco

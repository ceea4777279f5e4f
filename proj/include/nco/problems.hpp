#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "nco/rng.hpp"

namespace nco {

struct TspInstance {
  std::vector<std::array<double, 2>> points;  // coordinates in [0,1]^2
  int size() const { return static_cast<int>(points.size()); }
};

struct KnapsackInstance {
  std::vector<double> weights;  // in [0,1]
  std::vector<double> values;   // in [0,1]
  double capacity = 0.0;
  int size() const { return static_cast<int>(weights.size()); }
};

using Instance = std::variant<TspInstance, KnapsackInstance>;

int instance_size(const Instance& inst);
// rows fed to the embedding: (x, y) for TSP, (w, v) for knapsack
std::vector<std::array<double, 2>> instance_rows(const Instance& inst);

struct Solution {
  enum class Kind { Tour, ItemSet };
  Kind kind = Kind::Tour;
  std::vector<int> indices;  // permutation of 0..n-1, or selected items in pick order
  double objective = 0.0;    // tour length, or total knapsack value
};

struct DataError : std::runtime_error {
  explicit DataError(const std::string& m) : std::runtime_error(m) {}
};

// Closed-tour length: consecutive Euclidean distances plus the edge back to
// the start. Throws DataError when tour is not a permutation of 0..n-1.
double tour_length(const TspInstance& inst, const std::vector<int>& tour);

// Σ values of the selected items. Throws DataError on duplicates or when the
// total weight exceeds capacity.
double knapsack_value(const KnapsackInstance& inst, const std::vector<int>& item_set);

std::vector<TspInstance> generate_tsp(int n, int count, std::uint64_t seed);

// capacity <= 0 selects the default: 12.5 for n=50, 25 for n in {100,200},
// n/4 otherwise
double default_knapsack_capacity(int n);
std::vector<KnapsackInstance> generate_knapsack(int n, int count, std::uint64_t seed,
                                                double capacity = 0.0);

struct DecodeMask {
  std::vector<std::uint8_t> mask;  // 1 = not selectable
  bool done = false;
};

// Masks already-selected items and items that would overflow the remaining
// capacity; done when everything is masked.
DecodeMask knapsack_decode_mask(const KnapsackInstance& inst, const std::vector<int>& selected);

// --- dataset files ---
// Text format, one instance per line, self-describing header line, 17
// significant digits so doubles round-trip exactly.
struct Dataset {
  std::string problem;  // "tsp" | "knapsack"
  int n = 0;
  std::uint64_t seed = 0;
  double capacity = 0.0;  // knapsack only
  std::vector<Instance> instances;
};

void write_dataset(const std::string& path, const Dataset& ds);
Dataset read_dataset(const std::string& path);

Dataset make_dataset(const std::string& problem, int n, int count, std::uint64_t seed,
                     double capacity = 0.0);

// FNV-1a over the file bytes; keys oracle caches and manifests.
std::uint64_t file_hash(const std::string& path);
std::uint64_t bytes_hash(const std::string& bytes);

}  // namespace nco

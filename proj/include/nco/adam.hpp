#pragma once

#include <cstdint>
#include <vector>

#include "nco/params.hpp"

namespace nco {

// Adam with bias correction and stepwise learning-rate decay
// (lr = base * factor^floor(step / interval)).
struct AdamState {
  double base_lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::int64_t decay_interval = 5000;
  double decay_factor = 0.96;
  std::int64_t step = 0;

  // index-aligned with ParamStore entry order
  std::vector<Tensor> m;
  std::vector<Tensor> v;

  static AdamState init(const ParamStore& store, double base_lr,
                        std::int64_t decay_interval = 5000, double decay_factor = 0.96);

  // lr in effect for the *next* step
  double effective_lr() const;
};

// One Adam update from the store's adjoints; increments state.step.
void adam_step(ParamStore& store, AdamState& state);

}  // namespace nco

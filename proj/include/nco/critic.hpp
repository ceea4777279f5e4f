#pragma once

#include <span>

#include "nco/policy.hpp"

namespace nco {

struct CriticConfig {
  int d = 64;
  int input_dim = 2;
  int process_steps = 3;
};

// Parameter layout under prefix "critic": input embedding, encoder LSTM,
// one glimpse parameter set shared across the process steps, and the
// two-layer decoder (d -> d ReLU, d -> 1).
void add_critic_params(ParamStore& store, const CriticConfig& cfg);

// Baseline prediction: encode the instance, refine the final hidden state by
// P unmasked glimpses over the encoder outputs, decode to a scalar.
Val critic_forward(Tape& tape, ParamStore& store, const CriticConfig& cfg, const Instance& inst);

// (1/B) sum (b_i - L_i)^2 as plain numbers, for reporting
double critic_loss(std::span<const double> predictions, std::span<const double> observed);

}  // namespace nco

#pragma once

#include <optional>
#include <span>
#include <vector>

#include "nco/nets.hpp"
#include "nco/problems.hpp"
#include "nco/tape.hpp"

namespace nco {

inline constexpr double kMaskSentinel = -1e9;

struct PolicyConfig {
  int d = 64;
  int input_dim = 2;
  double clip_c = 10.0;  // <= 0 disables logit clipping
  int glimpses = 1;      // 0 or 1
};

// Parameter layout under prefix "actor": shared input embedding, encoder and
// decoder LSTMs, trainable start token, pointing and glimpse attention
// parameter sets (W_ref, W_q [d,d]; v [d] each).
void add_policy_params(ParamStore& store, const PolicyConfig& cfg);

std::vector<Val> embed_rows(TapeBind& p, const std::string& embed_name,
                            std::span<const std::array<double, 2>> rows);

struct Encoded {
  std::vector<Val> enc;  // hidden vector per input position
  Val refs;              // the same vectors stacked, [n,d]
  LstmState final_state;
};

Encoded encode_sequence(TapeBind& p, const std::string& lstm_prefix, std::span<const Val> embedded);

// u_i = v . tanh(W_ref r_i + W_q q), then optional C tanh(u) clipping, then
// masked entries forced to the sentinel. `prefix` selects the parameter set
// ("actor/point" or "actor/glimpse" or "critic/glimpse").
Val attention_logits(TapeBind& p, const std::string& prefix, Val refs, Val q,
                     std::span<const std::uint8_t> mask, std::optional<double> clip_c);

// same, with W_ref r_i precomputed once per rollout
Val attention_logits_pre(TapeBind& p, const std::string& prefix, Val proj, Val q,
                         std::span<const std::uint8_t> mask, std::optional<double> clip_c);

// probability-weighted combination of the reference vectors (no temperature,
// no clipping; the mask still applies)
Val glimpse(TapeBind& p, const std::string& prefix, Val refs, Val q,
            std::span<const std::uint8_t> mask);
Val glimpse_pre(TapeBind& p, const std::string& prefix, Val refs, Val proj, Val q,
                std::span<const std::uint8_t> mask);

struct DecodeContext {
  Val refs;
  Val proj_point;    // W_ref-projected refs for the pointing set
  Val proj_glimpse;  // and for the glimpse set (invalid when glimpses == 0)
  LstmState state;
  std::vector<std::uint8_t> visited;
  int step = 0;
};

struct DecodeStepOut {
  Val probs;       // distribution over positions, masked entries exactly 0
  Val logits_t;    // masked clipped logits already divided by T
  LstmState state; // decoder state after consuming x
};

// One decoder step: advance the LSTM on input x, refine the query with one
// glimpse, point, temper, softmax.
DecodeStepOut decode_step(TapeBind& p, const PolicyConfig& cfg, DecodeContext& ctx, Val x,
                          double temperature);

enum class DecodeMode { Greedy, Sample, Forced };

struct Rollout {
  std::vector<int> choices;
  std::vector<double> step_logp;
  double total_logp_value = 0.0;
  Val total_logp;          // on the rollout's tape
  double objective = 0.0;  // minimization form: tour length, or -knapsack value
  Tape* tape = nullptr;
};

// Full decode: the encoder's final state seeds the decoder, the start token
// is the first input, each chosen element's embedding feeds the next step.
// TSP visits every city exactly once; knapsack stops when nothing fits.
Rollout rollout(Tape& tape, ParamStore& store, const PolicyConfig& cfg, const Instance& inst,
                DecodeMode mode, double temperature, Rng* rng,
                const std::vector<int>* forced = nullptr);

// natural-objective solution for a finished rollout
Solution rollout_solution(const Instance& inst, const Rollout& r);

}  // namespace nco

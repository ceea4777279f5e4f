#pragma once

#include <string>
#include <unordered_map>

#include "nco/params.hpp"
#include "nco/tape.hpp"

namespace nco {

// Binds a ParamStore to a tape, caching one leaf per parameter so repeated
// lookups within a forward pass share a node (and adjoints accumulate once).
class TapeBind {
 public:
  TapeBind(Tape& tape, ParamStore& store) : tape_(tape), store_(store) {}

  Val operator[](const std::string& name) {
    auto it = cache_.find(name);
    if (it != cache_.end()) return it->second;
    auto& e = store_.entry(name);
    Val v = tape_.leaf(e.value, &e.adjoint);
    cache_.emplace(name, v);
    return v;
  }

  Tape& tape() { return tape_; }
  ParamStore& store() { return store_; }

 private:
  Tape& tape_;
  ParamStore& store_;
  std::unordered_map<std::string, Val> cache_;
};

struct LstmState {
  Val h;
  Val c;
};

// Single-layer LSTM with per-gate weight matrices under `prefix`:
//   Wx_{i,f,g,o} [d,in], Wh_{i,f,g,o} [d,d], b_{i,f,g,o} [d]
void add_lstm_params(ParamStore& store, const std::string& prefix, int d, int input_dim);

// Overwrites the forget-gate bias after random init; 1.0 is the usual value.
void set_forget_bias(ParamStore& store, const std::string& prefix, double value);

LstmState lstm_step(TapeBind& p, const std::string& prefix, Val x, LstmState s);

LstmState lstm_zero_state(Tape& tape, int d);

// affine layer params: W [out,in], b [out]
void add_affine_params(ParamStore& store, const std::string& prefix, int out, int in);
Val affine(TapeBind& p, const std::string& prefix, Val x);

}  // namespace nco

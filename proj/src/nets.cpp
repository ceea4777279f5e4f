#include "nco/nets.hpp"

namespace nco {

void add_lstm_params(ParamStore& store, const std::string& prefix, int d, int input_dim) {
  for (const char* g : {"i", "f", "g", "o"}) {
    store.add(prefix + "/Wx_" + g, Tensor::zeros({d, input_dim}));
    store.add(prefix + "/Wh_" + g, Tensor::zeros({d, d}));
    store.add(prefix + "/b_" + g, Tensor::zeros({d}));
  }
}

void set_forget_bias(ParamStore& store, const std::string& prefix, double value) {
  for (double& x : store.value(prefix + "/b_f").data) x = value;
}

LstmState lstm_step(TapeBind& p, const std::string& prefix, Val x, LstmState s) {
  Tape& t = p.tape();
  auto gate = [&](const char* g) {
    return t.add(t.add(t.matvec(p[prefix + "/Wx_" + g], x), t.matvec(p[prefix + "/Wh_" + g], s.h)),
                 p[prefix + "/b_" + g]);
  };
  Val i = t.sigmoid_op(gate("i"));
  Val f = t.sigmoid_op(gate("f"));
  Val g = t.tanh_op(gate("g"));
  Val o = t.sigmoid_op(gate("o"));
  Val c = t.add(t.mul(f, s.c), t.mul(i, g));
  Val h = t.mul(o, t.tanh_op(c));
  return {h, c};
}

LstmState lstm_zero_state(Tape& tape, int d) {
  return {tape.input(Tensor::zeros({d})), tape.input(Tensor::zeros({d}))};
}

void add_affine_params(ParamStore& store, const std::string& prefix, int out, int in) {
  store.add(prefix + "/W", Tensor::zeros({out, in}));
  store.add(prefix + "/b", Tensor::zeros({out}));
}

Val affine(TapeBind& p, const std::string& prefix, Val x) {
  Tape& t = p.tape();
  return t.add(t.matvec(p[prefix + "/W"], x), p[prefix + "/b"]);
}

}  // namespace nco

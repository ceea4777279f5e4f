#include "nco/critic.hpp"

namespace nco {

void add_critic_params(ParamStore& store, const CriticConfig& cfg) {
  int d = cfg.d;
  store.add("critic/embed", Tensor::zeros({d, cfg.input_dim}));
  add_lstm_params(store, "critic/enc", d, d);
  store.add("critic/glimpse/Wref", Tensor::zeros({d, d}));
  store.add("critic/glimpse/Wq", Tensor::zeros({d, d}));
  store.add("critic/glimpse/v", Tensor::zeros({d}));
  add_affine_params(store, "critic/fc1", d, d);
  add_affine_params(store, "critic/fc2", 1, d);
}

Val critic_forward(Tape& tape, ParamStore& store, const CriticConfig& cfg, const Instance& inst) {
  int n = instance_size(inst);
  if (n < 1) throw DataError("critic_forward: empty instance");
  if (cfg.process_steps < 0) throw DataError("critic_forward: process_steps must be >= 0");
  TapeBind p(tape, store);
  auto rows = instance_rows(inst);
  std::vector<Val> emb = embed_rows(p, "critic/embed", rows);
  Encoded enc = encode_sequence(p, "critic/enc", emb);
  std::vector<std::uint8_t> no_mask(static_cast<size_t>(n), 0);
  Val proj = tape.map_matvec(p["critic/glimpse/Wref"], enc.refs);
  Val h = enc.final_state.h;
  for (int step = 0; step < cfg.process_steps; ++step)
    h = glimpse_pre(p, "critic/glimpse", enc.refs, proj, h, no_mask);
  Val hidden = tape.relu_op(affine(p, "critic/fc1", h));
  return affine(p, "critic/fc2", hidden);
}

double critic_loss(std::span<const double> predictions, std::span<const double> observed) {
  if (predictions.size() != observed.size())
    throw DataError("critic_loss: batch size mismatch");
  if (predictions.empty()) throw DataError("critic_loss: empty batch");
  double acc = 0.0;
  for (size_t i = 0; i < predictions.size(); ++i) {
    double d = predictions[i] - observed[i];
    acc += d * d;
  }
  return acc / static_cast<double>(predictions.size());
}

}  // namespace nco

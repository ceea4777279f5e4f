#include "nco/params.hpp"

#include <cmath>
#include <cstdint>

#include "nco/adam.hpp"

namespace nco {

void init_uniform(ParamStore& store, double lo, double hi, Rng& rng) {
  if (!(lo < hi)) throw std::invalid_argument("init_uniform: lo must be < hi");
  for (auto& e : store.entries())
    for (double& x : e.value.data) x = rng.uniform(lo, hi);
}

void init_network(ParamStore& store, double vec_range, Rng& rng) {
  // Glorot-uniform for weight matrices, small uniform for vectors/biases.
  // Uniform-everywhere at +-0.08 starves deep nets of input signal: the
  // coordinate pathway decays below the noise floor and training stalls.
  for (auto& e : store.entries()) {
    double r = vec_range;
    if (e.value.rank() == 2)
      r = std::sqrt(6.0 / static_cast<double>(e.value.rows() + e.value.cols()));
    for (double& x : e.value.data) x = rng.uniform(-r, r);
  }
}

double global_grad_norm(const ParamStore& store) {
  double sq = 0.0;
  for (const auto& e : store.entries())
    for (double x : e.adjoint.data) sq += x * x;
  return std::sqrt(sq);
}

double clip_global_norm(ParamStore& store, double max_norm) {
  if (!(max_norm > 0.0)) throw std::invalid_argument("clip_global_norm: max_norm must be > 0");
  double norm = global_grad_norm(store);
  if (norm <= max_norm || norm == 0.0) return 1.0;
  double scale = max_norm / norm;
  for (auto& e : store.entries())
    for (double& x : e.adjoint.data) x *= scale;
  return scale;
}

AdamState AdamState::init(const ParamStore& store, double base_lr, std::int64_t decay_interval,
                          double decay_factor) {
  AdamState s;
  s.base_lr = base_lr;
  s.decay_interval = decay_interval;
  s.decay_factor = decay_factor;
  for (const auto& e : store.entries()) {
    s.m.push_back(Tensor::zeros(e.value.shape));
    s.v.push_back(Tensor::zeros(e.value.shape));
  }
  return s;
}

double AdamState::effective_lr() const {
  auto epochs = decay_interval > 0 ? step / decay_interval : 0;
  return base_lr * std::pow(decay_factor, static_cast<double>(epochs));
}

void adam_step(ParamStore& store, AdamState& state) {
  auto& entries = store.entries();
  if (state.m.size() != entries.size())
    throw std::invalid_argument("adam_step: state not initialized for this store");
  state.step += 1;
  double lr = state.effective_lr();
  double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (size_t p = 0; p < entries.size(); ++p) {
    auto& e = entries[p];
    auto& m = state.m[p].data;
    auto& v = state.v[p].data;
    for (size_t i = 0; i < e.value.data.size(); ++i) {
      double g = e.adjoint.data[i];
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g;
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g * g;
      double mhat = m[i] / bc1;
      double vhat = v[i] / bc2;
      e.value.data[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
}

}  // namespace nco

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "nco/tensor.hpp"

namespace nco {

// Reverse-mode gradient tape over a fixed op vocabulary. One tape per
// forward pass, confined to one thread. Parameters enter as leaves whose
// adjoints live in external storage (ParamStore entries), so repeated
// backward calls accumulate.
class Tape {
 public:
  struct Val {
    int id = -1;
    bool valid() const { return id >= 0; }
  };

  // When false, ops still compute values but record no backward closures.
  bool grad_enabled = true;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  const Tensor& val(Val v) const { return recs_[static_cast<size_t>(v.id)].value; }
  size_t node_count() const { return recs_.size(); }

  // constant: participates in forward only
  Val input(Tensor t);
  // leaf: value is copied in, gradient accumulates into *adjoint
  Val leaf(const Tensor& value, Tensor* adjoint);

  // --- elementwise / scalar ---
  Val add(Val a, Val b);
  Val sub(Val a, Val b);
  Val mul(Val a, Val b);
  Val scale(Val a, double c);
  Val add_n(std::span<const Val> xs);
  Val tanh_op(Val a);
  Val sigmoid_op(Val a);
  Val relu_op(Val a);
  Val log_op(Val a);
  Val exp_op(Val a);

  // --- linear algebra ---
  Val matvec(Val w, Val x);                    // [m,n]·[n] -> [m]
  Val map_matvec(Val w, Val rows);             // out_i = W·rows_i : [d,d],[n,d] -> [n,d]
  Val dot(Val a, Val b);                       // [n]·[n] -> [1]
  Val sum(Val a);                              // -> [1]
  Val mean(Val a);                             // -> [1]
  Val stack_rows(std::span<const Val> rows);   // k vectors [d] -> [k,d]
  Val vecmat(Val p, Val rows);                 // Σ_i p_i · rows_i : [n],[n,d] -> [d]

  // --- attention / softmax ---
  // u_i = v · tanh(proj_i + q) for proj [n,d], q [d], v [d] -> [n]
  Val pointer_scores(Val proj, Val q, Val v);
  Val softmax(Val logits);
  Val log_softmax(Val logits);
  // out_i = mask_i ? sentinel : x_i; gradient flows only through unmasked
  Val mask_fill(Val x, std::span<const std::uint8_t> mask, double sentinel);
  Val pick(Val x, int index);                  // [n] -> [1]

  // Seeds d(loss)/d(loss) = seed and propagates to every reachable leaf.
  // Accumulates into leaf adjoints; call reset_grads() between unrelated
  // passes on the same tape.
  void backward(Val loss, double seed = 1.0);

  void reset_grads();
  void clear();

 private:
  struct Rec {
    Tensor value;
    std::function<void()> back;  // empty for constants
    Tensor grad;                 // lazily sized during backward
  };
  std::vector<Rec> recs_;

  Val push(Tensor value, std::function<void()> back = {});
  Tensor& grad_of(int id);
  const Tensor& v(int id) const { return recs_[static_cast<size_t>(id)].value; }
  bool has_grad(int id) const { return !recs_[static_cast<size_t>(id)].grad.data.empty(); }
};

using Val = Tape::Val;

}  // namespace nco

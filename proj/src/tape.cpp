#include "nco/tape.hpp"

#include <cmath>
#include <cstdio>

namespace nco {

bool Tensor::all_finite() const {
  for (double x : data)
    if (!std::isfinite(x)) return false;
  return true;
}

std::string Tensor::shape_str() const {
  std::string s = "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

ShapeError shape_error(const std::string& op, const Tensor& a, const Tensor& b) {
  return ShapeError(op + ": incompatible shapes " + a.shape_str() + " and " + b.shape_str());
}
ShapeError shape_error(const std::string& op, const Tensor& a) {
  return ShapeError(op + ": bad shape " + a.shape_str());
}

Val Tape::push(Tensor value, std::function<void()> back) {
  recs_.push_back(Rec{std::move(value), grad_enabled ? std::move(back) : std::function<void()>{}, Tensor{}});
  return Val{static_cast<int>(recs_.size()) - 1};
}

Tensor& Tape::grad_of(int id) {
  Rec& r = recs_[static_cast<size_t>(id)];
  if (r.grad.data.empty()) r.grad = Tensor::zeros(r.value.shape);
  return r.grad;
}

Val Tape::input(Tensor t) { return push(std::move(t)); }

Val Tape::leaf(const Tensor& value, Tensor* adjoint) {
  Val out = push(value);
  if (!grad_enabled || adjoint == nullptr) return out;
  int id = out.id;
  recs_.back().back = [this, id, adjoint] {
    const Tensor& g = grad_of(id);
    for (size_t i = 0; i < g.data.size(); ++i) adjoint->data[i] += g.data[i];
  };
  return out;
}

Val Tape::add(Val a, Val b) {
  const Tensor &ta = v(a.id), &tb = v(b.id);
  if (!ta.same_shape(tb)) throw shape_error("add", ta, tb);
  Tensor out = ta;
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += tb.data[i];
  Val r = push(std::move(out));
  int o = r.id;
  recs_.back().back = [this, o, a, b] {
    const Tensor& g = recs_[static_cast<size_t>(o)].grad;
    Tensor &ga = grad_of(a.id), &gb = grad_of(b.id);
    for (size_t i = 0; i < g.data.size(); ++i) {
      ga.data[i] += g.data[i];
      gb.data[i] += g.data[i];
    }
  };
  return r;
}

Val Tape::sub(Val a, Val b) {
  const Tensor &ta = v(a.id), &tb = v(b.id);
  if (!ta.same_shape(tb)) throw shape_error("sub", ta, tb);
  Tensor out = ta;
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] -= tb.data[i];
  Val r = push(std::move(out));
  int o = r.id;
  recs_.back().back = [this, o, a, b] {
    const Tensor& g = recs_[static_cast<size_t>(o)].grad;
    Tensor &ga = grad_of(a.id), &gb = grad_of(b.id);
    for (size_t i = 0; i < g.data.size(); ++i) {
      ga.data[i] += g.data[i];
      gb.data[i] -= g.data[i];
    }
  };
  return r;
}

Val Tape::mul(Val a, Val b) {
  const Tensor &ta = v(a.id), &tb = v(b.id);
  if (!ta.same_shape(tb)) throw shape_error("mul", ta, tb);
  Tensor out = ta;
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] *= tb.data[i];
  Val r = push(std::move(out));
  int o = r.id;
  recs_.back().back = [this, o, a, b] {
    const Tensor& g = recs_[static_cast<size_t>(o)].grad;
    const Tensor &ta2 = v(a.id), &tb2 = v(b.id);
    Tensor &ga = grad_of(a.id), &gb = grad_of(b.id);
    for (size_t i = 0; i < g.data.size(); ++i) {
      ga.data[i] += g.data[i] * tb2.data[i];
      gb.data[i] += g.data[i] * ta2.data[i];
    }
  };
  return r;
}

Val Tape::scale(Val a, double c) {
  Tensor out = v(a.id);
  for (double& x : out.data) x *= c;
  Val r = push(std::move(out));
  int o = r.id;
  recs_.back().back = [this, o, a, c] {
    const Tensor& g = recs_[static_cast<size_t>(o)].grad;
    Tensor& ga = grad_of(a.id);
    for (size_t i = 0; i < g.data.size(); ++i) ga.data[i] += c * g.data[i];
  };
  return r;
}

Val Tape::add_n(std::span<const Val> xs) {
  if (xs.empty()) throw std::invalid_argument("add_n: empty operand list");
  Tensor out = v(xs[0].id);
  for (size_t k = 1; k < xs.size(); ++k) {
    const Tensor& t = v(xs[k].id);
    if (!t.same_shape(out)) throw shape_error("add_n", out, t);
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += t.data[i];
  }
  Val r = push(std::move(out));
  int o = r.id;
  std::vector<Val> ops(xs.begin(), xs.end());
  recs_.back().back = [this, o, ops] {
    const Tensor& g = recs_[static_cast<size_t>(o)].grad;
    for (Val x : ops) {
      Tensor& gx = grad_of(x.id);
      for (size_t i = 0; i < g.data.size(); ++i) gx.data[i] += g.data[i];
    }
  };
  return r;
}

Val Tape::tanh_op(Val a) {
  Tensor out = v(a.id);
  for (double& x : out.data) x = std::tanh(x);
  Val r = push(std::move(out));
  int o = r.id;
  recs_.back().back = [this, o, a] {
    const Tensor& g = recs_[static_cast<size_t>(o)].grad;
    const Tensor& y = v(o);
    Tensor& ga = grad_of(a.id);
    for (size_t i = 0; i < g.data.size(); ++i) ga.data[i] += g.data[i] * (1.0 - y.data[i] * y.data[i]);
  };
  return r;
}

Val Tape::sigmoid_op(Val a) {
  Tensor out = v(a.id);
  for (double& x : out.data) x = 1.0 / (1.0 + std::exp(-x));
  Val r = push(std::move(out));
  int o = r.id;
  recs_.back().back = [this, o, a] {
    const Tensor& g = recs_[static_cast<size_t>(o)].grad;
    const Tensor& y = v(o);
    Tensor& ga = grad_of(a.id);
    for (size_t i = 0; i < g.data.size(); ++i) ga.data[i] += g.data[i] * y.data[i] * (1.0 - y.data[i]);
  };
  return r;
}

Val Tape::relu_op(Val a) {
  Tensor out = v(a.id);
  for (double& x : out.data) x = x > 0.0 ? x : 0.0;
  Val r = push(std::move(out));
  int o = r.id;
  recs_.back().back = [this, o, a] {
    const Tensor& g = recs_[static_cast<size_t>(o)].grad;
    const Tensor& x = v(a.id);
    Tensor& ga = grad_of(a.id);
    for (size_t i = 0; i < g.data.size(); ++i)
      if (x.data[i] > 0.0) ga.data[i] += g.data[i];
  };
  return r;
}

Val Tape::log_op(Val a) {
  Tensor out = v(a.id);
  for (double& x : out.data) x = std::log(x);
  Val r = push(std::move(out));
  int o = r.id;
  recs_.back().back = [this, o, a] {
    const Tensor& g = recs_[static_cast<size_t>(o)].grad;
    const Tensor& x = v(a.id);
    Tensor& ga = grad_of(a.id);
    for (size_t i = 0; i < g.data.size(); ++i) ga.data[i] += g.data[i] / x.data[i];
  };
  return r;
}

Val Tape::exp_op(Val a) {
  Tensor out = v(a.id);
  for (double& x : out.data) x = std::exp(x);
  Val r = push(std::move(out));
  int o = r.id;
  recs_.back().back = [this, o, a] {
    const Tensor& g = recs_[static_cast<size_t>(o)].grad;
    const Tensor& y = v(o);
    Tensor& ga = grad_of(a.id);
    for (size_t i = 0; i < g.data.size(); ++i) ga.data[i] += g.data[i] * y.data[i];
  };
  return r;
}

Val Tape::matvec(Val w, Val x) {
  const Tensor &tw = v(w.id), &tx = v(x.id);
  if (tw.rank() != 2 || tx.rank() != 1 || tw.cols() != tx.rows()) throw shape_error("matvec", tw, tx);
  int m = tw.rows(), n = tw.cols();
  Tensor out = Tensor::zeros({m});
  for (int i = 0; i < m; ++i) {
    const double* row = &tw.data[static_cast<size_t>(i) * n];
    double acc = 0.0;
    for (int j = 0; j < n; ++j) acc += row[j] * tx.data[static_cast<size_t>(j)];
    out.data[static_cast<size_t>(i)] = acc;
  }
  Val r = push(std::move(out));
  int o = r.id;
  recs_.back().back = [this, o, w, x, m, n] {
    const Tensor& g = recs_[static_cast<size_t>(o)].grad;
    const Tensor &tw2 = v(w.id), &tx2 = v(x.id);
    Tensor &gw = grad_of(w.id), &gx = grad_of(x.id);
    for (int i = 0; i < m; ++i) {
      double gi = g.data[static_cast<size_t>(i)];
      if (gi == 0.0) continue;
      double* gwrow = &gw.data[static_cast<size_t>(i) * n];
      const double* wrow = &tw2.data[static_cast<size_t>(i) * n];
      for (int j = 0; j < n; ++j) {
        gwrow[j] += gi * tx2.data[static_cast<size_t>(j)];
        gx.data[static_cast<size_t>(j)] += gi * wrow[j];
      }
    }
  };
  return r;
}

Val Tape::map_matvec(Val w, Val rows) {
  const Tensor &tw = v(w.id), &tr = v(rows.id);
  if (tw.rank() != 2 || tr.rank() != 2 || tw.cols() != tr.cols()) throw shape_error("map_matvec", tw, tr);
  int k = tr.rows(), d = tw.cols(), m = tw.rows();
  Tensor out = Tensor::zeros({k, m});
  for (int i = 0; i < k; ++i) {
    const double* ri = &tr.data[static_cast<size_t>(i) * d];
    double* oi = &out.data[static_cast<size_t>(i) * m];
    for (int a = 0; a < m; ++a) {
      const double* wrow = &tw.data[static_cast<size_t>(a) * d];
      double acc = 0.0;
      for (int j = 0; j < d; ++j) acc += wrow[j] * ri[j];
      oi[a] = acc;
    }
  }
  Val r = push(std::move(out));
  int o = r.id;
  recs_.back().back = [this, o, w, rows, k, d, m] {
    const Tensor& g = recs_[static_cast<size_t>(o)].grad;
    const Tensor &tw2 = v(w.id), &tr2 = v(rows.id);
    Tensor &gw = grad_of(w.id), &gr = grad_of(rows.id);
    for (int i = 0; i < k; ++i) {
      const double* gi = &g.data[static_cast<size_t>(i) * m];
      const double* ri = &tr2.data[static_cast<size_t>(i) * d];
      double* gri = &gr.data[static_cast<size_t>(i) * d];
      for (int a = 0; a < m; ++a) {
        double ga = gi[a];
        if (ga == 0.0) continue;
        double* gwrow = &gw.data[static_cast<size_t>(a) * d];
        const double* wrow = &tw2.data[static_cast<size_t>(a) * d];
        for (int j = 0; j < d; ++j) {
          gwrow[j] += ga * ri[j];
          gri[j] += ga * wrow[j];
        }
      }
    }
  };
  return r;
}

Val Tape::dot(Val a, Val b) {
  const Tensor &ta = v(a.id), &tb = v(b.id);
  if (!ta.same_shape(tb) || ta.rank() != 1) throw shape_error("dot", ta, tb);
  double acc = 0.0;
  for (size_t i = 0; i < ta.data.size(); ++i) acc += ta.data[i] * tb.data[i];
  Val r = push(Tensor::scalar(acc));
  int o = r.id;
  recs_.back().back = [this, o, a, b] {
    double g = recs_[static_cast<size_t>(o)].grad.data[0];
    const Tensor &ta2 = v(a.id), &tb2 = v(b.id);
    Tensor &ga = grad_of(a.id), &gb = grad_of(b.id);
    for (size_t i = 0; i < ta2.data.size(); ++i) {
      ga.data[i] += g * tb2.data[i];
      gb.data[i] += g * ta2.data[i];
    }
  };
  return r;
}

Val Tape::sum(Val a) {
  const Tensor& ta = v(a.id);
  double acc = 0.0;
  for (double x : ta.data) acc += x;
  Val r = push(Tensor::scalar(acc));
  int o = r.id;
  recs_.back().back = [this, o, a] {
    double g = recs_[static_cast<size_t>(o)].grad.data[0];
    Tensor& ga = grad_of(a.id);
    for (double& x : ga.data) x += g;
  };
  return r;
}

Val Tape::mean(Val a) {
  const Tensor& ta = v(a.id);
  if (ta.size() == 0) throw shape_error("mean", ta);
  return scale(sum(a), 1.0 / static_cast<double>(ta.size()));
}

Val Tape::stack_rows(std::span<const Val> rows) {
  if (rows.empty()) throw std::invalid_argument("stack_rows: empty row list");
  int d = v(rows[0].id).rows();
  int k = static_cast<int>(rows.size());
  Tensor out = Tensor::zeros({k, d});
  for (int i = 0; i < k; ++i) {
    const Tensor& ri = v(rows[static_cast<size_t>(i)].id);
    if (ri.rank() != 1 || ri.rows() != d) throw shape_error("stack_rows", ri);
    for (int j = 0; j < d; ++j) out.at(i, j) = ri.at(j);
  }
  Val r = push(std::move(out));
  int o = r.id;
  std::vector<Val> rs(rows.begin(), rows.end());
  recs_.back().back = [this, o, rs, d] {
    const Tensor& g = recs_[static_cast<size_t>(o)].grad;
    for (int i = 0; i < static_cast<int>(rs.size()); ++i) {
      Tensor& gr = grad_of(rs[static_cast<size_t>(i)].id);
      for (int j = 0; j < d; ++j) gr.at(j) += g.at(i, j);
    }
  };
  return r;
}

Val Tape::vecmat(Val p, Val rows) {
  const Tensor &tp = v(p.id), &tr = v(rows.id);
  if (tp.rank() != 1 || tr.rank() != 2 || tp.rows() != tr.rows()) throw shape_error("vecmat", tp, tr);
  int k = tr.rows(), d = tr.cols();
  Tensor out = Tensor::zeros({d});
  for (int i = 0; i < k; ++i) {
    double pi = tp.at(i);
    if (pi == 0.0) continue;
    const double* ri = &tr.data[static_cast<size_t>(i) * d];
    for (int j = 0; j < d; ++j) out.data[static_cast<size_t>(j)] += pi * ri[j];
  }
  Val r = push(std::move(out));
  int o = r.id;
  recs_.back().back = [this, o, p, rows, k, d] {
    const Tensor& g = recs_[static_cast<size_t>(o)].grad;
    const Tensor &tp2 = v(p.id), &tr2 = v(rows.id);
    Tensor &gp = grad_of(p.id), &gr = grad_of(rows.id);
    for (int i = 0; i < k; ++i) {
      const double* ri = &tr2.data[static_cast<size_t>(i) * d];
      double* gri = &gr.data[static_cast<size_t>(i) * d];
      double pi = tp2.at(i);
      double acc = 0.0;
      for (int j = 0; j < d; ++j) {
        acc += ri[j] * g.data[static_cast<size_t>(j)];
        gri[j] += pi * g.data[static_cast<size_t>(j)];
      }
      gp.data[static_cast<size_t>(i)] += acc;
    }
  };
  return r;
}

Val Tape::pointer_scores(Val proj, Val q, Val vparam) {
  const Tensor &tp = v(proj.id), &tq = v(q.id), &tv = v(vparam.id);
  if (tp.rank() != 2 || tq.rank() != 1 || tv.rank() != 1 || tp.cols() != tq.rows() || tq.rows() != tv.rows())
    throw shape_error("pointer_scores", tp, tq);
  int k = tp.rows(), d = tp.cols();
  Tensor out = Tensor::zeros({k});
  for (int i = 0; i < k; ++i) {
    const double* pi = &tp.data[static_cast<size_t>(i) * d];
    double acc = 0.0;
    for (int j = 0; j < d; ++j) acc += tv.at(j) * std::tanh(pi[j] + tq.at(j));
    out.at(i) = acc;
  }
  Val r = push(std::move(out));
  int o = r.id;
  recs_.back().back = [this, o, proj, q, vparam, k, d] {
    const Tensor& g = recs_[static_cast<size_t>(o)].grad;
    const Tensor &tp2 = v(proj.id), &tq2 = v(q.id), &tv2 = v(vparam.id);
    Tensor &gp = grad_of(proj.id), &gq = grad_of(q.id), &gv = grad_of(vparam.id);
    for (int i = 0; i < k; ++i) {
      double gi = g.at(i);
      if (gi == 0.0) continue;
      const double* pi = &tp2.data[static_cast<size_t>(i) * d];
      double* gpi = &gp.data[static_cast<size_t>(i) * d];
      for (int j = 0; j < d; ++j) {
        double t = std::tanh(pi[j] + tq2.at(j));
        gv.at(j) += gi * t;
        double dt = gi * tv2.at(j) * (1.0 - t * t);
        gpi[j] += dt;
        gq.at(j) += dt;
      }
    }
  };
  return r;
}

Val Tape::softmax(Val logits) {
  const Tensor& tl = v(logits.id);
  if (tl.rank() != 1) throw shape_error("softmax", tl);
  Tensor out = tl;
  double mx = out.data[0];
  for (double x : out.data) mx = std::max(mx, x);
  double z = 0.0;
  for (double& x : out.data) {
    x = std::exp(x - mx);
    z += x;
  }
  for (double& x : out.data) x /= z;
  Val r = push(std::move(out));
  int o = r.id;
  recs_.back().back = [this, o, logits] {
    const Tensor& g = recs_[static_cast<size_t>(o)].grad;
    const Tensor& y = v(o);
    Tensor& gl = grad_of(logits.id);
    double gy = 0.0;
    for (size_t i = 0; i < g.data.size(); ++i) gy += g.data[i] * y.data[i];
    for (size_t i = 0; i < g.data.size(); ++i) gl.data[i] += y.data[i] * (g.data[i] - gy);
  };
  return r;
}

Val Tape::log_softmax(Val logits) {
  const Tensor& tl = v(logits.id);
  if (tl.rank() != 1) throw shape_error("log_softmax", tl);
  Tensor out = tl;
  double mx = out.data[0];
  for (double x : out.data) mx = std::max(mx, x);
  double z = 0.0;
  for (double x : out.data) z += std::exp(x - mx);
  double lz = mx + std::log(z);
  for (double& x : out.data) x -= lz;
  Val r = push(std::move(out));
  int o = r.id;
  recs_.back().back = [this, o, logits] {
    const Tensor& g = recs_[static_cast<size_t>(o)].grad;
    const Tensor& y = v(o);
    Tensor& gl = grad_of(logits.id);
    double gsum = 0.0;
    for (double gi : g.data) gsum += gi;
    for (size_t i = 0; i < g.data.size(); ++i) gl.data[i] += g.data[i] - std::exp(y.data[i]) * gsum;
  };
  return r;
}

Val Tape::mask_fill(Val x, std::span<const std::uint8_t> mask, double sentinel) {
  const Tensor& tx = v(x.id);
  if (tx.rank() != 1 || tx.size() != static_cast<std::int64_t>(mask.size())) throw shape_error("mask_fill", tx);
  Tensor out = tx;
  for (size_t i = 0; i < out.data.size(); ++i)
    if (mask[i]) out.data[i] = sentinel;
  Val r = push(std::move(out));
  int o = r.id;
  std::vector<std::uint8_t> m(mask.begin(), mask.end());
  recs_.back().back = [this, o, x, m] {
    const Tensor& g = recs_[static_cast<size_t>(o)].grad;
    Tensor& gx = grad_of(x.id);
    for (size_t i = 0; i < g.data.size(); ++i)
      if (!m[i]) gx.data[i] += g.data[i];
  };
  return r;
}

Val Tape::pick(Val x, int index) {
  const Tensor& tx = v(x.id);
  if (tx.rank() != 1 || index < 0 || index >= tx.rows()) throw shape_error("pick", tx);
  Val r = push(Tensor::scalar(tx.at(index)));
  int o = r.id;
  recs_.back().back = [this, o, x, index] {
    grad_of(x.id).at(index) += recs_[static_cast<size_t>(o)].grad.data[0];
  };
  return r;
}

void Tape::backward(Val loss, double seed) {
  if (!loss.valid() || loss.id >= static_cast<int>(recs_.size()))
    throw std::invalid_argument("backward: invalid loss value");
  if (!v(loss.id).is_scalar()) throw ShapeError("backward: loss must be a scalar, got " + v(loss.id).shape_str());
  grad_of(loss.id).data[0] += seed;
  for (int i = loss.id; i >= 0; --i) {
    Rec& r = recs_[static_cast<size_t>(i)];
    if (r.grad.data.empty() || !r.back) continue;  // unreachable or constant
    r.back();
  }
  // grads are consumed; drop them so a later backward on this tape starts clean
  for (Rec& r : recs_) r.grad = Tensor{};
}

void Tape::reset_grads() {
  for (Rec& r : recs_) r.grad = Tensor{};
}

void Tape::clear() { recs_.clear(); }

}  // namespace nco

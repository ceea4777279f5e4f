#include "nco/policy.hpp"

#include <algorithm>
#include <cmath>

namespace nco {

void add_policy_params(ParamStore& store, const PolicyConfig& cfg) {
  int d = cfg.d;
  store.add("actor/embed", Tensor::zeros({d, cfg.input_dim}));
  add_lstm_params(store, "actor/enc", d, d);
  add_lstm_params(store, "actor/dec", d, d);
  store.add("actor/start", Tensor::zeros({d}));
  for (const char* set : {"point", "glimpse"}) {
    store.add(std::string("actor/") + set + "/Wref", Tensor::zeros({d, d}));
    store.add(std::string("actor/") + set + "/Wq", Tensor::zeros({d, d}));
    store.add(std::string("actor/") + set + "/v", Tensor::zeros({d}));
  }
}

std::vector<Val> embed_rows(TapeBind& p, const std::string& embed_name,
                            std::span<const std::array<double, 2>> rows) {
  Tape& t = p.tape();
  Val e = p[embed_name];
  std::vector<Val> out;
  out.reserve(rows.size());
  for (const auto& r : rows)
    out.push_back(t.matvec(e, t.input(Tensor({2}, {r[0], r[1]}))));
  return out;
}

Encoded encode_sequence(TapeBind& p, const std::string& lstm_prefix, std::span<const Val> embedded) {
  if (embedded.empty()) throw DataError("encode_sequence: empty input sequence");
  Tape& t = p.tape();
  int d = t.val(embedded[0]).rows();
  LstmState s = lstm_zero_state(t, d);
  Encoded out;
  out.enc.reserve(embedded.size());
  for (Val x : embedded) {
    s = lstm_step(p, lstm_prefix, x, s);
    out.enc.push_back(s.h);
  }
  out.refs = t.stack_rows(out.enc);
  out.final_state = s;
  return out;
}

namespace {
void check_mask(std::span<const std::uint8_t> mask, size_t k) {
  if (mask.size() != k) throw ShapeError("attention: mask size does not match reference count");
  bool any = false;
  for (auto m : mask) any |= (m == 0);
  if (!any) throw DataError("attention: all positions masked");
}
}  // namespace

Val attention_logits_pre(TapeBind& p, const std::string& prefix, Val proj, Val q,
                         std::span<const std::uint8_t> mask, std::optional<double> clip_c) {
  Tape& t = p.tape();
  check_mask(mask, static_cast<size_t>(t.val(proj).rows()));
  Val qp = t.matvec(p[prefix + "/Wq"], q);
  Val u = t.pointer_scores(proj, qp, p[prefix + "/v"]);
  if (clip_c && *clip_c > 0.0) u = t.scale(t.tanh_op(u), *clip_c);
  return t.mask_fill(u, mask, kMaskSentinel);
}

Val attention_logits(TapeBind& p, const std::string& prefix, Val refs, Val q,
                     std::span<const std::uint8_t> mask, std::optional<double> clip_c) {
  Val proj = p.tape().map_matvec(p[prefix + "/Wref"], refs);
  return attention_logits_pre(p, prefix, proj, q, mask, clip_c);
}

Val glimpse_pre(TapeBind& p, const std::string& prefix, Val refs, Val proj, Val q,
                std::span<const std::uint8_t> mask) {
  Tape& t = p.tape();
  Val u = attention_logits_pre(p, prefix, proj, q, mask, std::nullopt);
  return t.vecmat(t.softmax(u), refs);
}

Val glimpse(TapeBind& p, const std::string& prefix, Val refs, Val q,
            std::span<const std::uint8_t> mask) {
  Val proj = p.tape().map_matvec(p[prefix + "/Wref"], refs);
  return glimpse_pre(p, prefix, refs, proj, q, mask);
}

DecodeStepOut decode_step(TapeBind& p, const PolicyConfig& cfg, DecodeContext& ctx, Val x,
                          double temperature) {
  if (!(temperature > 0.0)) throw DataError("decode_step: temperature must be > 0");
  Tape& t = p.tape();
  ctx.state = lstm_step(p, "actor/dec", x, ctx.state);
  Val q = ctx.state.h;
  if (cfg.glimpses > 0)
    q = glimpse_pre(p, "actor/glimpse", ctx.refs, ctx.proj_glimpse, q, ctx.visited);
  Val logits = attention_logits_pre(p, "actor/point", ctx.proj_point, q, ctx.visited,
                                    cfg.clip_c > 0.0 ? std::optional<double>(cfg.clip_c)
                                                     : std::nullopt);
  Val logits_t = temperature == 1.0 ? logits : t.scale(logits, 1.0 / temperature);
  DecodeStepOut out{t.softmax(logits_t), logits_t, ctx.state};
  ++ctx.step;
  return out;
}

namespace {

int choose(const Tensor& probs, DecodeMode mode, Rng* rng, const std::vector<int>* forced,
           int step, std::span<const std::uint8_t> mask) {
  switch (mode) {
    case DecodeMode::Greedy: {
      int best = -1;
      double bp = -1.0;
      for (int i = 0; i < probs.rows(); ++i)
        if (probs.at(i) > bp) {  // strict: ties fall to the lowest index
          bp = probs.at(i);
          best = i;
        }
      return best;
    }
    case DecodeMode::Sample:
      if (!rng) throw DataError("rollout: sampling requires an rng");
      return rng->categorical(probs.data);
    case DecodeMode::Forced: {
      if (!forced || step >= static_cast<int>(forced->size()))
        throw DataError("rollout: forced sequence too short");
      int c = (*forced)[static_cast<size_t>(step)];
      if (c < 0 || c >= probs.rows() || mask[static_cast<size_t>(c)])
        throw DataError("rollout: forced choice is masked or out of range");
      return c;
    }
  }
  throw DataError("rollout: bad decode mode");
}

}  // namespace

Rollout rollout(Tape& tape, ParamStore& store, const PolicyConfig& cfg, const Instance& inst,
                DecodeMode mode, double temperature, Rng* rng, const std::vector<int>* forced) {
  int n = instance_size(inst);
  if (n < 1) throw DataError("rollout: empty instance");
  TapeBind p(tape, store);
  auto rows = instance_rows(inst);
  std::vector<Val> emb = embed_rows(p, "actor/embed", rows);
  Encoded enc = encode_sequence(p, "actor/enc", emb);

  DecodeContext ctx;
  ctx.refs = enc.refs;
  ctx.proj_point = tape.map_matvec(p["actor/point/Wref"], enc.refs);
  if (cfg.glimpses > 0) ctx.proj_glimpse = tape.map_matvec(p["actor/glimpse/Wref"], enc.refs);
  ctx.state = enc.final_state;
  ctx.visited.assign(static_cast<size_t>(n), 0);

  const auto* ks = std::get_if<KnapsackInstance>(&inst);
  bool done = false;
  if (ks) {
    auto dm = knapsack_decode_mask(*ks, {});
    ctx.visited = dm.mask;
    done = dm.done;
  }

  Rollout r;
  r.tape = &tape;
  Val x = p["actor/start"];
  std::vector<Val> step_logps;
  while (!done) {
    auto step = decode_step(p, cfg, ctx, x, temperature);
    int c = choose(tape.val(step.probs), mode, rng, forced, ctx.step - 1, ctx.visited);
    Val logp = tape.pick(tape.log_softmax(step.logits_t), c);
    step_logps.push_back(logp);
    r.choices.push_back(c);
    r.step_logp.push_back(tape.val(logp).at(0));
    x = emb[static_cast<size_t>(c)];
    if (ks) {
      auto dm = knapsack_decode_mask(*ks, r.choices);
      ctx.visited = dm.mask;
      done = dm.done;
    } else {
      ctx.visited[static_cast<size_t>(c)] = 1;
      done = ctx.step >= n;
    }
  }
  if (!step_logps.empty()) {
    r.total_logp = tape.add_n(step_logps);
    r.total_logp_value = tape.val(r.total_logp).at(0);
  } else {
    r.total_logp = tape.input(Tensor::scalar(0.0));
  }
  if (ks) {
    r.objective = -knapsack_value(*ks, r.choices);
  } else {
    r.objective = tour_length(std::get<TspInstance>(inst), r.choices);
  }
  return r;
}

Solution rollout_solution(const Instance& inst, const Rollout& r) {
  Solution s;
  if (std::holds_alternative<TspInstance>(inst)) {
    s.kind = Solution::Kind::Tour;
    s.indices = r.choices;
    s.objective = r.objective;
  } else {
    s.kind = Solution::Kind::ItemSet;
    s.indices = r.choices;
    s.objective = -r.objective;
  }
  return s;
}

}  // namespace nco

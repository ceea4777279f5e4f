#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "nco/critic.hpp"
#include "test_util.hpp"

using namespace nco;

namespace {
ParamStore make_store(const CriticConfig& cfg, std::uint64_t seed) {
  ParamStore store;
  add_critic_params(store, cfg);
  Rng rng(seed);
  init_uniform(store, -0.08, 0.08, rng);
  return store;
}
}  // namespace

TEST_CASE("critic emits one finite scalar per instance, deterministically") {
  CriticConfig cfg{16, 2, 3};
  auto store = make_store(cfg, 3);
  auto inst = generate_tsp(9, 1, 5)[0];
  Tape t1, t2;
  t1.grad_enabled = t2.grad_enabled = false;
  Val b1 = critic_forward(t1, store, cfg, Instance{inst});
  Val b2 = critic_forward(t2, store, cfg, Instance{inst});
  REQUIRE(t1.val(b1).size() == 1);
  CHECK(std::isfinite(t1.val(b1).data[0]));
  CHECK(t1.val(b1).data[0] == t2.val(b2).data[0]);
}

TEST_CASE("critic responds to its input") {
  CriticConfig cfg{16, 2, 3};
  auto store = make_store(cfg, 4);
  auto a = generate_tsp(9, 1, 6)[0];
  auto b = generate_tsp(9, 1, 7)[0];
  Tape tape;
  tape.grad_enabled = false;
  double ba = tape.val(critic_forward(tape, store, cfg, Instance{a})).data[0];
  double bb = tape.val(critic_forward(tape, store, cfg, Instance{b})).data[0];
  CHECK(ba != bb);
}

TEST_CASE("process block with identical references returns that reference for any query") {
  // the critic's refinement is attention-weighted averaging, so when all
  // encoder outputs coincide the average is the common vector regardless of
  // attention weights
  CriticConfig cfg{8, 2, 3};
  auto store = make_store(cfg, 5);
  Tape tape;
  TapeBind p(tape, store);
  Rng rng(2);
  Tensor common = test::random_tensor({8}, rng);
  std::vector<Val> rows(6, tape.input(common));
  Val refs = tape.stack_rows(rows);
  std::vector<std::uint8_t> mask(6, 0);
  for (int trial = 0; trial < 5; ++trial) {
    Val q = tape.input(test::random_tensor({8}, rng));
    Val g = glimpse(p, "critic/glimpse", refs, q, mask);
    for (int j = 0; j < 8; ++j)
      CHECK(tape.val(g).data[static_cast<size_t>(j)] ==
            doctest::Approx(common.data[static_cast<size_t>(j)]).epsilon(1e-12));
  }
}

TEST_CASE("mean squared baseline error: examples") {
  std::vector<double> pred = {1.0, 2.0};
  std::vector<double> obs = {2.0, 4.0};
  CHECK(critic_loss(pred, obs) == doctest::Approx(2.5).epsilon(1e-15));  // (1 + 4)/2
  std::vector<double> same = {3.0, 3.0};
  CHECK(critic_loss(same, same) == 0.0);
  std::vector<double> empty;
  CHECK_THROWS(critic_loss(empty, empty));
  std::vector<double> three = {1.0, 2.0, 3.0};
  CHECK_THROWS(critic_loss(pred, three));
}

TEST_CASE("critic gradient matches finite differences (d=8, n=5)") {
  CriticConfig cfg{8, 2, 2};
  auto store = make_store(cfg, 6);
  auto inst = generate_tsp(5, 1, 8)[0];
  auto loss_fn = [&](ParamStore& s, bool do_backward) {
    Tape tape;
    tape.grad_enabled = do_backward;
    Val b = critic_forward(tape, s, cfg, Instance{inst});
    if (do_backward) tape.backward(b, 1.0);
    return tape.val(b).data[0];
  };
  auto rep = test::fd_check_params(store, loss_fn);
  INFO("worst " << rep.where);
  CHECK(rep.max_rel_err <= 1e-4);
}

TEST_CASE("every critic parameter is wired into the output") {
  CriticConfig cfg{8, 2, 3};
  auto store = make_store(cfg, 7);
  auto inst = generate_tsp(6, 1, 9)[0];
  store.zero_adjoints();
  for (int k = 0; k < 3; ++k) {
    Tape tape;
    Val b = critic_forward(tape, store, cfg, Instance{inst});
    tape.backward(b, 1.0);
  }
  for (const auto& e : store.entries()) {
    double norm = 0.0;
    for (double g : e.adjoint.data) norm += g * g;
    INFO("parameter " << e.name);
    CHECK(norm > 0.0);
  }
}

#include <doctest.h>

#include <cmath>

#include "binspp/error.hpp"
#include "binspp/gru.hpp"
#include "support/oracles.hpp"

using namespace binspp;
using binspp::testing::finite_difference_gradient;
using binspp::testing::max_relative_error;
using binspp::testing::random_matrix;

namespace {

GruParams constant_params(std::size_t n, std::size_t h, double w, double b) {
  GruParams p(n, h);
  for (double& x : p.w_input.data()) x = w;
  for (double& x : p.w_recurrent.data()) x = w;
  for (double& x : p.bias_input) x = b;
  for (double& x : p.bias_recurrent) x = b;
  return p;
}

}  // namespace

TEST_CASE("init_gru parameter counts and determinism") {
  CHECK(init_gru(1, 1, 0).count() == 12);
  CHECK(init_gru(3, 1, 5).count() == 18);
  CHECK(init_gru(129, 129, 0).count() == 100620);
  CHECK(init_gru(4, 3, 9) == init_gru(4, 3, 9));
  CHECK_FALSE(init_gru(4, 3, 9) == init_gru(4, 3, 10));

  const auto p = init_gru(5, 4, 3);
  std::size_t stored = 0;
  for (auto arr : p.arrays()) {
    stored += arr.size();
    for (double x : arr) CHECK(std::abs(x) <= 0.5);  // 1/sqrt(4)
  }
  CHECK(stored == p.count());

  CHECK_THROWS_AS(init_gru(0, 1, 0), Error);
  CHECK_THROWS_AS(init_gru(1, 0, 0), Error);
}

TEST_CASE("gru_forward reference values") {
  SUBCASE("zero weights keep the zero state") {
    const auto p = constant_params(2, 3, 0.0, 0.0);
    Rng rng(1);
    const auto out = gru_forward(p, random_matrix(7, 2, rng));
    for (double v : out.hidden.data()) CHECK(v == 0.0);
  }
  SUBCASE("single step with unit weights") {
    const auto p = constant_params(1, 1, 1.0, 0.0);
    RealMatrix x(1, 1, 1.0);
    const auto out = gru_forward(p, x);
    // (1 - sigmoid(1)) * tanh(1)
    CHECK(out.hidden(0, 0) == doctest::Approx(0.20482421480982514).epsilon(1e-14));
  }
  SUBCASE("output length follows input length") {
    const auto p = init_gru(3, 2, 4);
    Rng rng(2);
    for (std::size_t len : {1u, 2u, 17u}) {
      const auto out = gru_forward(p, random_matrix(len, 3, rng));
      CHECK(out.hidden.rows() == len);
      CHECK(out.hidden.cols() == 2);
    }
  }
  SUBCASE("shape mismatch") {
    const auto p = init_gru(3, 2, 4);
    CHECK_THROWS_AS(gru_forward(p, RealMatrix(4, 2)), Error);
    std::vector<double> bad_h0(3, 0.0);
    CHECK_THROWS_AS(gru_forward(p, RealMatrix(4, 3), bad_h0), Error);
  }
}

TEST_CASE("hidden states stay inside (-1, 1)") {
  Rng rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    const auto p = init_gru(3, 2, static_cast<std::uint64_t>(trial));
    const auto out = gru_forward(p, random_matrix(40, 3, rng, -3.0, 3.0));
    for (double v : out.hidden.data()) {
      CHECK(v > -1.0);
      CHECK(v < 1.0);
    }
    // Saturated gates: tanh rounds to +-1 in double precision, so only the
    // closed interval survives.
    auto scaled = p;
    for (auto arr : scaled.arrays())
      for (double& v : arr) v *= 8.0;
    const auto sat = gru_forward(scaled, random_matrix(40, 3, rng, -20.0, 20.0));
    for (double v : sat.hidden.data()) {
      CHECK(std::isfinite(v));
      CHECK(std::abs(v) <= 1.0);
    }
  }
}

TEST_CASE("softplus head") {
  RealMatrix h(1, 3);
  h(0, 0) = 0.0;
  h(0, 1) = 1.0;
  h(0, 2) = -1.0;
  const auto clamped = softplus_head(h, {10.0, true});
  CHECK(clamped(0, 0) == doctest::Approx(0.069314718055994531).epsilon(1e-14));
  CHECK(clamped(0, 1) == 1.0);
  const auto raw = softplus_head(h, {10.0, false});
  CHECK(raw(0, 1) == doctest::Approx(1.0000045398899217).epsilon(1e-14));
  CHECK(raw(0, 2) > 0.0);
  CHECK(raw(0, 2) < 1e-5);

  // Overflow-safe branch.
  RealMatrix big(1, 1, 500.0);
  CHECK(softplus_head(big, {10.0, false})(0, 0) == 500.0);

  CHECK_THROWS_AS(softplus_head(h, {0.0, true}), Error);
}

TEST_CASE("mse_loss") {
  const std::vector<double> a = {0.2, 0.4, 0.9};
  CHECK(mse_loss(a, a) == 0.0);
  CHECK(mse_loss(std::vector<double>{1.0, 0.0}, std::vector<double>{0.0, 0.0}) == 0.5);
  const std::vector<double> b = {0.1, 0.7, 0.3};
  const std::vector<double> a_perm = {0.9, 0.2, 0.4};
  const std::vector<double> b_perm = {0.3, 0.1, 0.7};
  CHECK(mse_loss(a, b) == doctest::Approx(mse_loss(a_perm, b_perm)).epsilon(1e-15));
  CHECK_THROWS_AS(mse_loss(a, std::vector<double>{1.0}), Error);
  CHECK_THROWS_AS(mse_loss(std::vector<double>{}, std::vector<double>{}), Error);
}

TEST_CASE("gru_backward matches finite differences") {
  const HeadConfig head{10.0, true};
  Rng rng(2024);
  for (std::uint64_t seed = 0; seed < 120; ++seed) {
    const std::size_t n = 1 + seed % 4, h = 1 + (seed / 4) % 3, len = 1 + (seed / 12) % 5;
    const auto p = init_gru(n, h, seed);
    const auto x = random_matrix(len, n, rng, -2.0, 2.0);
    const auto target = random_matrix(len, h, rng, 0.0, 1.0);
    const auto fwd = gru_forward(p, x);
    const auto analytic = gru_backward(p, fwd.cache, head, target);
    const auto numeric = finite_difference_gradient(p, x, target, head);
    INFO("n=" << n << " h=" << h << " L=" << len << " seed=" << seed);
    CHECK(max_relative_error(analytic, numeric) < 1e-5);
  }
}

TEST_CASE("gru_backward special cases") {
  const HeadConfig head{10.0, true};
  const auto p = init_gru(2, 2, 11);
  Rng rng(5);
  const auto x = random_matrix(6, 2, rng);
  const auto fwd = gru_forward(p, x);

  SUBCASE("zero gradient at a perfect fit") {
    const auto y = softplus_head(fwd.hidden, head);
    const auto g = gru_backward(p, fwd.cache, head, y);
    for (auto arr : g.arrays())
      for (double v : arr) CHECK(v == 0.0);
  }
  SUBCASE("stale cache is rejected") {
    auto changed = p;
    changed.bias_input[0] += 1e-3;
    CHECK_THROWS_AS(gru_backward(changed, fwd.cache, head, RealMatrix(6, 2)), Error);
    try {
      gru_backward(changed, fwd.cache, head, RealMatrix(6, 2));
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::StaleCache);
    }
  }
  SUBCASE("batch of identical sequences averages to the single gradient") {
    const auto target = random_matrix(6, 2, rng, 0.0, 1.0);
    const auto single = gru_backward(p, fwd.cache, head, target);
    GruParams batch(p.n, p.h);
    accumulate(batch, gru_backward(p, fwd.cache, head, target), 0.5);
    accumulate(batch, gru_backward(p, gru_forward(p, x).cache, head, target), 0.5);
    CHECK(max_relative_error(batch, single) < 1e-12);
  }
}

TEST_CASE("adam_step") {
  SUBCASE("first step with unit gradient") {
    GruParams p(1, 1);
    GruParams g(1, 1);
    for (auto arr : g.arrays())
      for (double& v : arr) v = 1.0;
    AdamState s(p, 1e-3, 0.0);
    adam_step(p, g, s);
    for (auto arr : p.arrays())
      for (double v : arr) CHECK(v == doctest::Approx(-0.001 / (1.0 + 1e-8)).epsilon(1e-12));
    CHECK(s.step_count == 1);
  }
  SUBCASE("zero gradient and no decay leave parameters unchanged") {
    auto p = init_gru(2, 2, 3);
    const auto before = p;
    AdamState s(p, 1e-3, 0.0);
    adam_step(p, GruParams(2, 2), s);
    adam_step(p, GruParams(2, 2), s);
    CHECK(p == before);
    CHECK(s.step_count == 2);
  }
  SUBCASE("early updates are bounded by the learning rate") {
    // With bias correction the very first update is exactly lr * g/|g|; later
    // updates obey |m_hat| / sqrt(v_hat) <= (1 - beta1) / sqrt(1 - beta2).
    auto p = init_gru(3, 2, 8);
    AdamState s(p, 1e-3, 1e-5);
    Rng rng(4);
    for (int step = 0; step < 10; ++step) {
      GruParams g(3, 2);
      for (auto arr : g.arrays())
        for (double& v : arr) v = uniform(rng, -5.0, 5.0);
      const auto before = p;
      adam_step(p, g, s);
      const auto pa = p.arrays();
      const auto ba = before.arrays();
      for (std::size_t a = 0; a < pa.size(); ++a)
        for (std::size_t i = 0; i < pa[a].size(); ++i)
          CHECK(std::abs(pa[a][i] - ba[a][i]) <=
                1e-3 * (step == 0 ? 1.0 + 1e-9 : 0.1 / std::sqrt(0.001) + 1e-9));
    }
  }
  SUBCASE("weight decay pulls toward zero") {
    GruParams p(1, 1);
    for (auto arr : p.arrays())
      for (double& v : arr) v = 2.0;
    AdamState s(p, 1e-3, 0.5);
    adam_step(p, GruParams(1, 1), s);
    for (auto arr : p.arrays())
      for (double v : arr) CHECK(v < 2.0);
  }
  SUBCASE("shape mismatch") {
    auto p = init_gru(2, 1, 0);
    AdamState s(p, 1e-3, 0.0);
    CHECK_THROWS_AS(adam_step(p, GruParams(3, 1), s), Error);
  }
}

TEST_CASE("training steps are bit-reproducible") {
  auto run = [] {
    auto p = init_gru(2, 2, 42);
    AdamState s(p, 1e-2, 1e-5);
    Rng rng(9);
    const auto x = random_matrix(8, 2, rng);
    const auto t = random_matrix(8, 2, rng, 0.0, 1.0);
    for (int i = 0; i < 25; ++i) {
      const auto fwd = gru_forward(p, x);
      adam_step(p, gru_backward(p, fwd.cache, {10.0, true}, t), s);
    }
    return p;
  };
  CHECK(run() == run());
}

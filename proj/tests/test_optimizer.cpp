#include <doctest.h>

#include <cmath>

#include "psar/optimizer.hpp"
#include "psar/types.hpp"

using namespace psar;

TEST_CASE("zero gradient leaves parameters unchanged") {
  std::vector<double> p{1.0, -2.0, 3.5};
  const auto before = p;
  auto state = make_optimizer_state(p.size(), {});
  const std::vector<double> g(3, 0.0);
  for (int i = 0; i < 5; ++i) optimizer_step(p, g, state);
  CHECK(p == before);
  CHECK(state.step == 5);
}

TEST_CASE("constant gradient gives the closed-form Adam step") {
  // With bias correction, m_hat = g and v_hat = g^2 at every step, so each
  // update is exactly lr * g / (|g| + eps).
  const AdamHyper h{.learning_rate = 1e-2};
  std::vector<double> p{0.0, 0.0, 0.0};
  const std::vector<double> g{0.5, -3.0, 1e-3};
  auto state = make_optimizer_state(3, h);
  for (int step = 1; step <= 200; ++step) {
    const auto before = p;
    optimizer_step(p, g, state);
    for (size_t i = 0; i < 3; ++i) {
      const double expected = h.learning_rate * g[i] / (std::abs(g[i]) + h.epsilon);
      CHECK(before[i] - p[i] == doctest::Approx(expected).epsilon(1e-9));
    }
  }
  CHECK(std::abs(p[0] + 200 * h.learning_rate) < 1e-6);
}

TEST_CASE("deterministic given state and gradients") {
  auto run = [] {
    std::vector<double> p{0.1, 0.2};
    auto s = make_optimizer_state(2, {});
    for (int i = 0; i < 10; ++i) optimizer_step(p, std::vector<double>{std::sin(i), std::cos(i)}, s);
    return p;
  };
  CHECK(run() == run());
}

TEST_CASE("size mismatch is rejected") {
  std::vector<double> p(3);
  auto s = make_optimizer_state(2, {});
  CHECK_THROWS_AS(optimizer_step(p, std::vector<double>(3), s), InvalidArgument);
}

#include <cmath>
#include <functional>
#include <random>

#include "doctest.h"
#include "tde3/autodiff.hpp"

using namespace tde3;

namespace {

using Fn = std::function<ad::Var(ad::Var, ad::Var)>;

double central_diff(const Fn& f, double x, double y, int which, double h = 1e-6) {
  auto value = [&](double a, double b) { return f(ad::Var(a), ad::Var(b)).v; };
  return which == 0 ? (value(x + h, y) - value(x - h, y)) / (2 * h)
                    : (value(x, y + h) - value(x, y - h)) / (2 * h);
}

}  // namespace

TEST_SUITE("autodiff") {

TEST_CASE("property: composite gradients match central differences") {
  const Fn f = [](ad::Var a, ad::Var b) {
    using namespace ad;
    const Var s = sigmoid(a * b - 0.3);
    return exp(-square(a) * 0.2) * log(abs(b) + 1.5) + s / (1.0 + square(b)) -
           max(a, b) * 0.5 + min(a, 2.0 * b);
  };
  std::mt19937 rng(71);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 200; ++trial) {
    const double x = u(rng), y = u(rng);
    if (std::abs(x - y) < 1e-3 || std::abs(x - 2 * y) < 1e-3 || std::abs(y) < 1e-3) continue;
    ad::Tape tape;
    ad::ScopedTape scope(tape);
    const ad::Var a = tape.leaf(x), b = tape.leaf(y);
    const ad::Var out = f(a, b);
    const std::vector<double> g = tape.gradient(out);
    REQUIRE(g.size() == tape.size());
    CHECK(g[a.id] == doctest::Approx(central_diff(f, x, y, 0)).epsilon(1e-6));
    CHECK(g[b.id] == doctest::Approx(central_diff(f, x, y, 1)).epsilon(1e-6));
  }
}

TEST_CASE("min and max send the gradient to the first operand on ties") {
  ad::Tape tape;
  ad::ScopedTape scope(tape);
  const ad::Var a = tape.leaf(1.0), b = tape.leaf(1.0);
  std::vector<double> g = tape.gradient(ad::min(a, b));
  CHECK(g[a.id] == 1.0);
  CHECK(g[b.id] == 0.0);
  g = tape.gradient(ad::max(a, b));
  CHECK(g[a.id] == 1.0);
  CHECK(g[b.id] == 0.0);
  g = tape.gradient(ad::min(a, ad::Var(0.5)));
  CHECK(g[a.id] == 0.0);
}

TEST_CASE("the spike surrogate is a step with a smooth derivative") {
  ad::Tape tape;
  ad::ScopedTape scope(tape);
  for (double u : {-2.0, -0.1, 0.0, 0.3, 4.0}) {
    const ad::Var x = tape.leaf(u);
    const ad::Var s = ad::spike_surrogate(x, 10.0);
    CHECK(s.v == (u >= 0 ? 1.0 : 0.0));
    const double expect = 1.0 / std::pow(10.0 * std::abs(u) + 1.0, 2);
    CHECK(tape.gradient(s)[x.id] == doctest::Approx(expect));
    const ad::Var r = ad::spike_relaxed(x, 10.0);
    const double sg = 1.0 / (1.0 + std::exp(-10.0 * u));
    CHECK(r.v == doctest::Approx(sg));
    CHECK(tape.gradient(r)[x.id] == doctest::Approx(10.0 * sg * (1 - sg)));
  }
}

TEST_CASE("gradients accumulate over repeated uses") {
  ad::Tape tape;
  ad::ScopedTape scope(tape);
  const ad::Var x = tape.leaf(3.0);
  ad::Var acc = x;
  for (int i = 0; i < 4; ++i) acc = acc * x;  // x^5
  CHECK(acc.v == 243.0);
  CHECK(tape.gradient(acc)[x.id] == doctest::Approx(5 * 81.0));
}

TEST_CASE("operations on constants record nothing") {
  ad::Tape tape;
  ad::ScopedTape scope(tape);
  const ad::Var c = ad::exp(ad::Var(1.0)) * 2.0 + ad::Var(3.0);
  CHECK(c.is_constant());
  CHECK(c.v == doctest::Approx(2 * std::exp(1.0) + 3));
  CHECK(tape.size() == 0);
}

}  // TEST_SUITE

#include "tde3/autodiff.hpp"

#include <cmath>
#include <stdexcept>

#include "tde3/tde.hpp"

namespace tde3::ad {

namespace {
thread_local Tape* g_tape = nullptr;

Tape& tape_for(const Var& a, const Var& b) {
  if (!g_tape && (!a.is_constant() || !b.is_constant()))
    throw std::logic_error("variable used without an active tape");
  return *g_tape;
}
}  // namespace

Var Tape::leaf(double value) {
  nodes_.push_back({-1, -1, 0.0, 0.0});
  return {value, static_cast<int>(nodes_.size() - 1)};
}

Var Tape::unary(double value, const Var& a, double da) {
  if (a.is_constant()) return {value};
  nodes_.push_back({a.id, -1, da, 0.0});
  return {value, static_cast<int>(nodes_.size() - 1)};
}

Var Tape::binary(double value, const Var& a, double da, const Var& b, double db) {
  if (a.is_constant() && b.is_constant()) return {value};
  nodes_.push_back({a.id, b.id, da, db});
  return {value, static_cast<int>(nodes_.size() - 1)};
}

std::vector<double> Tape::gradient(const Var& out) const {
  std::vector<double> adj(nodes_.size(), 0.0);
  if (out.is_constant()) return adj;
  adj[static_cast<std::size_t>(out.id)] = 1.0;
  for (int i = out.id; i >= 0; --i) {
    const double g = adj[static_cast<std::size_t>(i)];
    if (g == 0.0) continue;
    const Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.a >= 0) adj[static_cast<std::size_t>(n.a)] += g * n.da;
    if (n.b >= 0) adj[static_cast<std::size_t>(n.b)] += g * n.db;
  }
  return adj;
}

Tape* active_tape() { return g_tape; }

ScopedTape::ScopedTape(Tape& tape) : previous_(g_tape) { g_tape = &tape; }
ScopedTape::~ScopedTape() { g_tape = previous_; }

Var operator+(const Var& a, const Var& b) {
  if (a.is_constant() && b.is_constant()) return {a.v + b.v};
  return tape_for(a, b).binary(a.v + b.v, a, 1.0, b, 1.0);
}

Var operator-(const Var& a, const Var& b) {
  if (a.is_constant() && b.is_constant()) return {a.v - b.v};
  return tape_for(a, b).binary(a.v - b.v, a, 1.0, b, -1.0);
}

Var operator*(const Var& a, const Var& b) {
  if (a.is_constant() && b.is_constant()) return {a.v * b.v};
  return tape_for(a, b).binary(a.v * b.v, a, b.v, b, a.v);
}

Var operator/(const Var& a, const Var& b) {
  if (a.is_constant() && b.is_constant()) return {a.v / b.v};
  return tape_for(a, b).binary(a.v / b.v, a, 1.0 / b.v, b, -a.v / (b.v * b.v));
}

Var operator-(const Var& a) {
  if (a.is_constant()) return {-a.v};
  return tape_for(a, a).unary(-a.v, a, -1.0);
}

Var min(const Var& a, const Var& b) { return a.v <= b.v ? a : b; }
Var max(const Var& a, const Var& b) { return a.v >= b.v ? a : b; }

Var abs(const Var& a) {
  if (a.is_constant()) return {std::abs(a.v)};
  return tape_for(a, a).unary(std::abs(a.v), a, a.v >= 0.0 ? 1.0 : -1.0);
}

Var exp(const Var& a) {
  const double e = std::exp(a.v);
  if (a.is_constant()) return {e};
  return tape_for(a, a).unary(e, a, e);
}

Var log(const Var& a) {
  if (a.is_constant()) return {std::log(a.v)};
  return tape_for(a, a).unary(std::log(a.v), a, 1.0 / a.v);
}

Var sigmoid(const Var& a) {
  const double s = tde3::sigmoid(a.v);
  if (a.is_constant()) return {s};
  return tape_for(a, a).unary(s, a, s * (1.0 - s));
}

Var square(const Var& a) {
  if (a.is_constant()) return {a.v * a.v};
  return tape_for(a, a).unary(a.v * a.v, a, 2.0 * a.v);
}

Var spike_surrogate(const Var& u, double beta) {
  const double s = u.v >= 0.0 ? 1.0 : 0.0;
  if (u.is_constant()) return {s};
  const double d = 1.0 / ((beta * std::abs(u.v) + 1.0) * (beta * std::abs(u.v) + 1.0));
  return tape_for(u, u).unary(s, u, d);
}

Var spike_relaxed(const Var& u, double beta) {
  const double s = tde3::sigmoid(beta * u.v);
  if (u.is_constant()) return {s};
  return tape_for(u, u).unary(s, u, beta * s * (1.0 - s));
}

}  // namespace tde3::ad

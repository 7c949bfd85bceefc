#pragma once

#include <cstddef>
#include <vector>

namespace tde3::ad {

class Tape;

/// Scalar on a tape. id < 0 marks a constant; operations between constants
/// record nothing.
struct Var {
  double v = 0.0;
  int id = -1;

  Var() = default;
  Var(double value) : v(value) {}  // NOLINT: implicit constants are intended
  Var(double value, int node) : v(value), id(node) {}

  bool is_constant() const { return id < 0; }
};

/// Append-only record of binary/unary operations with their local partials.
class Tape {
 public:
  /// New independent variable.
  Var leaf(double value);

  Var unary(double value, const Var& a, double da);
  Var binary(double value, const Var& a, double da, const Var& b, double db);

  /// d out / d node for every node; size() entries.
  std::vector<double> gradient(const Var& out) const;

  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }
  void reserve(std::size_t n) { nodes_.reserve(n); }

 private:
  struct Node {
    int a, b;
    double da, db;
  };
  std::vector<Node> nodes_;
};

/// Tape used by the operators below. Set for the lifetime of a forward
/// pass with ScopedTape.
Tape* active_tape();

class ScopedTape {
 public:
  explicit ScopedTape(Tape& tape);
  ~ScopedTape();
  ScopedTape(const ScopedTape&) = delete;
  ScopedTape& operator=(const ScopedTape&) = delete;

 private:
  Tape* previous_;
};

Var operator+(const Var& a, const Var& b);
Var operator-(const Var& a, const Var& b);
Var operator*(const Var& a, const Var& b);
Var operator/(const Var& a, const Var& b);
Var operator-(const Var& a);
inline Var& operator+=(Var& a, const Var& b) { return a = a + b; }
inline Var& operator*=(Var& a, const Var& b) { return a = a * b; }

/// Gradient goes to the selected operand (a on ties).
Var min(const Var& a, const Var& b);
Var max(const Var& a, const Var& b);
Var abs(const Var& a);
Var exp(const Var& a);
Var log(const Var& a);
Var sigmoid(const Var& a);
Var square(const Var& a);

/// Heaviside of u (u >= 0 fires) with derivative 1/(beta|u|+1)^2.
Var spike_surrogate(const Var& u, double beta);
/// sigmoid(beta*u) in both passes.
Var spike_relaxed(const Var& u, double beta);

}  // namespace tde3::ad

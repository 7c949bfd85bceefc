#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include "tde3/tde.hpp"

namespace tde3 {

enum class DecodeMode { Count, Isi };

/// Maps spike counts and inverse ISIs to px/timestep.
///   Wide:   v = 0.1 * count,             v = 1.0 / ISI
///   Narrow: v = 0.024 + 0.001 * count,   v = 0.024 + 0.015 / ISI
///   Custom: v = bias + alpha * count,    v = bias + alpha / ISI
/// Zero spikes map to 0; an undefined ISI (sentinel) maps to alpha/sentinel
/// without the bias.
struct VelocityScale {
  enum class Kind { Wide, Narrow, Custom };
  Kind kind = Kind::Wide;
  double alpha = 0.1;
  double bias = 0.0;

  static VelocityScale wide() { return {Kind::Wide, 0.1, 0.0}; }
  static VelocityScale narrow() { return {Kind::Narrow, 0.001, 0.024}; }
  static VelocityScale custom(double alpha, double bias) {
    return {Kind::Custom, alpha, bias};
  }

  double count_alpha() const;
  double isi_alpha() const;
  double bias_term() const;
};

struct DecodeConfig {
  DecodeMode mode = DecodeMode::Count;
  int count_window = 10;  // timesteps, onset step included
  VelocityScale scale = VelocityScale::wide();
  double trace_tau = 5.0;      // timesteps
  double isi_sentinel = 1e6;   // timesteps

  void validate() const;
};

struct VelocityEstimate {
  std::size_t onset_t = 0;
  double value = 0.0;  // px/timestep
};

double count_to_velocity(double count, const VelocityScale& scale);
double isi_to_velocity(double isi, const VelocityScale& scale, double sentinel);

/// Spikes in [onset, onset + count_window), one estimate per onset.
std::vector<VelocityEstimate> decode_spike_count(const TdeOutput& out,
                                                 const DecodeConfig& cfg);

/// tau * ln(x0 / x) + 1. Throws std::domain_error unless 0 < x <= x0.
double isi_from_trace(double trace_value, double x0, double tau);

/// Spike trace x <- x * exp(-1/tau), reset to x0 = 1 on spike.
std::vector<double> spike_trace(const std::vector<std::uint8_t>& spikes, double tau);

/// ISI between the first two spikes at or after each onset, read from the
/// trace one step before the second spike. Fewer than two spikes before the
/// next onset gives the sentinel ISI.
std::vector<VelocityEstimate> decode_isi(const TdeOutput& out,
                                         const DecodeConfig& cfg);

/// Dispatches on cfg.mode.
std::vector<VelocityEstimate> decode(const TdeOutput& out, const DecodeConfig& cfg);

/// Per-timestep timeline with each estimate placed at its onset.
std::vector<double> estimate_timeline(const std::vector<VelocityEstimate>& est,
                                      std::size_t length);

void write_estimates_csv(const std::vector<VelocityEstimate>& est,
                         const std::filesystem::path& path);

}  // namespace tde3

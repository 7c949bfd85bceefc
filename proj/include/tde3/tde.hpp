#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tde3/types.hpp"

namespace tde3 {

double sigmoid(double x);
double logit(double p);

/// Trainable detector parameters. Decays are stored as raw values passed
/// through a sigmoid, so any real raw value gives a decay in (0,1).
struct TdeParams {
  double w_fac = 1.0;  // gain level set by the facilitator, also the current cap
  double p_g = 0.0;
  double p_I = 0.0;
  double p_V = 0.0;
  double theta = 1.0;

  double decay_g() const { return sigmoid(p_g); }
  double decay_I() const { return sigmoid(p_I); }
  double decay_V() const { return sigmoid(p_V); }

  static TdeParams from_decays(double w_fac, double d_g, double d_I, double d_V);
  /// Decay per step exp(-1/tau) for time constants in timesteps.
  static TdeParams from_time_constants(double w_fac, double tau_g, double tau_I,
                                       double tau_V);
  void validate() const;

  friend bool operator==(const TdeParams&, const TdeParams&) = default;
};

struct TdeState {
  double g = 0.0;
  double I = 0.0;
  double V = 0.0;
};

enum class TdeKind { Tde2, Tde3 };

struct TdeStepResult {
  TdeState state;
  bool spike = false;
  bool onset = false;
};

/// One timestep. Order matters:
///   1. the trigger reads the gain left by the previous step,
///   2. gain decays, the facilitator sets it to w_fac, then (TDE-3 only)
///      the inhibitor zeroes it,
///   3. current integrates the impulse, capped at w_fac,
///   4. voltage integrates current; V >= theta spikes and resets to 0.
TdeStepResult tde_step(const TdeState& state, bool fac, bool trig, bool inh,
                       const TdeParams& params, TdeKind kind);

struct TdeOutput {
  std::vector<std::uint8_t> spikes;
  /// Trigger activations that found a positive gain.
  std::vector<std::uint8_t> onsets;
  std::vector<double> current_trace;  // filled when traces are requested
  std::vector<double> voltage_trace;  // membrane potential before reset

  std::size_t spike_count() const;
};

/// Runs from rest. Throws std::invalid_argument on length mismatch.
TdeOutput tde_run(std::span<const std::uint8_t> fac,
                  std::span<const std::uint8_t> trig,
                  std::span<const std::uint8_t> inh, const TdeParams& params,
                  TdeKind kind, bool record_traces = false);

/// Input pixels of a detector centred at (x, y). Along the preferred
/// direction the facilitator sits `spacing` px upstream of the trigger and
/// the inhibitor `spacing` px downstream, so null-direction motion reaches
/// the inhibitor before the trigger.
struct TapLayout {
  int fac_x, fac_y;
  int trig_x, trig_y;
  int inh_x, inh_y;
};
TapLayout detector_taps(Direction preferred, int x, int y, int spacing);

}  // namespace tde3

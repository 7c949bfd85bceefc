#include "tde3/tde.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tde3 {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double logit(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("logit needs p in (0,1)");
  return std::log(p / (1.0 - p));
}

TdeParams TdeParams::from_decays(double w_fac, double d_g, double d_I, double d_V) {
  TdeParams p;
  p.w_fac = w_fac;
  p.p_g = logit(d_g);
  p.p_I = logit(d_I);
  p.p_V = logit(d_V);
  p.validate();
  return p;
}

TdeParams TdeParams::from_time_constants(double w_fac, double tau_g, double tau_I,
                                         double tau_V) {
  if (!(tau_g > 0.0 && tau_I > 0.0 && tau_V > 0.0))
    throw std::invalid_argument("time constants must be positive");
  return from_decays(w_fac, std::exp(-1.0 / tau_g), std::exp(-1.0 / tau_I),
                     std::exp(-1.0 / tau_V));
}

void TdeParams::validate() const {
  if (!(w_fac > 0.0) || !std::isfinite(w_fac))
    throw std::invalid_argument("w_fac must be positive and finite");
  if (!std::isfinite(p_g) || !std::isfinite(p_I) || !std::isfinite(p_V))
    throw std::invalid_argument("decay parameters must be finite");
  if (!(theta > 0.0)) throw std::invalid_argument("threshold must be positive");
}

TdeStepResult tde_step(const TdeState& s, bool fac, bool trig, bool inh,
                       const TdeParams& params, TdeKind kind) {
  TdeStepResult r;
  const double impulse = trig ? s.g : 0.0;
  r.onset = trig && s.g > 0.0;

  double g = s.g * params.decay_g();
  if (fac) g = params.w_fac;
  if (kind == TdeKind::Tde3 && inh) g = 0.0;

  const double I = std::min(s.I * params.decay_I() + impulse, params.w_fac);
  double V = s.V * params.decay_V() + I;
  r.spike = V >= params.theta;
  if (r.spike) V = 0.0;
  r.state = {g, I, V};
  return r;
}

std::size_t TdeOutput::spike_count() const {
  return static_cast<std::size_t>(std::count(spikes.begin(), spikes.end(), 1));
}

TdeOutput tde_run(std::span<const std::uint8_t> fac,
                  std::span<const std::uint8_t> trig,
                  std::span<const std::uint8_t> inh, const TdeParams& params,
                  TdeKind kind, bool record_traces) {
  if (fac.size() != trig.size() || fac.size() != inh.size())
    throw std::invalid_argument("TDE input sequences differ in length");
  const std::size_t n = fac.size();
  TdeOutput out;
  out.spikes.assign(n, 0);
  out.onsets.assign(n, 0);
  if (record_traces) {
    out.current_trace.resize(n);
    out.voltage_trace.resize(n);
  }
  const double dg = params.decay_g(), dI = params.decay_I(), dV = params.decay_V();
  TdeState s;
  for (std::size_t t = 0; t < n; ++t) {
    // Inlined tde_step with precomputed decays.
    const bool tr = trig[t] != 0;
    const double impulse = tr ? s.g : 0.0;
    out.onsets[t] = tr && s.g > 0.0;
    s.g *= dg;
    if (fac[t]) s.g = params.w_fac;
    if (kind == TdeKind::Tde3 && inh[t]) s.g = 0.0;
    s.I = std::min(s.I * dI + impulse, params.w_fac);
    s.V = s.V * dV + s.I;
    if (record_traces) {
      out.current_trace[t] = s.I;
      out.voltage_trace[t] = s.V;
    }
    if (s.V >= params.theta) {
      out.spikes[t] = 1;
      s.V = 0.0;
    }
  }
  return out;
}

TapLayout detector_taps(Direction preferred, int x, int y, int spacing) {
  const Step d = motion_step(preferred);
  return {x - d.dx * spacing, y - d.dy * spacing, x, y,
          x + d.dx * spacing, y + d.dy * spacing};
}

}  // namespace tde3

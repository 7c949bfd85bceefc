#include "tde3/train.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>

#include "tde3/metrics.hpp"
#include "tde3/simulator.hpp"

namespace tde3 {

double surrogate_grad(double u, double beta) {
  if (!(beta > 0.0)) throw std::invalid_argument("surrogate beta must be positive");
  const double d = beta * std::abs(u) + 1.0;
  return 1.0 / (d * d);
}

L1Loss loss_l1_normalized(std::span<const double> est, std::span<const double> truth) {
  if (est.size() != truth.size()) throw std::invalid_argument("loss: length mismatch");
  L1Loss r;
  if (est.empty()) return r;
  double me = *std::max_element(est.begin(), est.end());
  double my = *std::max_element(truth.begin(), truth.end());
  if (!(me > 0.0)) {
    me = 1.0;
    r.degenerate = true;
  }
  if (!(my > 0.0)) my = 1.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < est.size(); ++i) sum += std::abs(est[i] / me - truth[i] / my);
  r.value = sum / static_cast<double>(est.size());
  return r;
}

double loss_regularizer(std::span<const double> counts, double lambda) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be >= 0");
  if (counts.empty() || lambda == 0.0) return 0.0;
  double sum = 0.0;
  for (double c : counts) sum += c * c;
  return lambda * sum / static_cast<double>(counts.size());
}

namespace {

bool near_truth(std::span<const double> truth, std::size_t t) {
  if (truth[t] != 0.0) return true;
  if (t > 0 && truth[t - 1] != 0.0) return true;
  return t + 1 < truth.size() && truth[t + 1] != 0.0;
}

}  // namespace

double fta(std::span<const double> est, std::span<const double> truth) {
  if (est.size() != truth.size()) throw std::invalid_argument("fta: length mismatch");
  double on = 0.0, total = 0.0;
  for (std::size_t t = 0; t < est.size(); ++t) {
    const double m = std::abs(est[t]);
    total += m;
    if (near_truth(truth, t)) on += m;
  }
  return total > 0.0 ? on / total : 1.0;
}

StimulusSpec StimulusSpec::wide() { return {}; }

StimulusSpec StimulusSpec::narrow() {
  StimulusSpec s;
  s.velocities.clear();
  for (int k = 39; k >= 25; --k) s.velocities.push_back(1.0 / k);
  return s;
}

StimulusSpec StimulusSpec::spatial() {
  StimulusSpec s;
  s.n_edges = 2;
  s.spacings = {3, 4, 5, 7, 10};
  return s;
}

StimulusSpec StimulusSpec::noisy(double rate_hz) {
  StimulusSpec s = spatial();
  s.noise_rate = rate_hz;
  return s;
}

void StimulusSpec::validate() const {
  if (velocities.empty()) throw std::invalid_argument("velocity set is empty");
  for (double v : velocities)
    if (!(v > 0.0 && v <= 1.0))
      throw std::invalid_argument("velocities must lie in (0, 1] px/timestep");
  if (n_edges < 1) throw std::invalid_argument("n_edges must be >= 1");
  if (spacings.empty()) throw std::invalid_argument("spacing set is empty");
  for (int s : spacings)
    if (s < 1) throw std::invalid_argument("edge spacing must be >= 1");
  if (!(noise_rate >= 0.0)) throw std::invalid_argument("noise rate must be >= 0");
  if (!(timestep > 0.0)) throw std::invalid_argument("timestep must be positive");
  if (width < 3 || height < 1) throw std::invalid_argument("field too small for a probe");
}

TdeParams default_init_params() {
  TdeParams p;
  p.w_fac = 4.0;
  p.p_g = p.p_I = p.p_V = 3.0;
  return p;
}

TrainTask parse_train_task(std::string_view name) {
  if (name == "wide") return TrainTask::Wide;
  if (name == "narrow") return TrainTask::Narrow;
  if (name == "spatial") return TrainTask::Spatial;
  if (name == "noisy") return TrainTask::Noisy;
  throw std::invalid_argument("unknown task '" + std::string(name) + "'");
}

TrainConfig task_config(TrainTask task, DecodeMode mode, double noise_rate) {
  TrainConfig cfg;
  cfg.epochs = 500;
  cfg.inference_mode = mode;
  const bool isi = mode == DecodeMode::Isi;
  switch (task) {
    case TrainTask::Wide:
      cfg.stimulus = StimulusSpec::wide();
      break;
    case TrainTask::Spatial:
      cfg.stimulus = StimulusSpec::spatial();
      break;
    case TrainTask::Noisy:
      cfg.stimulus = StimulusSpec::noisy(noise_rate);
      break;
    case TrainTask::Narrow:
      cfg.stimulus = StimulusSpec::narrow();
      cfg.scale = VelocityScale::narrow();
      cfg.count_window = 30;
      cfg.reg_lambda = 3e-5;
      cfg.init.p_V = 0.0;
      return cfg;
  }
  if (isi) cfg.learning_rate = 3e-2;
  return cfg;
}

DecodeConfig TrainConfig::decode_config() const {
  DecodeConfig d;
  d.mode = inference_mode;
  d.count_window = count_window;
  d.scale = scale;
  d.trace_tau = trace_tau;
  return d;
}

void TrainConfig::validate() const {
  if (epochs < 0) throw std::invalid_argument("epochs must be >= 0");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0))
    throw std::invalid_argument("Adam betas must lie in [0, 1)");
  if (!(reg_lambda >= 0.0)) throw std::invalid_argument("reg_lambda must be >= 0");
  if (!(surrogate_beta > 0.0)) throw std::invalid_argument("surrogate_beta must be > 0");
  if (stcf_search_period < 0) throw std::invalid_argument("stcf_search_period must be >= 0");
  if (isi_warmup_epochs < 0) throw std::invalid_argument("isi_warmup_epochs must be >= 0");
  stimulus.validate();
  init.validate();
  decode_config().validate();
}

// Batches ----------------------------------------------------------------------

TrainSample make_sample(const StimulusSpec& spec, double velocity, int spacing,
                        std::uint64_t seed) {
  const Stimulus stim = gen_edge_stimulus(velocity, spec.n_edges, spacing, spec.width,
                                          spec.height, seed);
  SimulatorConfig sc;
  sc.timestep = spec.timestep;
  sc.noise_rate = spec.noise_rate;
  sc.seed = splitmix64(seed ^ 0x6e6f697365ULL);
  TrainSample s;
  s.binned = bin_events(simulate(stim, sc), spec.timestep, true);
  s.truth = stim.velocity_truth;
  s.truth.resize(s.binned.bins(), 0.0);
  s.ref_x = stim.meta.ref_x;
  s.ref_y = stim.meta.ref_y;
  s.velocity = velocity;
  return s;
}

std::vector<TrainSample> make_batch(const StimulusSpec& spec, int n, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(splitmix64(seed));
  std::uniform_int_distribution<std::size_t> pick_v(0, spec.velocities.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_s(0, spec.spacings.size() - 1);
  std::vector<TrainSample> batch;
  batch.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double v = spec.velocities[pick_v(rng)];
    const int sp = spec.spacings[pick_s(rng)];
    batch.push_back(make_sample(spec, v, sp, rng()));
  }
  return batch;
}

TapSeries sample_taps(const TrainSample& s, const StcfConfig& stcf) {
  const BinnedEvents filtered =
      stcf.n_required() > 0 ? stcf_filter(s.binned, stcf) : s.binned;
  const TapLayout taps = detector_taps(Direction::LeftRight, s.ref_x, s.ref_y, 1);
  const std::size_t T = filtered.bins();
  TapSeries out;
  out.fac.resize(T);
  out.trig.resize(T);
  out.inh.resize(T);
  for (std::size_t t = 0; t < T; ++t) {
    out.fac[t] = filtered.at(t, taps.fac_y, taps.fac_x);
    out.trig[t] = filtered.at(t, taps.trig_y, taps.trig_x);
    out.inh[t] = filtered.at(t, taps.inh_y, taps.inh_x);
  }
  return out;
}

namespace {

// Index of the onset matched to an edge arriving at t, or -1.
template <class OnsetAt>
long match_onset(std::size_t t, std::size_t T, OnsetAt onset_at) {
  if (onset_at(t) >= 0) return onset_at(t);
  if (t > 0 && onset_at(t - 1) >= 0) return onset_at(t - 1);
  if (t + 1 < T && onset_at(t + 1) >= 0) return onset_at(t + 1);
  return -1;
}

}  // namespace

std::vector<double> per_edge_estimates(const std::vector<VelocityEstimate>& est,
                                       const std::vector<double>& truth) {
  const std::size_t T = truth.size();
  std::vector<long> idx(T, -1);
  for (std::size_t k = 0; k < est.size(); ++k)
    if (est[k].onset_t < T) idx[est[k].onset_t] = static_cast<long>(k);
  std::vector<double> out;
  for (std::size_t t = 0; t < T; ++t) {
    if (truth[t] == 0.0) continue;
    const long k = match_onset(t, T, [&](std::size_t u) { return idx[u]; });
    out.push_back(k >= 0 ? est[static_cast<std::size_t>(k)].value : 0.0);
  }
  return out;
}

namespace {

void append_nonzero_union(const std::vector<double>& e, const std::vector<double>& y,
                          std::vector<double>& es, std::vector<double>& ys) {
  for (std::size_t t = 0; t < e.size(); ++t)
    if (e[t] != 0.0 || y[t] != 0.0) {
      es.push_back(e[t]);
      ys.push_back(y[t]);
    }
}

}  // namespace

EvalResult evaluate_model(const TrainedModel& model, const DecodeConfig& decode,
                          TdeKind kind, const std::vector<TrainSample>& batch,
                          bool per_timestep_loss) {
  decode.validate();
  EvalResult r;
  std::vector<double> all_e, all_y, loss_e, loss_y;
  double spikes = 0.0, sq = 0.0;
  for (const TrainSample& s : batch) {
    const TapSeries taps = sample_taps(s, model.stcf);
    const TdeOutput out = tde_run(taps.fac, taps.trig, taps.inh, model.params, kind);
    const auto est = tde3::decode(out, decode);
    spikes += static_cast<double>(out.spike_count());
    sq += static_cast<double>(out.spike_count()) * static_cast<double>(out.spike_count());

    const auto edges = per_edge_estimates(est, s.truth);
    r.estimates.insert(r.estimates.end(), edges.begin(), edges.end());
    for (double y : s.truth)
      if (y != 0.0) r.truths.push_back(y);

    const auto line = estimate_timeline(est, s.truth.size());
    all_e.insert(all_e.end(), line.begin(), line.end());
    all_y.insert(all_y.end(), s.truth.begin(), s.truth.end());
    if (per_timestep_loss) append_nonzero_union(line, s.truth, loss_e, loss_y);
  }
  r.mean_spikes = batch.empty() ? 0.0 : spikes / static_cast<double>(batch.size());
  r.mean_sq_spikes = batch.empty() ? 0.0 : sq / static_cast<double>(batch.size());
  r.pearson_r = pearson(r.estimates, r.truths);
  r.relative_error = relative_error(r.estimates, r.truths).mean;
  // Timelines are concatenated, so the +-1 window never crosses samples
  // unless a truth sits at a sample boundary, which the tail prevents.
  r.fta = fta(all_e, all_y);
  const L1Loss l = per_timestep_loss ? loss_l1_normalized(loss_e, loss_y)
                                     : loss_l1_normalized(r.estimates, r.truths);
  r.loss = l.value;
  r.degenerate = l.degenerate;
  return r;
}

// Differentiable forward ---------------------------------------------------------

namespace {

struct DiffSample {
  std::vector<std::size_t> onset_t;
  std::vector<ad::Var> estimate;  // per onset
  ad::Var spikes;
};

DiffSample diff_sample(const DiffParams& p, const ad::Var& dg, const ad::Var& dI,
                       const ad::Var& dV, const ad::Var& trace_decay,
                       const TapSeries& taps, const TrainConfig& cfg, SpikeMode mode) {
  using ad::Var;
  const std::size_t T = taps.trig.size();
  const bool isi = cfg.inference_mode == DecodeMode::Isi;
  const double theta = cfg.init.theta;
  Var g, I, V, x;
  DiffSample out;
  std::vector<Var> s(T), trace(isi ? T : 0);

  for (std::size_t t = 0; t < T; ++t) {
    const Var impulse = taps.trig[t] ? g : Var(0.0);
    if (taps.trig[t] && g.v > 0.0) out.onset_t.push_back(t);
    g = g * dg;
    if (taps.fac[t]) g = p.w_fac;
    if (cfg.kind == TdeKind::Tde3 && taps.inh[t]) g = Var(0.0);
    I = ad::min(I * dI + impulse, p.w_fac);
    V = V * dV + I;
    const Var u = V - Var(theta);
    s[t] = mode == SpikeMode::Surrogate ? ad::spike_surrogate(u, cfg.surrogate_beta)
                                        : ad::spike_relaxed(u, cfg.surrogate_beta);
    out.spikes = out.spikes + s[t];
    V = cfg.detach_reset ? V * Var(1.0 - s[t].v) : V * (Var(1.0) - s[t]);
    if (isi) {
      x = s[t] + (Var(1.0) - s[t]) * x * trace_decay;
      trace[t] = x;
    }
  }

  const VelocityScale& sc = cfg.scale;
  for (std::size_t k = 0; k < out.onset_t.size(); ++k) {
    const std::size_t t0 = out.onset_t[k];
    if (!isi) {
      const std::size_t end = std::min(T, t0 + static_cast<std::size_t>(cfg.count_window));
      Var count;
      for (std::size_t t = t0; t < end; ++t) count = count + s[t];
      // Bias is switched by the hard count, gradient flows through alpha*count.
      const double bias = count.v > 0.0 ? sc.bias_term() : 0.0;
      out.estimate.push_back(Var(bias) + Var(sc.count_alpha()) * count);
      continue;
    }
    const std::size_t end = k + 1 < out.onset_t.size() ? out.onset_t[k + 1] : T;
    // Mixture over second-spike times t with weight P(exactly one spike in
    // [t0, t)) * s_t and value f(ISI read from trace[t - 1]); leftover mass
    // takes the sentinel value. With hard spikes exactly one weight is 1 (or
    // none), so the value equals decode_isi; the backward sees what a spike
    // at any step would have produced.
    const double sentinel_v = sc.isi_alpha() / 1e6;
    Var none_yet(1.0), one_so_far(0.0), mixed(0.0), mass(0.0);
    for (std::size_t t = t0; t < end; ++t) {
      if (t > t0 && trace[t - 1].v > 0.0) {
        const Var w = one_so_far * s[t];
        if (!w.is_constant() || w.v != 0.0) {
          const Var isi_v = p.tau * (-ad::log(trace[t - 1])) + Var(1.0);
          mixed = mixed + w * (Var(sc.bias_term()) + Var(sc.isi_alpha()) / isi_v);
          mass = mass + w;
        }
      }
      const Var next_one = one_so_far * (Var(1.0) - s[t]) + none_yet * s[t];
      none_yet = none_yet * (Var(1.0) - s[t]);
      one_so_far = next_one;
    }
    out.estimate.push_back(mixed + (Var(1.0) - mass) * Var(sentinel_v));
  }
  return out;
}

ad::Var batch_max(const std::vector<ad::Var>& xs) {
  ad::Var m(0.0);
  for (const auto& x : xs) m = ad::max(m, x);
  return m;
}

}  // namespace

ad::Var diff_batch_loss(const DiffParams& p, const std::vector<TapSeries>& taps,
                        const std::vector<std::vector<double>>& truths,
                        const TrainConfig& cfg, SpikeMode mode) {
  using ad::Var;
  if (taps.size() != truths.size()) throw std::invalid_argument("taps/truth mismatch");
  const Var dg = ad::sigmoid(p.p_g), dI = ad::sigmoid(p.p_I), dV = ad::sigmoid(p.p_V);
  const Var trace_decay = ad::exp(Var(-1.0) / p.tau);
  const bool per_timestep = cfg.stimulus.noise_rate > 0.0;

  std::vector<Var> est;
  std::vector<double> truth;
  Var reg;
  for (std::size_t i = 0; i < taps.size(); ++i) {
    const DiffSample d = diff_sample(p, dg, dI, dV, trace_decay, taps[i], cfg, mode);
    reg = reg + ad::square(d.spikes);
    const std::vector<double>& y = truths[i];
    const std::size_t T = y.size();
    std::vector<long> idx(T, -1);
    for (std::size_t k = 0; k < d.onset_t.size(); ++k)
      if (d.onset_t[k] < T) idx[d.onset_t[k]] = static_cast<long>(k);

    if (per_timestep) {
      for (std::size_t t = 0; t < T; ++t) {
        const Var e = idx[t] >= 0 ? d.estimate[static_cast<std::size_t>(idx[t])] : Var(0.0);
        if (e.v != 0.0 || y[t] != 0.0) {
          est.push_back(e);
          truth.push_back(y[t]);
        }
      }
    } else {
      for (std::size_t t = 0; t < T; ++t) {
        if (y[t] == 0.0) continue;
        const long k = match_onset(t, T, [&](std::size_t u) { return idx[u]; });
        est.push_back(k >= 0 ? d.estimate[static_cast<std::size_t>(k)] : Var(0.0));
        truth.push_back(y[t]);
      }
    }
  }

  Var loss;
  if (!est.empty()) {
    Var me = batch_max(est);
    if (!(me.v > 0.0)) me = Var(1.0);
    double my = *std::max_element(truth.begin(), truth.end());
    if (!(my > 0.0)) my = 1.0;
    for (std::size_t i = 0; i < est.size(); ++i)
      loss = loss + ad::abs(est[i] / me - Var(truth[i] / my));
    loss = loss / Var(static_cast<double>(est.size()));
  }
  if (!taps.empty() && cfg.reg_lambda > 0.0)
    loss = loss + Var(cfg.reg_lambda / static_cast<double>(taps.size())) * reg;
  return loss;
}

// Training loop --------------------------------------------------------------------

namespace {

std::string describe(const TrainedModel& m) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "w_fac=%g p_g=%g p_I=%g p_V=%g trace_tau=%g",
                m.params.w_fac, m.params.p_g, m.params.p_I, m.params.p_V, m.trace_tau);
  return buf;
}

int sweep_stcf(const TrainedModel& model, const TrainConfig& cfg,
               const std::vector<TrainSample>& held) {
  const bool per_timestep = cfg.stimulus.noise_rate > 0.0;
  int best_n = model.stcf.n_required();
  double best = std::numeric_limits<double>::infinity();
  for (int n = 0; n <= 8; ++n) {
    TrainedModel m = model;
    m.stcf = StcfConfig(n, model.stcf.window());
    const EvalResult ev = evaluate_model(m, cfg.decode_config(), cfg.kind, held, per_timestep);
    // A silent detector scores mean(truth) and must never win the sweep.
    if (ev.degenerate) continue;
    if (ev.loss < best) {
      best = ev.loss;
      best_n = n;
    }
  }
  return best_n;
}

}  // namespace

TrainResult train_tde(const TrainConfig& cfg) {
  cfg.validate();
  TrainResult res;
  TrainedModel& model = res.model;
  model.params = cfg.init;
  model.stcf = cfg.stcf;
  model.trace_tau = cfg.trace_tau;

  const bool isi = cfg.inference_mode == DecodeMode::Isi;
  const bool per_timestep = cfg.stimulus.noise_rate > 0.0;
  std::vector<TrainSample> held;
  if ((cfg.stcf_search_period > 0 || cfg.keep_best) && cfg.epochs > 0)
    held = make_batch(cfg.stimulus, cfg.batch_size, cfg.seed ^ 0x68656c64ULL);
  auto held_loss = [&](const TrainedModel& m) {
    const EvalResult ev = evaluate_model(m, cfg.decode_config(), cfg.kind, held, per_timestep);
    return ev.degenerate ? std::numeric_limits<double>::infinity()
                         : ev.loss + cfg.reg_lambda * ev.mean_sq_spikes;
  };
  TrainedModel best = model;
  double best_loss = cfg.keep_best && cfg.epochs > 0
                         ? held_loss(model)
                         : std::numeric_limits<double>::infinity();

  std::array<double, 5> m{}, v{};
  ad::Tape tape;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    TrainConfig phase = cfg;
    if (isi && epoch < cfg.isi_warmup_epochs) phase.inference_mode = DecodeMode::Count;
    if (cfg.stcf_search_period > 0 && epoch % cfg.stcf_search_period == 0)
      model.stcf = StcfConfig(sweep_stcf(model, phase, held), model.stcf.window());

    const auto batch = make_batch(cfg.stimulus, cfg.batch_size,
                                  splitmix64(cfg.seed) + static_cast<std::uint64_t>(epoch));
    std::vector<TapSeries> taps;
    std::vector<std::vector<double>> truths;
    for (const auto& s : batch) {
      taps.push_back(sample_taps(s, model.stcf));
      truths.push_back(s.truth);
    }

    tape.clear();
    ad::ScopedTape scope(tape);
    DiffParams p{tape.leaf(model.params.w_fac), tape.leaf(model.params.p_g),
                 tape.leaf(model.params.p_I), tape.leaf(model.params.p_V),
                 tape.leaf(model.trace_tau)};
    const ad::Var loss = diff_batch_loss(p, taps, truths, phase, SpikeMode::Surrogate);
    if (!std::isfinite(loss.v))
      throw DivergenceError("loss is not finite at epoch " + std::to_string(epoch) +
                            ": " + describe(model));
    const auto adj = tape.gradient(loss);

    const EvalResult ev =
        evaluate_model(model, phase.decode_config(), cfg.kind, batch, per_timestep);
    res.history.loss.push_back(loss.v);
    res.history.pearson_r.push_back(
        ev.pearson_r.value_or(std::numeric_limits<double>::quiet_NaN()));
    res.history.mean_spikes.push_back(ev.mean_spikes);
    res.history.fta.push_back(ev.fta);
    res.history.stcf_n.push_back(model.stcf.n_required());

    std::array<double*, 5> values = {&model.params.w_fac, &model.params.p_g,
                                     &model.params.p_I, &model.params.p_V,
                                     &model.trace_tau};
    const std::array<int, 5> ids = {p.w_fac.id, p.p_g.id, p.p_I.id, p.p_V.id, p.tau.id};
    const int n_trained = isi ? 5 : 4;
    const double b1t = 1.0 - std::pow(cfg.beta1, epoch + 1);
    const double b2t = 1.0 - std::pow(cfg.beta2, epoch + 1);
    for (int k = 0; k < n_trained; ++k) {
      const double gk = adj[static_cast<std::size_t>(ids[k])];
      if (!std::isfinite(gk))
        throw DivergenceError("gradient is not finite at epoch " + std::to_string(epoch) +
                              ": " + describe(model));
      m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * gk;
      v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * gk * gk;
      *values[k] -= cfg.learning_rate * (m[k] / b1t) / (std::sqrt(v[k] / b2t) + 1e-8);
    }
    model.params.w_fac = std::max(model.params.w_fac, 1e-3);
    model.trace_tau = std::max(model.trace_tau, 0.1);

    if (cfg.keep_best) {
      const double hl = held_loss(model);
      res.history.held_loss.push_back(hl);
      if (hl < best_loss) {
        best_loss = hl;
        best = model;
        res.history.best_epoch = epoch;
      }
    }
  }
  if (cfg.keep_best) model = best;
  return res;
}

// Serialization ---------------------------------------------------------------------

namespace {
constexpr const char* kModelMagic = "tde-params v1";

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}
}  // namespace

std::string format_model(const TrainedModel& m) {
  std::string s = std::string(kModelMagic) + "\n";
  s += "w_fac " + fmt(m.params.w_fac) + "\n";
  s += "p_g " + fmt(m.params.p_g) + "\n";
  s += "p_I " + fmt(m.params.p_I) + "\n";
  s += "p_V " + fmt(m.params.p_V) + "\n";
  s += "theta " + fmt(m.params.theta) + "\n";
  s += "trace_tau " + fmt(m.trace_tau) + "\n";
  s += "stcf_n_required " + std::to_string(m.stcf.n_required()) + "\n";
  s += "stcf_window " + std::to_string(m.stcf.window()) + "\n";
  return s;
}

void write_model(const TrainedModel& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << format_model(m);
}

TrainedModel parse_model(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kModelMagic)
    throw ParseError("missing '" + std::string(kModelMagic) + "' header", 1);
  std::map<std::string, double> kv;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string key, val, extra;
    if (!(ls >> key >> val) || (ls >> extra)) throw ParseError("expected 'name value'", lineno);
    try {
      std::size_t used = 0;
      kv[key] = std::stod(val, &used);
      if (used != val.size()) throw std::invalid_argument(val);
    } catch (const std::exception&) {
      throw ParseError("bad value for " + key, lineno);
    }
  }
  auto need = [&](const char* k) {
    auto it = kv.find(k);
    if (it == kv.end()) throw ParseError(std::string("missing field ") + k, 0);
    return it->second;
  };
  TrainedModel m;
  m.params.w_fac = need("w_fac");
  m.params.p_g = need("p_g");
  m.params.p_I = need("p_I");
  m.params.p_V = need("p_V");
  m.params.theta = need("theta");
  m.trace_tau = need("trace_tau");
  try {
    m.params.validate();
    m.stcf = StcfConfig(static_cast<int>(need("stcf_n_required")),
                        static_cast<int>(need("stcf_window")));
  } catch (const std::invalid_argument& e) {
    throw ParseError(e.what(), 0);
  }
  if (!(m.trace_tau > 0.0)) throw ParseError("trace_tau must be positive", 0);
  for (const auto& [k, _] : kv)
    if (k != "w_fac" && k != "p_g" && k != "p_I" && k != "p_V" && k != "theta" &&
        k != "trace_tau" && k != "stcf_n_required" && k != "stcf_window")
      throw ParseError("unknown field " + k, 0);
  return m;
}

TrainedModel read_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string(), 0);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_model(ss.str());
}

void write_history_csv(const TrainHistory& h, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "epoch,loss,pearson_r,mean_spikes,fta,stcf_n\n";
  for (std::size_t e = 0; e < h.loss.size(); ++e)
    out << e << ',' << fmt(h.loss[e]) << ',' << fmt(h.pearson_r[e]) << ','
        << fmt(h.mean_spikes[e]) << ',' << fmt(h.fta[e]) << ',' << h.stcf_n[e] << '\n';
}

}  // namespace tde3

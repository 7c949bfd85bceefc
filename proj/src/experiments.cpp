#include "tde3/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <stdexcept>

namespace tde3 {

void DsiConfig::validate() const {
  if (rounds < 1 || stimuli_per_round < 1)
    throw std::invalid_argument("DSI protocol needs at least one round and stimulus");
  if (!(w_min > 0.0 && w_min <= w_max)) throw std::invalid_argument("bad w_fac range");
  if (!(tau_min > 0.0 && tau_min <= tau_max))
    throw std::invalid_argument("bad time-constant range");
  if (velocities.empty()) throw std::invalid_argument("velocity set is empty");
  if (!(max_grey_fraction >= 0.0 && max_grey_fraction <= 0.8))
    throw std::invalid_argument("grey fraction must lie in [0, 0.8]");
  if (!(timestep > 0.0)) throw std::invalid_argument("timestep must be positive");
}

namespace {

double log_uniform(double lo, double hi, std::mt19937_64& rng) {
  if (lo == hi) return lo;
  std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
  return std::exp(u(rng));
}

std::optional<MeanStd> summarize(const std::vector<double>& xs) {
  if (xs.empty()) return std::nullopt;
  MeanStd m;
  m.n = xs.size();
  for (double x : xs) m.mean += x;
  m.mean /= static_cast<double>(xs.size());
  for (double x : xs) m.std += (x - m.mean) * (x - m.mean);
  m.std = std::sqrt(m.std / static_cast<double>(xs.size()));
  return m;
}

std::optional<double> dsi_of(const std::array<std::size_t, 4>& c) {
  return dsi({static_cast<double>(c[0]), static_cast<double>(c[1]),
              static_cast<double>(c[2]), static_cast<double>(c[3])});
}

}  // namespace

DsiSummary run_dsi_protocol(const DsiConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(splitmix64(cfg.seed));
  std::uniform_int_distribution<std::size_t> pick_v(0, cfg.velocities.size() - 1);
  std::uniform_int_distribution<int> pick_dir(0, 3);
  std::uniform_real_distribution<double> pick_grey(0.0, cfg.max_grey_fraction);
  SimulatorConfig sim;
  sim.timestep = cfg.timestep;

  DsiSummary out;
  std::vector<double> d2, d3;
  for (int r = 0; r < cfg.rounds; ++r) {
    DsiRound round;
    round.params = TdeParams::from_time_constants(
        log_uniform(cfg.w_min, cfg.w_max, rng), log_uniform(cfg.tau_min, cfg.tau_max, rng),
        log_uniform(cfg.tau_min, cfg.tau_max, rng), log_uniform(cfg.tau_min, cfg.tau_max, rng));
    for (int i = 0; i < cfg.stimuli_per_round; ++i) {
      const auto dir = static_cast<Direction>(pick_dir(rng));
      const double v = cfg.velocities[pick_v(rng)];
      const double grey = pick_grey(rng);
      const Stimulus stim = gen_texture_stimulus(grey, dir, v, rng(), cfg.texture);
      const BinnedEvents b = bin_events(emit_events(stim, sim), cfg.timestep, true);

      const TapLayout taps =
          detector_taps(Direction::LeftRight, stim.meta.ref_x, stim.meta.ref_y, 1);
      const std::size_t T = b.bins();
      std::vector<std::uint8_t> fac(T), trig(T), inh(T);
      for (std::size_t t = 0; t < T; ++t) {
        fac[t] = b.at(t, taps.fac_y, taps.fac_x);
        trig[t] = b.at(t, taps.trig_y, taps.trig_x);
        inh[t] = b.at(t, taps.inh_y, taps.inh_x);
      }
      const auto d = static_cast<std::size_t>(dir);
      round.tde2[d] += tde_run(fac, trig, inh, round.params, TdeKind::Tde2).spike_count();
      round.tde3[d] += tde_run(fac, trig, inh, round.params, TdeKind::Tde3).spike_count();
    }
    round.dsi2 = dsi_of(round.tde2);
    round.dsi3 = dsi_of(round.tde3);
    if (round.dsi2) d2.push_back(*round.dsi2);
    if (round.dsi3) d3.push_back(*round.dsi3);
    out.rounds.push_back(round);
  }
  out.tde2 = summarize(d2);
  out.tde3 = summarize(d3);
  if (!d3.empty()) out.tde3_min = *std::min_element(d3.begin(), d3.end());
  return out;
}

void write_dsi_csv(const DsiSummary& s, const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << "round,w_fac,d_g,d_I,d_V";
  for (const char* kind : {"tde2", "tde3"})
    for (Direction d : kAllDirections) f << ',' << kind << '_' << direction_name(d);
  f << ",dsi_tde2,dsi_tde3\n";
  auto opt = [](const std::optional<double>& x) {
    char buf[32];
    if (!x) return std::string("nan");
    std::snprintf(buf, sizeof buf, "%.9g", *x);
    return std::string(buf);
  };
  for (std::size_t r = 0; r < s.rounds.size(); ++r) {
    const DsiRound& d = s.rounds[r];
    char buf[160];
    std::snprintf(buf, sizeof buf, "%zu,%.9g,%.9g,%.9g,%.9g", r, d.params.w_fac,
                  d.params.decay_g(), d.params.decay_I(), d.params.decay_V());
    f << buf;
    for (std::size_t c : d.tde2) f << ',' << c;
    for (std::size_t c : d.tde3) f << ',' << c;
    f << ',' << opt(d.dsi2) << ',' << opt(d.dsi3) << '\n';
  }
}

EventStream flow_scene_events(const FlowSceneConfig& cfg) {
  TextureOptions tex;
  tex.field_size = cfg.size;
  tex.thickness = cfg.size;
  tex.length = cfg.length;
  tex.bar_width = cfg.bar_width;
  const Stimulus stim =
      gen_texture_stimulus(cfg.grey_fraction, cfg.direction, cfg.velocity, cfg.seed, tex);
  SimulatorConfig sim;
  sim.timestep = cfg.timestep;
  return emit_events(stim, sim);
}

SpikeBudget compare_spike_budgets(const BinnedEvents& binned, const DetectorGrid& grid,
                                  const DecodeConfig& decode) {
  DetectorGrid g = grid;
  SpikeBudget b;
  g.set_kind(TdeKind::Tde2);
  b.tde2 = run_flow(binned, g, decode).stats.total_spikes;
  g.set_kind(TdeKind::Tde3);
  b.tde3 = run_flow(binned, g, decode).stats.total_spikes;
  if (b.tde2 > 0) b.ratio = static_cast<double>(b.tde3) / static_cast<double>(b.tde2);
  return b;
}

}  // namespace tde3

#include "tde3/decode.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace tde3 {

double VelocityScale::count_alpha() const {
  switch (kind) {
    case Kind::Wide: return 0.1;
    case Kind::Narrow: return 0.001;
    case Kind::Custom: return alpha;
  }
  return alpha;
}

double VelocityScale::isi_alpha() const {
  switch (kind) {
    case Kind::Wide: return 1.0;     // maximal velocity at ISI = 1
    case Kind::Narrow: return 0.015;  // v_max - v_min of the narrow set
    case Kind::Custom: return alpha;
  }
  return alpha;
}

double VelocityScale::bias_term() const {
  switch (kind) {
    case Kind::Wide: return 0.0;
    case Kind::Narrow: return 0.024;
    case Kind::Custom: return bias;
  }
  return bias;
}

void DecodeConfig::validate() const {
  if (count_window < 1) throw std::invalid_argument("count window must be >= 1");
  if (!(trace_tau > 0.0)) throw std::invalid_argument("trace tau must be positive");
  if (!(isi_sentinel >= 1e3)) throw std::invalid_argument("ISI sentinel must be >= 1e3");
}

double count_to_velocity(double count, const VelocityScale& scale) {
  if (count <= 0.0) return 0.0;
  return scale.bias_term() + scale.count_alpha() * count;
}

double isi_to_velocity(double isi, const VelocityScale& scale, double sentinel) {
  if (isi >= sentinel) return scale.isi_alpha() / isi;
  return scale.bias_term() + scale.isi_alpha() / isi;
}

namespace {

std::vector<std::size_t> onset_times(const TdeOutput& out) {
  std::vector<std::size_t> t;
  for (std::size_t i = 0; i < out.onsets.size(); ++i)
    if (out.onsets[i]) t.push_back(i);
  return t;
}

}  // namespace

std::vector<VelocityEstimate> decode_spike_count(const TdeOutput& out,
                                                 const DecodeConfig& cfg) {
  cfg.validate();
  std::vector<VelocityEstimate> est;
  const std::size_t n = out.spikes.size();
  for (std::size_t t0 : onset_times(out)) {
    const std::size_t end = std::min(n, t0 + static_cast<std::size_t>(cfg.count_window));
    const auto count = std::count(out.spikes.begin() + static_cast<long>(t0),
                                  out.spikes.begin() + static_cast<long>(end), 1);
    est.push_back({t0, count_to_velocity(static_cast<double>(count), cfg.scale)});
  }
  return est;
}

double isi_from_trace(double trace_value, double x0, double tau) {
  if (!(trace_value > 0.0) || trace_value > x0)
    throw std::domain_error("trace value must lie in (0, x0]");
  if (!(tau > 0.0)) throw std::domain_error("trace tau must be positive");
  return tau * std::log(x0 / trace_value) + 1.0;
}

std::vector<double> spike_trace(const std::vector<std::uint8_t>& spikes, double tau) {
  const double decay = std::exp(-1.0 / tau);
  std::vector<double> x(spikes.size());
  double level = 0.0;
  for (std::size_t t = 0; t < spikes.size(); ++t) {
    level = spikes[t] ? 1.0 : level * decay;
    x[t] = level;
  }
  return x;
}

std::vector<VelocityEstimate> decode_isi(const TdeOutput& out,
                                         const DecodeConfig& cfg) {
  cfg.validate();
  const auto trace = spike_trace(out.spikes, cfg.trace_tau);
  const auto onsets = onset_times(out);
  std::vector<VelocityEstimate> est;
  for (std::size_t k = 0; k < onsets.size(); ++k) {
    const std::size_t t0 = onsets[k];
    const std::size_t end = k + 1 < onsets.size() ? onsets[k + 1] : out.spikes.size();
    std::size_t found = 0, second = 0;
    for (std::size_t t = t0; t < end && found < 2; ++t)
      if (out.spikes[t] && ++found == 2) second = t;
    double isi = cfg.isi_sentinel;
    if (found == 2) isi = isi_from_trace(trace[second - 1], 1.0, cfg.trace_tau);
    est.push_back({t0, isi_to_velocity(isi, cfg.scale, cfg.isi_sentinel)});
  }
  return est;
}

std::vector<VelocityEstimate> decode(const TdeOutput& out, const DecodeConfig& cfg) {
  return cfg.mode == DecodeMode::Count ? decode_spike_count(out, cfg)
                                       : decode_isi(out, cfg);
}

std::vector<double> estimate_timeline(const std::vector<VelocityEstimate>& est,
                                      std::size_t length) {
  std::vector<double> line(length, 0.0);
  for (const auto& e : est)
    if (e.onset_t < length) line[e.onset_t] += e.value;
  return line;
}

void write_estimates_csv(const std::vector<VelocityEstimate>& est,
                         const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "onset_t,value\n";
  char buf[64];
  for (const auto& e : est) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g\n", e.onset_t, e.value);
    out << buf;
  }
}

}  // namespace tde3

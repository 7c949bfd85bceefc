#include "tde3/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "tde3/events.hpp"

namespace tde3 {

namespace {

MeanStd summarize(const std::vector<double>& xs) {
  MeanStd s;
  s.n = xs.size();
  if (xs.empty()) return s;
  double sum = 0.0;
  for (double x : xs) sum += x;
  s.mean = sum / static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(ss / static_cast<double>(xs.size()));
  return s;
}

void require_same_shape(const FlowField& a, const FlowField& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("flow fields differ in shape");
}

}  // namespace

std::optional<double> dsi(const std::array<double, 4>& c) {
  const double total = c[0] + c[1] + c[2] + c[3];
  if (!(total > 0.0)) return std::nullopt;
  return c[0] / total;
}

std::optional<MeanStd> aae(const FlowField& flow, const FlowField& gt) {
  require_same_shape(flow, gt);
  std::vector<double> angles;
  for (std::size_t i = 0; i < flow.cells(); ++i) {
    if (!flow.valid(i)) continue;
    const double nv = std::hypot(flow.vx(i), flow.vy(i));
    const double nu = std::hypot(gt.vx(i), gt.vy(i));
    if (nv == 0.0 || nu == 0.0) continue;
    // atan2 of cross and dot stays accurate near 0 and 180 deg, where acos does not.
    const double dot = flow.vx(i) * gt.vx(i) + flow.vy(i) * gt.vy(i);
    const double cross = flow.vx(i) * gt.vy(i) - flow.vy(i) * gt.vx(i);
    angles.push_back(std::atan2(std::abs(cross), dot) * 180.0 / std::numbers::pi);
  }
  if (angles.empty()) return std::nullopt;
  return summarize(angles);
}

EndpointErrors aee_raee(const FlowField& flow, const FlowField& gt) {
  require_same_shape(flow, gt);
  std::vector<double> abs_err, rel_err;
  for (std::size_t i = 0; i < flow.cells(); ++i) {
    if (!flow.valid(i)) continue;
    const double e = std::hypot(flow.vx(i) - gt.vx(i), flow.vy(i) - gt.vy(i));
    abs_err.push_back(e);
    const double nu = std::hypot(gt.vx(i), gt.vy(i));
    if (nu > 0.0) rel_err.push_back(e / nu);
  }
  return {summarize(abs_err), summarize(rel_err)};
}

std::optional<double> pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("pearson: length mismatch");
  const std::size_t n = a.size();
  if (n < 2) return std::nullopt;
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return std::nullopt;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

RelativeError relative_error(std::span<const double> est, std::span<const double> truth) {
  if (est.size() != truth.size())
    throw std::invalid_argument("relative_error: length mismatch");
  RelativeError r;
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < est.size(); ++i) {
    if (truth[i] == 0.0) {
      ++r.excluded;
      continue;
    }
    sum += std::abs(est[i] - truth[i]) / std::abs(truth[i]);
    ++n;
  }
  if (n > 0) r.mean = sum / static_cast<double>(n);
  return r;
}

std::optional<double> speed_correlation(const FlowField& flow, const FlowField& gt) {
  require_same_shape(flow, gt);
  std::vector<double> a, b;
  for (std::size_t i = 0; i < flow.cells(); ++i) {
    if (!flow.valid(i)) continue;
    const double nu = std::hypot(gt.vx(i), gt.vy(i));
    if (nu == 0.0) continue;
    a.push_back(std::hypot(flow.vx(i), flow.vy(i)));
    b.push_back(nu);
  }
  return pearson(a, b);
}

namespace {

using Fields = std::vector<std::pair<std::string, std::optional<double>>>;

Fields report_fields(const MetricsReport& r) {
  auto mean_of = [](const std::optional<MeanStd>& m) {
    return m ? std::optional<double>(m->mean) : std::nullopt;
  };
  auto std_of = [](const std::optional<MeanStd>& m) {
    return m ? std::optional<double>(m->std) : std::nullopt;
  };
  return {{"dsi", r.dsi},
          {"mean_aae_deg", mean_of(r.aae_deg)},
          {"std_aae_deg", std_of(r.aae_deg)},
          {"mean_aee", mean_of(r.aee)},
          {"std_aee", std_of(r.aee)},
          {"mean_raee", mean_of(r.raee)},
          {"std_raee", std_of(r.raee)},
          {"pearson_r", r.pearson_r},
          {"mean_relative_error", r.mean_relative_error},
          {"total_spikes", r.total_spikes},
          {"fraction_spikes_pd", r.fraction_spikes_pd}};
}

std::string format_value(const std::optional<double>& v) {
  if (!v) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", *v);
  return buf;
}

}  // namespace

std::string format_report(const MetricsReport& report) {
  std::string s;
  for (const auto& [k, v] : report_fields(report)) s += k + " = " + format_value(v) + "\n";
  return s;
}

void write_report(const MetricsReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << format_report(report);
}

MetricsReport read_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string(), 0);
  std::map<std::string, std::optional<double>> kv;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected key = value", lineno);
    std::string key = line.substr(0, eq), val = line.substr(eq + 1);
    auto trim = [](std::string& s) {
      s.erase(0, s.find_first_not_of(" \t"));
      s.erase(s.find_last_not_of(" \t\r") + 1);
    };
    trim(key);
    trim(val);
    if (val == "nan") {
      kv[key] = std::nullopt;
      continue;
    }
    try {
      kv[key] = std::stod(val);
    } catch (const std::exception&) {
      throw ParseError("bad number for " + key, lineno);
    }
  }
  auto get = [&](const char* k) -> std::optional<double> {
    auto it = kv.find(k);
    return it == kv.end() ? std::nullopt : it->second;
  };
  auto pair = [&](const char* m, const char* s) -> std::optional<MeanStd> {
    auto a = get(m), b = get(s);
    if (!a) return std::nullopt;
    return MeanStd{*a, b.value_or(0.0), 0};
  };
  MetricsReport r;
  r.dsi = get("dsi");
  r.aae_deg = pair("mean_aae_deg", "std_aae_deg");
  r.aee = pair("mean_aee", "std_aee");
  r.raee = pair("mean_raee", "std_raee");
  r.pearson_r = get("pearson_r");
  r.mean_relative_error = get("mean_relative_error");
  r.total_spikes = get("total_spikes");
  r.fraction_spikes_pd = get("fraction_spikes_pd");
  return r;
}

void write_report_csv(const MetricsReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  const auto fields = report_fields(report);
  for (std::size_t i = 0; i < fields.size(); ++i)
    out << (i ? "," : "") << fields[i].first;
  out << "\n";
  for (std::size_t i = 0; i < fields.size(); ++i)
    out << (i ? "," : "") << format_value(fields[i].second);
  out << "\n";
}

}  // namespace tde3

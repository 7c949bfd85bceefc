#include "tde3/flownet.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>

namespace tde3 {

DetectorGrid::DetectorGrid(int width, int height, int uniform_spacing, TdeParams params,
                           TdeKind kind)
    : DetectorGrid(width, height,
                   std::vector<int>(static_cast<std::size_t>(std::max(width, 0)) *
                                        std::max(height, 0),
                                    uniform_spacing),
                   params, kind) {}

DetectorGrid::DetectorGrid(int width, int height, std::vector<int> spacing,
                           TdeParams params, TdeKind kind)
    : width_(width), height_(height), spacing_(std::move(spacing)),
      params_(params), kind_(kind) {
  if (width <= 0 || height <= 0) throw std::invalid_argument("grid must be non-empty");
  if (spacing_.size() != static_cast<std::size_t>(width) * height)
    throw std::invalid_argument("spacing map does not match grid size");
  for (int s : spacing_)
    if (s < 1) throw std::invalid_argument("spacing must be >= 1");
  params_.validate();
}

bool DetectorGrid::enabled(Direction d, int x, int y) const {
  const TapLayout t = detector_taps(d, x, y, spacing(x, y));
  auto inside = [&](int px, int py) {
    return px >= 0 && px < width_ && py >= 0 && py < height_;
  };
  return inside(t.fac_x, t.fac_y) && inside(t.inh_x, t.inh_y);
}

DetectorGrid build_retina(int width, int height, const std::vector<int>& bands,
                          TdeParams params, TdeKind kind) {
  if (bands.empty()) throw std::invalid_argument("band list is empty");
  if (bands.front() < 1) throw std::invalid_argument("band spacing must be >= 1");
  for (std::size_t i = 1; i < bands.size(); ++i)
    if (bands[i] <= bands[i - 1])
      throw std::invalid_argument("band spacings must be strictly increasing");
  if (width <= 0 || height <= 0) throw std::invalid_argument("grid must be non-empty");

  const double cx = (width - 1) / 2.0, cy = (height - 1) / 2.0;
  const double R = std::hypot(cx, cy);
  const auto K = static_cast<int>(bands.size());
  std::vector<int> spacing(static_cast<std::size_t>(width) * height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const double r = std::hypot(x - cx, y - cy);
      int k = R > 0.0 ? static_cast<int>(std::floor(r / R * K)) : 0;
      k = std::clamp(k, 0, K - 1);
      spacing[static_cast<std::size_t>(y) * width + x] = bands[static_cast<std::size_t>(k)];
    }
  return DetectorGrid(width, height, std::move(spacing), params, kind);
}

double FlowStats::share(Direction d) const {
  if (total_spikes == 0) return 0.0;
  return static_cast<double>(spikes_by_direction[static_cast<int>(d)]) /
         static_cast<double>(total_spikes);
}

FlowResult run_flow(const BinnedEvents& binned, const DetectorGrid& grid,
                    const DecodeConfig& decode) {
  if (binned.width() != grid.width() || binned.height() != grid.height())
    throw std::invalid_argument("binned events do not match grid size");
  decode.validate();
  const std::size_t T = binned.bins();
  FlowResult res{FlowField(T, grid.height(), grid.width(), binned.dt()), {}};
  if (!(binned.dt() > 0.0)) throw std::invalid_argument("bin width must be positive");

  // Occupancy pooled over channels per pixel, stored pixel-major for contiguous taps.
  const std::size_t npix = static_cast<std::size_t>(grid.width()) * grid.height();
  std::vector<std::uint8_t> series(npix * T);
  for (std::size_t t = 0; t < T; ++t)
    for (int y = 0; y < grid.height(); ++y)
      for (int x = 0; x < grid.width(); ++x)
        for (int c = 0; c < binned.channels(); ++c)
          if (binned.at(t, c, y, x))
            series[(static_cast<std::size_t>(y) * grid.width() + x) * T + t] = 1;
  auto tap = [&](int x, int y) {
    return std::span<const std::uint8_t>(
        series.data() + (static_cast<std::size_t>(y) * grid.width() + x) * T, T);
  };

  FlowField& flow = res.flow;
  for (int y = 0; y < grid.height(); ++y)
    for (int x = 0; x < grid.width(); ++x)
      for (Direction d : kAllDirections) {
        if (!grid.enabled(d, x, y)) continue;
        const int s = grid.spacing(x, y);
        const TapLayout taps = detector_taps(d, x, y, s);
        const TdeOutput out = tde_run(tap(taps.fac_x, taps.fac_y),
                                      tap(taps.trig_x, taps.trig_y),
                                      tap(taps.inh_x, taps.inh_y), grid.params(),
                                      grid.kind());
        const std::size_t spikes = out.spike_count();
        res.stats.total_spikes += spikes;
        res.stats.spikes_by_direction[static_cast<int>(d)] += spikes;

        const Step step = motion_step(d);
        for (const VelocityEstimate& e : tde3::decode(out, decode)) {
          const double v = e.value * s / binned.dt();
          const std::size_t i = flow.index(e.onset_t, y, x);
          flow.vx(i) += step.dx * v;
          flow.vy(i) += step.dy * v;
          flow.set_valid(i, true);
        }
      }
  return res;
}

std::vector<ImuSample> load_imu(const std::filesystem::path& path,
                                const ImuColumns& cols) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string(), 0);
  const int needed = std::max({cols.t, cols.pitch, cols.yaw, cols.roll});
  if (std::min({cols.t, cols.pitch, cols.yaw, cols.roll}) < 0)
    throw std::invalid_argument("IMU column indices must be >= 0");

  std::vector<ImuSample> samples;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    std::vector<double> fields;
    std::string tok;
    while (ls >> tok) {
      try {
        std::size_t used = 0;
        fields.push_back(std::stod(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw ParseError("non-numeric IMU field '" + tok + "'", lineno);
      }
    }
    if (static_cast<int>(fields.size()) <= needed)
      throw ParseError("IMU row has too few columns", lineno);
    ImuSample s{fields[cols.t], fields[cols.pitch], fields[cols.yaw], fields[cols.roll]};
    if (!std::isfinite(s.t) || !std::isfinite(s.pitch) || !std::isfinite(s.yaw) ||
        !std::isfinite(s.roll))
      throw ParseError("non-finite IMU value", lineno);
    samples.push_back(s);
  }
  return samples;
}

FlowField imu_ground_truth(const std::vector<ImuSample>& samples, int width, int height,
                           std::size_t bins, double dt, PixelPoint e0, double k) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  std::vector<double> pitch(bins, 0.0), yaw(bins, 0.0), roll(bins, 0.0);
  std::vector<std::size_t> n(bins, 0);
  for (const ImuSample& s : samples) {
    if (s.t < 0.0) continue;
    const auto b = static_cast<std::size_t>(std::floor(s.t / dt + 1e-9));
    if (b >= bins) continue;
    pitch[b] += s.pitch;
    yaw[b] += s.yaw;
    roll[b] += s.roll;
    ++n[b];
  }
  std::string missing;
  for (std::size_t b = 0; b < bins; ++b)
    if (n[b] == 0) missing += (missing.empty() ? "" : ",") + std::to_string(b);
  if (!missing.empty()) throw std::runtime_error("IMU samples missing for bins " + missing);

  FlowField flow(bins, height, width, dt);
  for (std::size_t b = 0; b < bins; ++b) {
    const double ax = pitch[b] / n[b] * dt;
    const double ay = yaw[b] / n[b] * dt;
    const double az = roll[b] / n[b] * dt * std::numbers::pi / 180.0;
    const double tx = k * ay, ty = k * ax;
    const double c = std::cos(az), s = std::sin(az);
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) {
        const double px = x - e0.x + tx, py = y - e0.y + ty;
        const double ex = c * px - s * py + e0.x;
        const double ey = s * px + c * py + e0.y;
        const std::size_t i = flow.index(b, y, x);
        flow.vx(i) = (ex - x) / dt;
        flow.vy(i) = (ey - y) / dt;
        flow.set_valid(i, true);
      }
  }
  return flow;
}

EventStream mirror_horizontal(const EventStream& stream) {
  std::vector<Event> ev(stream.events().begin(), stream.events().end());
  for (Event& e : ev) e.x = stream.width() - 1 - e.x;
  return EventStream(std::move(ev), stream.width(), stream.height(), stream.duration());
}

}  // namespace tde3

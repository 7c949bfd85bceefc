#include "tde3/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace tde3 {

namespace {

// Pixel-centre crossing tolerance; keeps exact multiples of 1/velocity from
// landing one frame late.
constexpr double kCrossEps = 1e-9;


double unit_offset(std::uint64_t seed) {
  std::mt19937_64 rng(splitmix64(seed));
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

void fill_truth_from_reference(Stimulus& s) {
  s.velocity_truth.assign(s.frames.size(), 0.0);
  for (std::size_t t = 1; t < s.frames.size(); ++t)
    if (s.frames[t].at(s.meta.ref_y, s.meta.ref_x) !=
        s.frames[t - 1].at(s.meta.ref_y, s.meta.ref_x))
      s.velocity_truth[t] = s.meta.velocity;
}

}  // namespace

Stimulus gen_edge_stimulus(double velocity, int n_edges, double spacing,
                           int width, int height, std::uint64_t seed,
                           const EdgeOptions& opts) {
  if (!(velocity > 0.0)) throw std::invalid_argument("edge velocity must be positive");
  if (n_edges < 1) throw std::invalid_argument("need at least one edge");
  if (n_edges > 1 && !(spacing >= 1.0))
    throw std::invalid_argument("edge spacing must be >= 1 px");
  if (width < 1 || height < 1) throw std::invalid_argument("empty field");
  if (!(opts.background > 0.0) || !(opts.step_ratio > 0.0))
    throw std::invalid_argument("edge intensities must be positive");

  const int ref = opts.reference_column < 0 ? width / 2 : opts.reference_column;
  if (ref >= width) throw std::invalid_argument("reference column outside field");
  const double p0 = unit_offset(seed);
  const double sp = n_edges > 1 ? spacing : 0.0;

  auto edges_past = [&](int x, long t) {
    int count = 0;
    for (int k = 0; k < n_edges; ++k)
      if (p0 - k * sp + velocity * static_cast<double>(t) >= x + 0.5 - kCrossEps)
        ++count;
    return count;
  };
  // First frame at which the last edge has passed pixel x.
  auto last_arrival = [&](int x) {
    const double need = x + 0.5 - kCrossEps - (p0 - (n_edges - 1) * sp);
    long t = std::max(0L, static_cast<long>(std::ceil(need / velocity)));
    while (t > 0 && edges_past(x, t - 1) == n_edges) --t;
    while (edges_past(x, t) < n_edges) ++t;
    return t;
  };

  const long frames =
      std::max(last_arrival(width - 1), last_arrival(ref) + opts.tail) + 1;

  Stimulus s;
  s.meta = {Direction::LeftRight, velocity, sp, n_edges, ref, height / 2};
  s.frames.reserve(static_cast<std::size_t>(frames));
  std::vector<double> level(static_cast<std::size_t>(n_edges) + 1);
  for (int k = 0; k <= n_edges; ++k)
    level[k] = opts.background * std::pow(opts.step_ratio, k);
  for (long t = 0; t < frames; ++t) {
    Image img(width, height);
    for (int x = 0; x < width; ++x) {
      const double v = level[edges_past(x, t)];
      for (int y = 0; y < height; ++y) img.at(y, x) = v;
    }
    s.frames.push_back(std::move(img));
  }
  fill_truth_from_reference(s);
  return s;
}

std::vector<BarShade> draw_bar_texture(std::size_t n_bars, double grey_fraction,
                                       std::mt19937_64& rng) {
  if (!(grey_fraction >= 0.0 && grey_fraction <= 1.0))
    throw std::invalid_argument("grey fraction must lie in [0,1]");
  std::bernoulli_distribution is_grey(grey_fraction);
  std::bernoulli_distribution is_white(0.5);
  std::vector<BarShade> bars(n_bars);
  for (auto& b : bars)
    b = is_grey(rng) ? BarShade::Grey : (is_white(rng) ? BarShade::White : BarShade::Black);
  return bars;
}

Stimulus gen_texture_stimulus(double grey_fraction, Direction direction,
                              double velocity, std::uint64_t seed,
                              const TextureOptions& opts) {
  const int dir = static_cast<int>(direction);
  if (dir < 0 || dir > 3) throw std::invalid_argument("invalid motion direction");
  if (!(grey_fraction >= 0.0 && grey_fraction <= 0.8))
    throw std::invalid_argument("grey fraction must lie in [0, 0.8]");
  if (!(velocity > 0.0 && velocity <= 1.0))
    throw std::invalid_argument("texture velocity must lie in (0, 1] px/timestep");
  if (opts.bar_width < 1 || opts.length < opts.bar_width || opts.thickness < 1 ||
      opts.field_size < 3 || opts.field_size % 2 == 0)
    throw std::invalid_argument("bad texture geometry");

  std::mt19937_64 rng(splitmix64(seed));
  const double p0 = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  const auto bars = draw_bar_texture(
      static_cast<std::size_t>(opts.length / opts.bar_width), grey_fraction, rng);
  const double length = static_cast<double>(bars.size() * opts.bar_width);

  const int field = opts.field_size;
  const int centre = field / 2;
  const int half = opts.thickness / 2;
  const bool horizontal =
      direction == Direction::LeftRight || direction == Direction::RightLeft;
  const bool forward =
      direction == Direction::LeftRight || direction == Direction::TopBottom;

  auto shade_value = [&](BarShade b) {
    switch (b) {
      case BarShade::Black: return opts.black;
      case BarShade::Grey: return opts.grey;
      case BarShade::White: return opts.white;
    }
    return opts.background;
  };

  // Frames until the trailing edge has left the field.
  const long frames =
      static_cast<long>(std::ceil((field + length - p0) / velocity)) + 2;

  Stimulus s;
  s.meta = {direction, velocity, static_cast<double>(opts.bar_width),
            static_cast<int>(bars.size()), centre, centre};
  s.frames.reserve(static_cast<std::size_t>(frames));
  for (long t = 0; t < frames; ++t) {
    Image img(field, field, opts.background);
    // Leading edge position along the motion axis.
    const double travel = p0 + velocity * static_cast<double>(t);
    for (int along = 0; along < field; ++along) {
      const double centre_coord = along + 0.5;
      // Distance behind the leading edge, in texture coordinates.
      const double u = forward ? travel - centre_coord
                               : centre_coord - (field - travel);
      if (u < 0.0 || u >= length) continue;
      const auto bar = static_cast<std::size_t>(u / opts.bar_width);
      const double v = shade_value(bars[std::min(bar, bars.size() - 1)]);
      for (int across = centre - half; across <= centre + half; ++across) {
        if (across < 0 || across >= field) continue;
        if (horizontal)
          img.at(across, along) = v;
        else
          img.at(along, across) = v;
      }
    }
    s.frames.push_back(std::move(img));
  }
  fill_truth_from_reference(s);
  return s;
}

EventStream emit_events(const Stimulus& stimulus, const SimulatorConfig& cfg) {
  if (!(cfg.contrast_threshold > 0.0))
    throw std::invalid_argument("contrast threshold must be positive");
  if (!(cfg.timestep > 0.0)) throw std::invalid_argument("timestep must be positive");

  const int w = stimulus.width();
  const int h = stimulus.height();
  const double duration = static_cast<double>(stimulus.frames.size()) * cfg.timestep;
  if (stimulus.frames.empty()) return EventStream(w, h, 0.0);

  auto log_of = [](double v) {
    if (!(v > 0.0)) throw std::domain_error("intensity must be positive");
    return std::log(v);
  };

  std::vector<double> ref(stimulus.frames.front().pixels.size());
  for (std::size_t i = 0; i < ref.size(); ++i)
    ref[i] = log_of(stimulus.frames.front().pixels[i]);

  std::vector<Event> events;
  for (std::size_t t = 1; t < stimulus.frames.size(); ++t) {
    const Image& img = stimulus.frames[t];
    if (img.width != w || img.height != h)
      throw std::invalid_argument("frame size changes within stimulus");
    const double time = static_cast<double>(t) * cfg.timestep;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        const double l = log_of(img.pixels[i]);
        const double d = l - ref[i];
        if (d >= cfg.contrast_threshold) {
          events.push_back({time, x, y, Polarity::On});
          ref[i] = l;
        } else if (d <= -cfg.contrast_threshold) {
          events.push_back({time, x, y, Polarity::Off});
          ref[i] = l;
        }
      }
  }
  return EventStream(std::move(events), w, h, duration);
}

EventStream inject_noise(const EventStream& stream, double rate,
                         std::uint64_t seed) {
  if (!(rate >= 0.0)) throw std::invalid_argument("noise rate must be non-negative");
  if (rate == 0.0 || stream.duration() <= 0.0) return stream;

  std::vector<Event> events = stream.events();
  const double duration = stream.duration();
  const int w = stream.width();
  for (int y = 0; y < stream.height(); ++y)
    for (int x = 0; x < w; ++x) {
      const auto pixel = static_cast<std::uint64_t>(y) * w + x;
      std::mt19937_64 rng(splitmix64(seed ^ splitmix64(pixel + 1)));
      std::poisson_distribution<long> count(rate * duration);
      std::uniform_real_distribution<double> when(0.0, duration);
      std::bernoulli_distribution on(0.5);
      const long n = count(rng);
      for (long i = 0; i < n; ++i) {
        const double t = when(rng);
        events.push_back({t, x, y, on(rng) ? Polarity::On : Polarity::Off});
      }
    }
  return EventStream(std::move(events), w, stream.height(), duration);
}

EventStream simulate(const Stimulus& stimulus, const SimulatorConfig& cfg) {
  return inject_noise(emit_events(stimulus, cfg), cfg.noise_rate, cfg.seed);
}

void write_truth_csv(const Stimulus& stimulus, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "timestep,velocity\n";
  char buf[64];
  for (std::size_t t = 0; t < stimulus.velocity_truth.size(); ++t) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g\n", t, stimulus.velocity_truth[t]);
    out << buf;
  }
}

}  // namespace tde3

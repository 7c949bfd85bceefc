#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <vector>

#include "tde3/events.hpp"
#include "tde3/types.hpp"

namespace tde3 {

struct StimulusMeta {
  Direction direction = Direction::LeftRight;
  double velocity = 0.0;  // px/timestep
  double spacing = 0.0;   // px between consecutive edges, 0 for a single edge
  int n_edges = 0;
  // Pixel at which velocity_truth is recorded (trigger tap of the probe
  // detector).
  int ref_x = 0;
  int ref_y = 0;
};

struct Stimulus {
  std::vector<Image> frames;
  /// One entry per frame; equals the velocity at frames where the reference
  /// pixel changes intensity, zero elsewhere.
  std::vector<double> velocity_truth;
  StimulusMeta meta;

  int width() const { return frames.empty() ? 0 : frames.front().width; }
  int height() const { return frames.empty() ? 0 : frames.front().height; }
};

struct SimulatorConfig {
  double contrast_threshold = 0.15;  // log-intensity units
  double timestep = 0.01;            // seconds per frame
  double noise_rate = 0.0;           // background activity, Hz per pixel
  std::uint64_t seed = 0;
};

struct EdgeOptions {
  /// Column whose edge arrivals define velocity_truth; -1 selects width/2.
  int reference_column = -1;
  /// Frames rendered after the last edge reaches the reference column.
  int tail = 40;
  double background = 50.0;
  /// Intensity multiplier across each edge (dark side to bright side).
  double step_ratio = 2.0;
};

/// Dark-to-bright vertical edges moving left to right. Edge k sits at
/// p0 - k*spacing + velocity*t with p0 drawn uniformly in [0,1) from the
/// seed; a pixel brightens once an edge passes its centre, so intensities
/// form a staircase and every edge produces ON events only.
Stimulus gen_edge_stimulus(double velocity, int n_edges, double spacing,
                           int width, int height, std::uint64_t seed,
                           const EdgeOptions& opts = {});

enum class BarShade : std::uint8_t { Black, Grey, White };

struct TextureOptions {
  int length = 80;     // extent along the motion axis, px
  int thickness = 3;   // extent across the motion axis, px
  int bar_width = 2;   // px per bar
  int field_size = 9;  // square field of view, odd so the centre is a pixel
  double black = 50.0;
  double grey = 100.0;
  double white = 200.0;
  double background = 100.0;
};

/// Bars are grey with probability grey_fraction, otherwise black or white
/// with equal probability.
std::vector<BarShade> draw_bar_texture(std::size_t n_bars, double grey_fraction,
                                       std::mt19937_64& rng);

/// Bar texture crossing the centre of the field in `direction`. Bars are
/// orthogonal to the motion axis; the reference pixel is the field centre.
Stimulus gen_texture_stimulus(double grey_fraction, Direction direction,
                              double velocity, std::uint64_t seed,
                              const TextureOptions& opts = {});

/// Log-intensity change detector with reset-to-current on each event and
/// at most one event per pixel per frame. Event time = frame * timestep.
EventStream emit_events(const Stimulus& stimulus, const SimulatorConfig& cfg);

/// Adds homogeneous Poisson background activity over [0, duration) at every
/// pixel. Signal events keep their relative order.
EventStream inject_noise(const EventStream& stream, double rate,
                         std::uint64_t seed);

/// emit_events followed by inject_noise(cfg.noise_rate, cfg.seed).
EventStream simulate(const Stimulus& stimulus, const SimulatorConfig& cfg);

/// Writes `timestep,velocity` rows.
void write_truth_csv(const Stimulus& stimulus, const std::filesystem::path& path);

}  // namespace tde3

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "tde3/flow_field.hpp"

namespace tde3 {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// Hue from the on-screen direction: 0 deg = rightward = red, increasing
/// counter-clockwise as seen on the image (upward motion, vy < 0, is
/// 90 deg). Value = min(|v| / v_max, 1), full saturation.
Rgb flow_color(double vx, double vy, double v_max);

/// Row-major RGB pixels of one bin. Invalid cells render black. Throws
/// std::out_of_range for a missing bin, std::invalid_argument unless
/// v_max > 0.
std::vector<Rgb> render_flow(const FlowField& flow, std::size_t bin, double v_max);

/// 8-bit RGB PNG via libpng. Throws std::runtime_error on I/O failure.
void render_flow_png(const FlowField& flow, std::size_t bin, double v_max,
                     const std::filesystem::path& path);

}  // namespace tde3

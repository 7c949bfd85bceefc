#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace tde3 {

/// Cardinal motion directions in image coordinates (y grows downwards).
enum class Direction { LeftRight = 0, RightLeft = 1, TopBottom = 2, BottomTop = 3 };

inline constexpr std::array<Direction, 4> kAllDirections = {
    Direction::LeftRight, Direction::RightLeft, Direction::TopBottom,
    Direction::BottomTop};

std::string_view direction_name(Direction d);
/// Accepts "L-R", "R-L", "T-B", "B-T" (also "LR", "lr", ...).
Direction parse_direction(std::string_view s);

/// Unit step along the direction of motion.
struct Step {
  int dx;
  int dy;
};
Step motion_step(Direction d);

/// Seed mixer for deriving independent streams from one seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Single-channel intensity image, row-major.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<double> pixels;

  Image() = default;
  Image(int w, int h, double fill = 0.0)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

  double& at(int y, int x) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  double at(int y, int x) const {
    return pixels[static_cast<std::size_t>(y) * width + x];
  }
};

}  // namespace tde3

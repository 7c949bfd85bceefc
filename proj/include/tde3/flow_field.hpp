#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace tde3 {

/// Per-bin, per-pixel flow in px/s with a validity mask. Cells are stored
/// row-major in (bin, y, x) order.
class FlowField {
 public:
  FlowField() = default;
  FlowField(std::size_t bins, int height, int width, double dt);

  std::size_t bins() const { return bins_; }
  int height() const { return height_; }
  int width() const { return width_; }
  double dt() const { return dt_; }
  std::size_t cells() const { return vx_.size(); }

  std::size_t index(std::size_t b, int y, int x) const {
    return (b * height_ + y) * width_ + x;
  }
  double& vx(std::size_t i) { return vx_[i]; }
  double& vy(std::size_t i) { return vy_[i]; }
  double vx(std::size_t i) const { return vx_[i]; }
  double vy(std::size_t i) const { return vy_[i]; }
  bool valid(std::size_t i) const { return valid_[i] != 0; }
  void set_valid(std::size_t i, bool v) { valid_[i] = v ? 1 : 0; }

  bool same_shape(const FlowField& other) const {
    return bins_ == other.bins_ && height_ == other.height_ && width_ == other.width_;
  }

 private:
  std::size_t bins_ = 0;
  int height_ = 0;
  int width_ = 0;
  double dt_ = 0.0;
  std::vector<double> vx_, vy_;
  std::vector<std::uint8_t> valid_;
};

/// CSV rows `bin,x,y,vx,vy` for valid cells only.
void write_flow_csv(const FlowField& flow, const std::filesystem::path& path);
/// Header line `FLOW B H W dt`, then per cell float32 vx, float32 vy,
/// uint8 valid (little-endian host order).
void write_flow_binary(const FlowField& flow, const std::filesystem::path& path);
FlowField read_flow_binary(const std::filesystem::path& path);

}  // namespace tde3

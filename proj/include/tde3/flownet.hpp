#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <vector>

#include "tde3/decode.hpp"
#include "tde3/events.hpp"
#include "tde3/flow_field.hpp"
#include "tde3/tde.hpp"

namespace tde3 {

/// Four direction channels per pixel sharing one parameter set. Spacing is
/// per pixel; a detector whose taps leave the sensor is disabled.
class DetectorGrid {
 public:
  DetectorGrid(int width, int height, int uniform_spacing, TdeParams params,
               TdeKind kind);
  DetectorGrid(int width, int height, std::vector<int> spacing, TdeParams params,
               TdeKind kind);

  int width() const { return width_; }
  int height() const { return height_; }
  int spacing(int x, int y) const { return spacing_[static_cast<std::size_t>(y) * width_ + x]; }
  bool enabled(Direction d, int x, int y) const;
  const TdeParams& params() const { return params_; }
  TdeKind kind() const { return kind_; }
  void set_params(const TdeParams& p) { params_ = p; }
  void set_kind(TdeKind k) { kind_ = k; }

 private:
  int width_;
  int height_;
  std::vector<int> spacing_;
  TdeParams params_;
  TdeKind kind_;
};

inline const std::vector<int> kDefaultBands = {1, 2, 3, 4, 6, 8};

/// Concentric annuli of equal radial extent around ((W-1)/2, (H-1)/2); annulus
/// k spans [k, k+1) * R/K with R the centre-to-corner distance. Throws
/// std::invalid_argument unless bands are non-empty, positive and strictly
/// increasing.
DetectorGrid build_retina(int width, int height, const std::vector<int>& bands,
                          TdeParams params, TdeKind kind);

struct FlowStats {
  std::size_t total_spikes = 0;
  std::array<std::size_t, 4> spikes_by_direction{};  // indexed by Direction

  /// Share of all spikes emitted by detectors tuned to `d`; 0 without spikes.
  double share(Direction d) const;
};

struct FlowResult {
  FlowField flow;
  FlowStats stats;
};

/// Each enabled detector reads pooled occupancy at its taps, decodes one
/// estimate per onset and contributes estimate * spacing / dt (px/s) at its
/// centre pixel and onset bin: vx = L-R - R-L, vy = T-B - B-T. A cell is
/// valid when any detector there had an onset in that bin.
FlowResult run_flow(const BinnedEvents& binned, const DetectorGrid& grid,
                    const DecodeConfig& decode);

struct ImuSample {
  double t = 0.0;      // s
  double pitch = 0.0;  // deg/s, x
  double yaw = 0.0;    // deg/s, y
  double roll = 0.0;   // deg/s, z
};

/// Zero-based column indices in a whitespace- or comma-separated text file.
struct ImuColumns {
  int t = 0;
  int pitch = 1;
  int yaw = 2;
  int roll = 3;
};

/// Skips blank and `#` lines. Throws ParseError on malformed or non-finite
/// rows.
std::vector<ImuSample> load_imu(const std::filesystem::path& path,
                                const ImuColumns& cols = {});

inline constexpr double kPixelsPerDegree = 4.25;

struct PixelPoint {
  double x = 0.0;
  double y = 0.0;
};

/// Rotational flow per bin. Rates are averaged over samples with
/// t in [b*dt, (b+1)*dt). Angles a = rate*dt (deg);
/// e' = R(roll) (e - e0 + k*(yaw, pitch)) + e0 and flow = (e' - e)/dt.
/// Throws std::runtime_error listing bins without samples.
FlowField imu_ground_truth(const std::vector<ImuSample>& samples, int width,
                           int height, std::size_t bins, double dt, PixelPoint e0,
                           double k = kPixelsPerDegree);

/// Mirrors events left to right (x -> W-1-x).
EventStream mirror_horizontal(const EventStream& stream);

}  // namespace tde3

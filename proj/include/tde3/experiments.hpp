#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "tde3/events.hpp"
#include "tde3/flownet.hpp"
#include "tde3/metrics.hpp"
#include "tde3/simulator.hpp"
#include "tde3/tde.hpp"

namespace tde3 {

// Direction selectivity ---------------------------------------------------------

/// Random-parameter protocol for one L-R detector at the centre of a small
/// field. Every round draws w_fac and three time constants log-uniformly, so
/// each spans a 10-fold range, and shows both detector kinds the same
/// textures in random directions.
struct DsiConfig {
  int rounds = 40;
  int stimuli_per_round = 200;
  double w_min = 1.0, w_max = 10.0;
  double tau_min = 2.0, tau_max = 20.0;  // timesteps; decay = exp(-1/tau)
  std::vector<double> velocities = {0.1, 0.2, 0.33, 0.5, 1.0};
  double max_grey_fraction = 0.8;
  TextureOptions texture;
  double timestep = 0.01;
  std::uint64_t seed = 1;

  void validate() const;
};

struct DsiRound {
  TdeParams params;
  /// Spikes summed by stimulus direction, in Direction order, so [0] is PD.
  std::array<std::size_t, 4> tde2{}, tde3{};
  std::optional<double> dsi2, dsi3;  // missing when the detector never fired
};

struct DsiSummary {
  std::vector<DsiRound> rounds;
  /// Over rounds with a defined DSI; missing if there are none.
  std::optional<MeanStd> tde2, tde3;
  std::optional<double> tde3_min;
};

DsiSummary run_dsi_protocol(const DsiConfig& cfg);

/// `round,w_fac,d_g,d_I,d_V,<kind>_<dir>...,dsi_tde2,dsi_tde3` rows.
void write_dsi_csv(const DsiSummary& summary, const std::filesystem::path& path);

// Synthetic flow scene ----------------------------------------------------------------

/// Full-field bar texture crossing a square sensor.
struct FlowSceneConfig {
  int size = 33;  // odd
  Direction direction = Direction::LeftRight;
  double velocity = 0.5;  // px/timestep
  double grey_fraction = 0.3;
  int length = 80;
  int bar_width = 2;
  double timestep = 0.01;
  std::uint64_t seed = 1;
};

EventStream flow_scene_events(const FlowSceneConfig& cfg);

struct SpikeBudget {
  std::size_t tde2 = 0;
  std::size_t tde3 = 0;
  /// tde3 / tde2; missing when the TDE-2 grid is silent.
  std::optional<double> ratio;
};

/// Runs the grid once as TDE-2 and once as TDE-3 with its own params.
SpikeBudget compare_spike_budgets(const BinnedEvents& binned, const DetectorGrid& grid,
                                  const DecodeConfig& decode);

}  // namespace tde3

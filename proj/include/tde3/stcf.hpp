#pragma once

#include "tde3/events.hpp"

namespace tde3 {

/// Spatio-temporal correlation filter settings. A cell survives when at
/// least `n_required` distinct pixels of its 8-neighbourhood hold an event
/// in the last `window` bins (current bin included).
class StcfConfig {
 public:
  StcfConfig() = default;
  StcfConfig(int n_required, int window);

  int n_required() const { return n_required_; }
  int window() const { return window_; }

  friend bool operator==(const StcfConfig&, const StcfConfig&) = default;

 private:
  int n_required_ = 1;
  int window_ = 1;
};

/// Applied independently per channel. Border pixels use the neighbours that
/// exist.
BinnedEvents stcf_filter(const BinnedEvents& binned, const StcfConfig& cfg);

}  // namespace tde3

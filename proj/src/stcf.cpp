#include "tde3/stcf.hpp"

#include <limits>
#include <stdexcept>
#include <vector>

namespace tde3 {

StcfConfig::StcfConfig(int n_required, int window)
    : n_required_(n_required), window_(window) {
  if (n_required < 0 || n_required > 8)
    throw std::invalid_argument("STCF n_required must lie in [0, 8]");
  if (window < 1) throw std::invalid_argument("STCF window must be >= 1 bin");
}

BinnedEvents stcf_filter(const BinnedEvents& binned, const StcfConfig& cfg) {
  if (cfg.n_required() == 0) return binned;

  const int h = binned.height();
  const int w = binned.width();
  BinnedEvents out(binned.bins(), binned.channels(), h, w, binned.dt());
  constexpr long kNever = std::numeric_limits<long>::min() / 2;

  for (int c = 0; c < binned.channels(); ++c) {
    std::vector<long> last(static_cast<std::size_t>(h) * w, kNever);
    for (std::size_t t = 0; t < binned.bins(); ++t) {
      const long now = static_cast<long>(t);
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
          if (binned.at(t, c, y, x)) last[static_cast<std::size_t>(y) * w + x] = now;

      const long oldest = now - cfg.window() + 1;
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          if (!binned.at(t, c, y, x)) continue;
          int support = 0;
          for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
              if (dx == 0 && dy == 0) continue;
              const int ny = y + dy, nx = x + dx;
              if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
              if (last[static_cast<std::size_t>(ny) * w + nx] >= oldest) ++support;
            }
          if (support >= cfg.n_required()) out.at(t, c, y, x) = 1;
        }
    }
  }
  return out;
}

}  // namespace tde3

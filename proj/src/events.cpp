#include "tde3/events.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace tde3 {

namespace {

// Absorbs representation error for times that are exact multiples of dt
// (k * 0.01 / 0.01 may come out as k - 1e-16).
constexpr double kBinEps = 1e-9;

std::size_t bin_of(double t, double dt) {
  return static_cast<std::size_t>(std::floor(t / dt + kBinEps));
}

}  // namespace

EventStream::EventStream(int width, int height, double duration)
    : width_(width), height_(height), duration_(duration) {
  if (width < 0 || height < 0) throw std::invalid_argument("negative sensor size");
  if (!(duration >= 0.0) || !std::isfinite(duration))
    throw std::invalid_argument("duration must be finite and non-negative");
}

EventStream::EventStream(std::vector<Event> events, int width, int height,
                         double duration)
    : EventStream(width, height, duration) {
  for (std::size_t i = 0; i < events.size(); ++i) {
    const Event& e = events[i];
    if (!std::isfinite(e.t) || e.t < 0.0)
      throw std::invalid_argument("event " + std::to_string(i) +
                                  ": time must be finite and non-negative");
    if (e.x < 0 || e.x >= width || e.y < 0 || e.y >= height)
      throw std::out_of_range("event " + std::to_string(i) + " at (" +
                              std::to_string(e.x) + "," + std::to_string(e.y) +
                              ") outside " + std::to_string(width) + "x" +
                              std::to_string(height) + " sensor");
  }
  std::stable_sort(events.begin(), events.end(),
                   [](const Event& a, const Event& b) { return a.t < b.t; });
  if (!events.empty()) duration_ = std::max(duration_, events.back().t);
  events_ = std::move(events);
}

BinnedEvents::BinnedEvents(std::size_t bins, int channels, int height,
                           int width, double dt)
    : bins_(bins), channels_(channels), height_(height), width_(width), dt_(dt) {
  if (channels != 1 && channels != 2)
    throw std::invalid_argument("channels must be 1 or 2");
  data_.assign(bins * channels * height * width, 0);
}

std::size_t BinnedEvents::occupied() const {
  return static_cast<std::size_t>(std::count(data_.begin(), data_.end(), 1));
}

EventStream load_events(const std::filesystem::path& path, int width,
                        int height) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open event file " + path.string(), 0);

  std::vector<Event> events;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;

    std::istringstream fields(line);
    double t = 0.0;
    long x = 0, y = 0, p = 0;
    std::string extra;
    if (!(fields >> t >> x >> y >> p) || (fields >> extra))
      throw ParseError("line " + std::to_string(line_no) +
                           ": expected `t x y p`, got '" + line + "'",
                       line_no);
    if (!std::isfinite(t) || t < 0.0)
      throw ParseError("line " + std::to_string(line_no) +
                           ": time must be finite and non-negative",
                       line_no);
    if (p != 0 && p != 1)
      throw ParseError("line " + std::to_string(line_no) +
                           ": polarity must be 0 or 1",
                       line_no);
    if (x < 0 || x >= width || y < 0 || y >= height)
      throw ParseError("line " + std::to_string(line_no) + ": pixel (" +
                           std::to_string(x) + "," + std::to_string(y) +
                           ") out of bounds for " + std::to_string(width) +
                           "x" + std::to_string(height),
                       line_no);
    events.push_back({t, static_cast<int>(x), static_cast<int>(y),
                      p == 1 ? Polarity::On : Polarity::Off});
  }
  return EventStream(std::move(events), width, height);
}

void save_events(const EventStream& stream, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  char buf[96];
  for (const Event& e : stream.events()) {
    // Shortest text that parses back to the same double.
    const auto r = std::to_chars(buf, buf + 40, e.t);
    std::snprintf(r.ptr, sizeof buf - static_cast<std::size_t>(r.ptr - buf), " %d %d %d\n", e.x,
                  e.y, e.polarity == Polarity::On ? 1 : 0);
    out << buf;
  }
}

BinnedEvents bin_events(const EventStream& stream, double dt,
                        bool pool_polarity) {
  if (!(dt > 0.0) || !std::isfinite(dt))
    throw std::invalid_argument("bin width dt must be positive");

  std::size_t bins = 0;
  if (stream.duration() > 0.0)
    bins = static_cast<std::size_t>(
        std::max(0.0, std::ceil(stream.duration() / dt - kBinEps)));
  // An event sitting exactly on the duration boundary still needs a bin.
  if (!stream.empty()) bins = std::max(bins, bin_of(stream.events().back().t, dt) + 1);

  BinnedEvents out(bins, pool_polarity ? 1 : 2, stream.height(), stream.width(),
                   dt);
  for (const Event& e : stream.events()) {
    const int c = pool_polarity ? 0 : (e.polarity == Polarity::On ? 1 : 0);
    out.at(bin_of(e.t, dt), c, e.y, e.x) = 1;
  }
  return out;
}

void write_binned(const BinnedEvents& binned, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  char header[128];
  if (binned.channels() == 1)
    std::snprintf(header, sizeof header, "%zu %d %d %.17g\n", binned.bins(),
                  binned.height(), binned.width(), binned.dt());
  else
    std::snprintf(header, sizeof header, "%zu %d %d %.17g %d\n", binned.bins(),
                  binned.height(), binned.width(), binned.dt(),
                  binned.channels());
  out << header;
  out.write(reinterpret_cast<const char*>(binned.data().data()),
            static_cast<std::streamsize>(binned.data().size()));
}

BinnedEvents read_binned(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string(), 0);
  std::string header;
  std::getline(in, header);
  std::istringstream hs(header);
  std::size_t bins = 0;
  int h = 0, w = 0, c = 1;
  double dt = 0.0;
  if (!(hs >> bins >> h >> w >> dt)) throw ParseError("bad binned header", 1);
  if (!(hs >> c)) c = 1;
  BinnedEvents out(bins, c, h, w, dt);
  for (std::size_t t = 0; t < bins; ++t)
    for (int ch = 0; ch < c; ++ch)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          char byte = 0;
          if (!in.get(byte)) throw ParseError("truncated binned payload", 0);
          out.at(t, ch, y, x) = static_cast<std::uint8_t>(byte);
        }
  return out;
}

}  // namespace tde3

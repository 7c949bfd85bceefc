#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace tde3 {

enum class Polarity : std::uint8_t { Off = 0, On = 1 };

struct Event {
  double t = 0.0;  // seconds
  int x = 0;
  int y = 0;
  Polarity polarity = Polarity::On;

  friend bool operator==(const Event&, const Event&) = default;
};

/// Raised for malformed input files. `line()` is 1-based, 0 when not tied
/// to a specific line.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error(what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Time-sorted event sequence for a width x height sensor.
class EventStream {
 public:
  EventStream() = default;
  EventStream(int width, int height, double duration = 0.0);
  /// Sorts `events` (stable) and validates bounds; duration is raised to
  /// the last event time if smaller.
  EventStream(std::vector<Event> events, int width, int height,
              double duration = 0.0);

  const std::vector<Event>& events() const { return events_; }
  int width() const { return width_; }
  int height() const { return height_; }
  double duration() const { return duration_; }
  std::size_t size() const { return events_.size(); }
  bool empty() const { return events_.empty(); }

 private:
  std::vector<Event> events_;
  int width_ = 0;
  int height_ = 0;
  double duration_ = 0.0;
};

/// Binary occupancy tensor, row-major (t, channel, y, x).
class BinnedEvents {
 public:
  BinnedEvents() = default;
  BinnedEvents(std::size_t bins, int channels, int height, int width,
               double dt);

  std::size_t bins() const { return bins_; }
  int channels() const { return channels_; }
  int height() const { return height_; }
  int width() const { return width_; }
  double dt() const { return dt_; }
  bool pooled() const { return channels_ == 1; }

  std::uint8_t at(std::size_t t, int c, int y, int x) const {
    return data_[index(t, c, y, x)];
  }
  std::uint8_t& at(std::size_t t, int c, int y, int x) {
    return data_[index(t, c, y, x)];
  }
  // Pooled shorthand.
  std::uint8_t at(std::size_t t, int y, int x) const { return at(t, 0, y, x); }
  std::uint8_t& at(std::size_t t, int y, int x) { return at(t, 0, y, x); }

  const std::vector<std::uint8_t>& data() const { return data_; }
  std::size_t occupied() const;

  friend bool operator==(const BinnedEvents&, const BinnedEvents&) = default;

 private:
  std::size_t index(std::size_t t, int c, int y, int x) const {
    return ((t * channels_ + c) * height_ + y) * width_ + x;
  }

  std::size_t bins_ = 0;
  int channels_ = 1;
  int height_ = 0;
  int width_ = 0;
  double dt_ = 0.0;
  std::vector<std::uint8_t> data_;
};

/// Reads whitespace-separated `t x y p` lines. Blank lines and lines
/// starting with '#' are skipped.
EventStream load_events(const std::filesystem::path& path, int width,
                        int height);
void save_events(const EventStream& stream, const std::filesystem::path& path);

/// Event at time t lands in bin floor(t/dt). With pool_polarity the result
/// has one channel, otherwise channel 0 = OFF and channel 1 = ON.
BinnedEvents bin_events(const EventStream& stream, double dt,
                        bool pool_polarity);

/// Header line `T H W dt` (plus ` C` when channels > 1), then one byte per
/// cell in (t, channel, y, x) order.
void write_binned(const BinnedEvents& binned, const std::filesystem::path& path);
BinnedEvents read_binned(const std::filesystem::path& path);

}  // namespace tde3

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "tde3/decode.hpp"
#include "tde3/events.hpp"
#include "tde3/train.hpp"

namespace tde3 {

/// Flat `key = value` settings. `#` starts a comment, blank lines are
/// skipped and a repeated key overrides the earlier one. Typed getters throw
/// ParseError carrying the line of the offending key (0 for overrides).
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::string_view text);
  static KeyValueConfig load(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value, std::size_t line = 0);
  /// "key=value" as given on a command line.
  void apply_override(std::string_view assignment);

  bool has(std::string_view key) const;
  std::optional<std::string> get(std::string_view key) const;
  std::string get_string(std::string_view key, const std::string& fallback) const;
  double get_double(std::string_view key, double fallback) const;
  int get_int(std::string_view key, int fallback) const;
  std::uint64_t get_u64(std::string_view key, std::uint64_t fallback) const;
  /// true/false, yes/no, on/off, 1/0.
  bool get_bool(std::string_view key, bool fallback) const;
  /// Comma-separated.
  std::vector<double> get_doubles(std::string_view key,
                                  const std::vector<double>& fallback) const;
  std::vector<int> get_ints(std::string_view key, const std::vector<int>& fallback) const;

  /// Keys never read by a getter, for warning about typos.
  std::vector<std::string> unused_keys() const;
  const std::map<std::string, std::string, std::less<>>& values() const { return values_; }

  /// Source line of a key, 0 when set by an override or absent.
  std::size_t line_of(std::string_view key) const;

 private:
  std::map<std::string, std::string, std::less<>> values_;
  std::map<std::string, std::size_t, std::less<>> lines_;
  mutable std::set<std::string, std::less<>> used_;
};

/// Starts from task_config(task, mode, noise_rate) when `task` is given,
/// otherwise from `base`, then applies every recognised training key.
TrainConfig train_config_from(const KeyValueConfig& kv, const TrainConfig& base = {});

/// Keys mode, count_window, scale, scale_alpha, scale_bias, trace_tau,
/// isi_sentinel.
DecodeConfig decode_config_from(const KeyValueConfig& kv, const DecodeConfig& base = {});

DecodeMode parse_decode_mode(std::string_view name);
TdeKind parse_tde_kind(std::string_view name);

}  // namespace tde3

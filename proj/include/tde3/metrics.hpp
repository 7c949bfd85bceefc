#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>

#include "tde3/flow_field.hpp"

namespace tde3 {

/// Sample mean and population standard deviation.
struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
  std::size_t n = 0;
};

/// Order: preferred, null, orthogonal 1, orthogonal 2. Missing when all zero.
std::optional<double> dsi(const std::array<double, 4>& spikes_by_direction);

/// Angular error in degrees over cells valid in `flow` with both vectors
/// nonzero. Missing when no cell qualifies. Throws on shape mismatch.
std::optional<MeanStd> aae(const FlowField& flow, const FlowField& gt);

struct EndpointErrors {
  MeanStd aee;
  /// Over cells with |gt| > 0 only; n == 0 when none.
  MeanStd raee;
};

/// Endpoint error over cells valid in `flow`. Throws on shape mismatch.
EndpointErrors aee_raee(const FlowField& flow, const FlowField& gt);

/// Product-moment correlation. Missing for fewer than two samples or zero
/// variance. Throws on length mismatch.
std::optional<double> pearson(std::span<const double> a, std::span<const double> b);

struct RelativeError {
  std::optional<double> mean;  // missing when every truth is zero
  std::size_t excluded = 0;    // entries dropped for zero truth
};
RelativeError relative_error(std::span<const double> est, std::span<const double> truth);

/// Pearson r between |v| and |u| on cells valid in `flow` with |u| > 0.
std::optional<double> speed_correlation(const FlowField& flow, const FlowField& gt);

struct MetricsReport {
  std::optional<double> dsi;
  std::optional<MeanStd> aae_deg;
  std::optional<MeanStd> aee;
  std::optional<MeanStd> raee;
  std::optional<double> pearson_r;
  std::optional<double> mean_relative_error;
  std::optional<double> total_spikes;
  std::optional<double> fraction_spikes_pd;
};

/// `key = value` lines; missing values are written as `nan`.
std::string format_report(const MetricsReport& report);
void write_report(const MetricsReport& report, const std::filesystem::path& path);
MetricsReport read_report(const std::filesystem::path& path);
/// Single header row plus one data row.
void write_report_csv(const MetricsReport& report, const std::filesystem::path& path);

}  // namespace tde3

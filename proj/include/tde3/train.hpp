#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tde3/autodiff.hpp"
#include "tde3/decode.hpp"
#include "tde3/events.hpp"
#include "tde3/stcf.hpp"
#include "tde3/tde.hpp"

namespace tde3 {

/// 1/(beta|u|+1)^2. Throws std::invalid_argument unless beta > 0.
double surrogate_grad(double u, double beta);

struct L1Loss {
  double value = 0.0;
  bool degenerate = false;  // all estimates zero; divided by 1 instead
};

/// mean |e/max(e) - y/max(y)|. Empty input gives 0. Throws on length
/// mismatch.
L1Loss loss_l1_normalized(std::span<const double> estimates,
                          std::span<const double> truths);

/// lambda * mean(count^2). Throws std::invalid_argument for lambda < 0.
double loss_regularizer(std::span<const double> spike_counts, double lambda);

/// Share of estimate mass whose timestep lies within one step of a nonzero
/// truth timestep; 1 when there is no mass.
double fta(std::span<const double> estimates_timeline,
           std::span<const double> truth_timeline);

/// Stimuli for one detector tuned L-R on a small field.
struct StimulusSpec {
  std::vector<double> velocities = {0.1, 0.2, 0.33, 0.5, 1.0};  // px/timestep
  int n_edges = 1;
  std::vector<int> spacings = {3};  // px between edges, drawn per stimulus
  double noise_rate = 0.0;          // Hz/px
  double timestep = 0.01;           // s
  int width = 5;
  int height = 3;

  static StimulusSpec wide();
  /// 1/k px/timestep for k = 39..25: 15 velocities in (0.025, 0.04], each
  /// crossing a pixel in a whole number of timesteps.
  static StimulusSpec narrow();
  /// Two edges at spacings {3,4,5,7,10}.
  static StimulusSpec spatial();
  /// Two edges at spacings 3..10 with background noise.
  static StimulusSpec noisy(double rate_hz);

  void validate() const;
};

/// High firing activity start: large w_fac, decays sigmoid(3) ~ 0.95.
TdeParams default_init_params();

struct TrainConfig {
  int epochs = 300;
  int batch_size = 100;
  double learning_rate = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double reg_lambda = 1e-3;
  double surrogate_beta = 10.0;
  DecodeMode inference_mode = DecodeMode::Count;
  VelocityScale scale = VelocityScale::wide();
  int count_window = 10;
  double trace_tau = 5.0;
  StimulusSpec stimulus;
  TdeKind kind = TdeKind::Tde3;
  std::uint64_t seed = 1;
  /// Epochs between n_required sweeps; 0 disables the sweep.
  int stcf_search_period = 10;
  StcfConfig stcf{0, 1};
  TdeParams init = default_init_params();
  /// Treat the reset as a constant in the backward pass.
  bool detach_reset = false;
  /// ISI mode only: the first epochs optimize the count loss instead. Inside
  /// a burst the ISI readout has no surrogate gradient, so a saturated start
  /// cannot leave ISI = 1 on its own.
  int isi_warmup_epochs = 250;
  /// Return the parameters with the lowest total loss on a held batch
  /// (evaluated in inference_mode after every update) instead of the last.
  bool keep_best = true;

  DecodeConfig decode_config() const;
  void validate() const;
};

enum class TrainTask { Wide, Narrow, Spatial, Noisy };

/// "wide", "narrow", "spatial" or "noisy". Throws std::invalid_argument.
TrainTask parse_train_task(std::string_view name);

/// 500-epoch settings per task. ISI training on wide-range velocities uses
/// lr 3e-2: at 1e-2 the run often stalls on a two-spike plateau. Narrow
/// training needs up to 16 spikes per edge, so lambda drops to 3e-5 and
/// the voltage starts leaky (p_V = 0) so the count can follow the current.
TrainConfig task_config(TrainTask task, DecodeMode mode, double noise_rate = 0.0);

struct TrainHistory {
  std::vector<double> loss;
  std::vector<double> pearson_r;  // NaN where undefined
  std::vector<double> mean_spikes;
  std::vector<double> fta;
  std::vector<int> stcf_n;
  /// Held-batch total loss after each update; empty unless keep_best.
  std::vector<double> held_loss;
  /// Epoch whose update produced the returned model, -1 for the init.
  int best_epoch = -1;
};

/// Everything inference needs from a trained detector.
struct TrainedModel {
  TdeParams params;
  StcfConfig stcf{0, 1};
  double trace_tau = 5.0;

  friend bool operator==(const TrainedModel&, const TrainedModel&) = default;
};

struct TrainResult {
  TrainedModel model;
  TrainHistory history;
};

/// Thrown when the loss or a parameter becomes non-finite.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

TrainResult train_tde(const TrainConfig& cfg);

// Batches and evaluation ------------------------------------------------------

/// One stimulus reduced to the probe detector's raw (pre-STCF) input.
struct TrainSample {
  BinnedEvents binned;
  std::vector<double> truth;  // per timestep, nonzero at edge arrivals
  int ref_x = 0;
  int ref_y = 0;
  double velocity = 0.0;
};

TrainSample make_sample(const StimulusSpec& spec, double velocity, int spacing,
                        std::uint64_t seed);
std::vector<TrainSample> make_batch(const StimulusSpec& spec, int n, std::uint64_t seed);

struct TapSeries {
  std::vector<std::uint8_t> fac, trig, inh;
};
TapSeries sample_taps(const TrainSample& s, const StcfConfig& stcf);

/// Per-edge readout: the estimate of the onset at the arrival step, else one
/// step earlier or later, else 0.
std::vector<double> per_edge_estimates(const std::vector<VelocityEstimate>& est,
                                       const std::vector<double>& truth);

struct EvalResult {
  std::vector<double> estimates;  // per edge
  std::vector<double> truths;     // per edge
  std::optional<double> pearson_r;
  std::optional<double> relative_error;
  double fta = 1.0;
  double mean_spikes = 0.0;
  double mean_sq_spikes = 0.0;  // mean over samples of count^2
  double loss = 0.0;  // normalized L1, per edge or per timestep with noise
  bool degenerate = false;
};

EvalResult evaluate_model(const TrainedModel& model, const DecodeConfig& decode,
                          TdeKind kind, const std::vector<TrainSample>& batch,
                          bool per_timestep_loss);

// Differentiable forward -------------------------------------------------------

enum class SpikeMode { Surrogate, Relaxed };

struct DiffParams {
  ad::Var w_fac, p_g, p_I, p_V, tau;
};

/// Total loss (L1 + regularizer) for a batch on the active tape. The spike
/// nonlinearity is hard with a surrogate derivative, or a sigmoid of
/// beta*(V - theta) in both passes for gradient checks.
ad::Var diff_batch_loss(const DiffParams& p, const std::vector<TapSeries>& taps,
                        const std::vector<std::vector<double>>& truths,
                        const TrainConfig& cfg, SpikeMode mode);

// Serialization -----------------------------------------------------------------

/// `tde-params v1` then one `name value` line per field at full precision.
std::string format_model(const TrainedModel& m);
void write_model(const TrainedModel& m, const std::filesystem::path& path);
TrainedModel parse_model(const std::string& text);
TrainedModel read_model(const std::filesystem::path& path);

/// `epoch,loss,pearson_r,mean_spikes,fta,stcf_n` rows.
void write_history_csv(const TrainHistory& h, const std::filesystem::path& path);

}  // namespace tde3

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tde3/config.hpp"
#include "tde3/experiments.hpp"
#include "tde3/flownet.hpp"
#include "tde3/metrics.hpp"
#include "tde3/render.hpp"
#include "tde3/simulator.hpp"
#include "tde3/train.hpp"

namespace fs = std::filesystem;
using namespace tde3;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

// Usage problems found after CLI11 parsing, e.g. conflicting flags.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

fs::path output_dir(const std::string& flag) {
  fs::path dir = flag;
  if (dir.empty()) {
    const char* env = std::getenv("TDE_OUTPUT_DIR");
    dir = env && *env ? env : ".";
  }
  fs::create_directories(dir);
  return dir;
}

void warn_unused(const KeyValueConfig& kv) {
  for (const std::string& k : kv.unused_keys())
    std::cerr << "warning: unused config key '" << k << "'\n";
}

KeyValueConfig load_settings(const std::string& config, const std::vector<std::string>& sets) {
  KeyValueConfig kv = config.empty() ? KeyValueConfig{} : KeyValueConfig::load(config);
  for (const std::string& s : sets) kv.apply_override(s);
  return kv;
}

std::string opt_str(const std::optional<double>& x) {
  if (!x) return "missing";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", *x);
  return buf;
}

// simulate ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string stimulus = "edge";
  double velocity = 0.5;
  int edges = 1;
  double spacing = 3.0;
  int width = 32;
  int height = 8;
  int size = 33;
  std::string direction = "L-R";
  double grey = 0.3;
  double noise = 0.0;
  double timestep = 0.01;
  std::uint64_t seed = 1;
  std::string out;
};

int run_simulate(const SimulateArgs& a) {
  Stimulus stim;
  if (a.stimulus == "edge") {
    stim = gen_edge_stimulus(a.velocity, a.edges, a.spacing, a.width, a.height, a.seed);
  } else if (a.stimulus == "texture") {
    TextureOptions tex;
    tex.field_size = a.size;
    tex.thickness = a.size;
    stim = gen_texture_stimulus(a.grey, parse_direction(a.direction), a.velocity, a.seed, tex);
  } else {
    throw UsageError("--stimulus must be edge or texture");
  }
  SimulatorConfig sc;
  sc.timestep = a.timestep;
  sc.noise_rate = a.noise;
  sc.seed = splitmix64(a.seed);
  const EventStream ev = simulate(stim, sc);
  const fs::path dir = output_dir(a.out);
  save_events(ev, dir / "events.txt");
  write_truth_csv(stim, dir / "truth.csv");
  std::printf("wrote %zu events (%dx%d, %.4g s) to %s\n", ev.events().size(), ev.width(),
              ev.height(), ev.duration(), (dir / "events.txt").c_str());
  return kOk;
}

// train / eval ---------------------------------------------------------------------------

struct TrainArgs {
  std::string config;
  std::vector<std::string> sets;
  std::string out;
};

int run_train(const TrainArgs& a) {
  const KeyValueConfig kv = load_settings(a.config, a.sets);
  const TrainConfig cfg = train_config_from(kv);
  warn_unused(kv);
  const TrainResult res = train_tde(cfg);
  const fs::path dir = output_dir(a.out);
  write_model(res.model, dir / "params.txt");
  write_history_csv(res.history, dir / "history.csv");
  const TdeParams& p = res.model.params;
  std::printf("w_fac %.4f  d_g %.4f  d_I %.4f  d_V %.4f  stcf_n %d  best epoch %d\n", p.w_fac,
              p.decay_g(), p.decay_I(), p.decay_V(), res.model.stcf.n_required(),
              res.history.best_epoch);
  std::printf("wrote %s and %s\n", (dir / "params.txt").c_str(), (dir / "history.csv").c_str());
  return kOk;
}

struct EvalArgs {
  std::string params;
  std::string config;
  std::vector<std::string> sets;
  int samples = 200;
  std::uint64_t seed = 987654321;
  std::string out;
};

int run_eval(const EvalArgs& a) {
  const KeyValueConfig kv = load_settings(a.config, a.sets);
  const TrainConfig cfg = train_config_from(kv);
  warn_unused(kv);
  const TrainedModel model = read_model(a.params);
  const auto batch = make_batch(cfg.stimulus, a.samples, a.seed);
  DecodeConfig d = cfg.decode_config();
  d.trace_tau = model.trace_tau;
  const EvalResult ev =
      evaluate_model(model, d, cfg.kind, batch, cfg.stimulus.noise_rate > 0.0);

  MetricsReport r;
  r.pearson_r = ev.pearson_r;
  r.mean_relative_error = ev.relative_error;
  r.total_spikes = ev.mean_spikes * static_cast<double>(batch.size());
  const fs::path dir = output_dir(a.out);
  write_report(r, dir / "eval.txt");
  std::printf("r %s  relative error %s  fta %.4f  mean spikes %.3f\n",
              opt_str(ev.pearson_r).c_str(), opt_str(ev.relative_error).c_str(), ev.fta,
              ev.mean_spikes);
  return kOk;
}

// dsi ---------------------------------------------------------------------------------------

struct DsiArgs {
  int rounds = 40;
  int stimuli = 200;
  std::uint64_t seed = 1;
  std::string out;
};

int run_dsi(const DsiArgs& a) {
  DsiConfig cfg;
  cfg.rounds = a.rounds;
  cfg.stimuli_per_round = a.stimuli;
  cfg.seed = a.seed;
  const DsiSummary s = run_dsi_protocol(cfg);
  const fs::path dir = output_dir(a.out);
  write_dsi_csv(s, dir / "dsi.csv");
  auto line = [](const char* name, const std::optional<MeanStd>& m) {
    if (m)
      std::printf("%s DSI %.4f +- %.4f over %zu rounds\n", name, m->mean, m->std, m->n);
    else
      std::printf("%s DSI missing (no spikes)\n", name);
  };
  line("TDE-2", s.tde2);
  line("TDE-3", s.tde3);
  return kOk;
}

// flow -------------------------------------------------------------------------------------

struct FlowArgs {
  std::string events;
  int width = 0;
  int height = 0;
  double dt = 0.05;
  std::string params;
  std::string kind = "tde3";
  std::string mode = "count";
  int count_window = 5;
  std::vector<int> bands = kDefaultBands;
  int spacing = 0;
  int stcf_n = -1;
  std::string pd;
  bool mirror = false;
  std::string imu;
  std::vector<int> imu_columns = {0, 1, 2, 3};
  std::vector<double> e0;
  double k = kPixelsPerDegree;
  std::string out;
};

int run_flow_cmd(const FlowArgs& a) {
  if (a.width <= 0 || a.height <= 0) throw UsageError("--width and --height must be positive");
  if (a.imu_columns.size() != 4) throw UsageError("--imu-columns takes t,pitch,yaw,roll");
  if (!a.e0.empty() && a.e0.size() != 2) throw UsageError("--e0 takes x,y");

  TrainedModel model;
  model.params = default_init_params();
  model.stcf = StcfConfig(0, 1);
  if (!a.params.empty()) model = read_model(a.params);
  if (a.stcf_n >= 0) model.stcf = StcfConfig(a.stcf_n, model.stcf.window());

  EventStream ev = load_events(a.events, a.width, a.height);
  if (a.mirror) ev = mirror_horizontal(ev);
  BinnedEvents binned = bin_events(ev, a.dt, true);
  if (model.stcf.n_required() > 0) binned = stcf_filter(binned, model.stcf);

  const TdeKind kind = parse_tde_kind(a.kind);
  const DetectorGrid grid = a.spacing > 0
                                ? DetectorGrid(a.width, a.height, a.spacing, model.params, kind)
                                : build_retina(a.width, a.height, a.bands, model.params, kind);
  DecodeConfig d;
  d.mode = parse_decode_mode(a.mode);
  d.count_window = a.count_window;
  d.trace_tau = model.trace_tau;
  const FlowResult res = run_flow(binned, grid, d);

  MetricsReport r;
  r.total_spikes = static_cast<double>(res.stats.total_spikes);
  if (!a.pd.empty() && res.stats.total_spikes > 0) {
    r.fraction_spikes_pd = res.stats.share(parse_direction(a.pd));
    r.dsi = r.fraction_spikes_pd;
  }
  if (!a.imu.empty()) {
    const ImuColumns cols{a.imu_columns[0], a.imu_columns[1], a.imu_columns[2],
                          a.imu_columns[3]};
    const PixelPoint e0 = a.e0.empty() ? PixelPoint{(a.width - 1) / 2.0, (a.height - 1) / 2.0}
                                       : PixelPoint{a.e0[0], a.e0[1]};
    const FlowField gt = imu_ground_truth(load_imu(a.imu, cols), a.width, a.height,
                                          binned.bins(), a.dt, e0, a.k);
    r.aae_deg = aae(res.flow, gt);
    const EndpointErrors ee = aee_raee(res.flow, gt);
    if (ee.aee.n > 0) r.aee = ee.aee;
    if (ee.raee.n > 0) r.raee = ee.raee;
    r.pearson_r = speed_correlation(res.flow, gt);
  }

  const fs::path dir = output_dir(a.out);
  write_flow_csv(res.flow, dir / "flow.csv");
  write_flow_binary(res.flow, dir / "flow.bin");
  write_report(r, dir / "metrics.txt");
  write_report_csv(r, dir / "metrics.csv");
  std::printf("%zu bins, %zu spikes", res.flow.bins(), res.stats.total_spikes);
  for (Direction dir_k : kAllDirections)
    std::printf("  %s %.3f", std::string(direction_name(dir_k)).c_str(),
                res.stats.share(dir_k));
  std::printf("\nwrote flow.csv, flow.bin, metrics.txt to %s\n", dir.c_str());
  return kOk;
}

// render ----------------------------------------------------------------------------------

struct RenderArgs {
  std::string flow;
  long bin = -1;
  double vmax = 0.0;
  std::string out;
};

int run_render(const RenderArgs& a) {
  if (!(a.vmax > 0.0)) throw UsageError("--vmax must be positive");
  const FlowField flow = read_flow_binary(a.flow);
  const fs::path dir = output_dir(a.out);
  std::size_t first = 0, last = flow.bins();
  if (a.bin >= 0) {
    first = static_cast<std::size_t>(a.bin);
    last = first + 1;
  }
  for (std::size_t b = first; b < last; ++b) {
    const fs::path png = dir / ("flow_" + std::to_string(b) + ".png");
    render_flow_png(flow, b, a.vmax, png);
  }
  std::printf("rendered %zu image(s) to %s\n", last - first, dir.c_str());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Three-point time-difference encoder toolkit"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "Generate a stimulus and write events + truth");
  c_sim->add_option("--stimulus", sim.stimulus, "edge or texture")->capture_default_str();
  c_sim->add_option("--velocity", sim.velocity, "px/timestep")->capture_default_str();
  c_sim->add_option("--edges", sim.edges, "edge count (edge stimulus)")->capture_default_str();
  c_sim->add_option("--spacing", sim.spacing, "px between edges")->capture_default_str();
  c_sim->add_option("--width", sim.width)->capture_default_str();
  c_sim->add_option("--height", sim.height)->capture_default_str();
  c_sim->add_option("--size", sim.size, "field size (texture stimulus, odd)")
      ->capture_default_str();
  c_sim->add_option("--direction", sim.direction, "L-R, R-L, T-B or B-T")->capture_default_str();
  c_sim->add_option("--grey", sim.grey, "grey bar fraction in [0, 0.8]")->capture_default_str();
  c_sim->add_option("--noise", sim.noise, "background activity, Hz/px")->capture_default_str();
  c_sim->add_option("--timestep", sim.timestep, "seconds per frame")->capture_default_str();
  c_sim->add_option("--seed", sim.seed)->capture_default_str();
  c_sim->add_option("--out-dir", sim.out, "default $TDE_OUTPUT_DIR or .");

  TrainArgs tr;
  auto* c_train = app.add_subcommand("train", "Train detector parameters");
  c_train->add_option("--config", tr.config, "key = value file")->check(CLI::ExistingFile);
  c_train->add_option("--set", tr.sets, "key=value override (repeatable)");
  c_train->add_option("--out-dir", tr.out, "default $TDE_OUTPUT_DIR or .");

  EvalArgs evl;
  auto* c_eval = app.add_subcommand("eval", "Evaluate trained parameters on fresh stimuli");
  c_eval->add_option("--params", evl.params, "params file from train")
      ->required()
      ->check(CLI::ExistingFile);
  c_eval->add_option("--config", evl.config, "key = value file")->check(CLI::ExistingFile);
  c_eval->add_option("--set", evl.sets, "key=value override (repeatable)");
  c_eval->add_option("--samples", evl.samples)->capture_default_str();
  c_eval->add_option("--seed", evl.seed)->capture_default_str();
  c_eval->add_option("--out-dir", evl.out, "default $TDE_OUTPUT_DIR or .");

  DsiArgs dsi_a;
  auto* c_dsi = app.add_subcommand("dsi", "Direction selectivity under random parameters");
  c_dsi->add_option("--rounds", dsi_a.rounds)->capture_default_str();
  c_dsi->add_option("--stimuli", dsi_a.stimuli, "textures per round")->capture_default_str();
  c_dsi->add_option("--seed", dsi_a.seed)->capture_default_str();
  c_dsi->add_option("--out-dir", dsi_a.out, "default $TDE_OUTPUT_DIR or .");

  FlowArgs fl;
  auto* c_flow = app.add_subcommand("flow", "Run a detector grid on an event file");
  c_flow->add_option("--events", fl.events, "`t x y p` file")
      ->required()
      ->check(CLI::ExistingFile);
  c_flow->add_option("--width", fl.width)->required();
  c_flow->add_option("--height", fl.height)->required();
  c_flow->add_option("--dt", fl.dt, "bin width, s")->capture_default_str();
  c_flow->add_option("--params", fl.params, "params file (default: initial params)")
      ->check(CLI::ExistingFile);
  c_flow->add_option("--kind", fl.kind, "tde2 or tde3")->capture_default_str();
  c_flow->add_option("--mode", fl.mode, "count or isi")->capture_default_str();
  c_flow->add_option("--count-window", fl.count_window, "timesteps")->capture_default_str();
  c_flow->add_option("--bands", fl.bands, "eccentric spacings, centre outwards")
      ->delimiter(',');
  c_flow->add_option("--spacing", fl.spacing, "uniform spacing instead of bands");
  c_flow->add_option("--stcf-n", fl.stcf_n, "override the params file's STCF n");
  c_flow->add_option("--pd", fl.pd, "preferred direction for the PD spike share");
  c_flow->add_flag("--mirror", fl.mirror, "mirror events left-right first");
  c_flow->add_option("--imu", fl.imu, "IMU rate file for ground truth")
      ->check(CLI::ExistingFile);
  c_flow->add_option("--imu-columns", fl.imu_columns, "t,pitch,yaw,roll column indices")
      ->delimiter(',');
  c_flow->add_option("--e0", fl.e0, "IMU centre x,y in px (default image centre)")
      ->delimiter(',');
  c_flow->add_option("--k", fl.k, "px per degree")->capture_default_str();
  c_flow->add_option("--out-dir", fl.out, "default $TDE_OUTPUT_DIR or .");

  RenderArgs rn;
  auto* c_render = app.add_subcommand("render", "Colour-code a flow file as PNG");
  c_render->add_option("--flow", rn.flow, "flow.bin from the flow subcommand")
      ->required()
      ->check(CLI::ExistingFile);
  c_render->add_option("--bin", rn.bin, "single bin (default: all)");
  c_render->add_option("--vmax", rn.vmax, "px/s at full brightness")->required();
  c_render->add_option("--out-dir", rn.out, "default $TDE_OUTPUT_DIR or .");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (c_sim->parsed()) return run_simulate(sim);
    if (c_train->parsed()) return run_train(tr);
    if (c_eval->parsed()) return run_eval(evl);
    if (c_dsi->parsed()) return run_dsi(dsi_a);
    if (c_flow->parsed()) return run_flow_cmd(fl);
    if (c_render->parsed()) return run_render(rn);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const DivergenceError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kNumeric;
  } catch (const std::domain_error& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kNumeric;
  } catch (const ParseError& e) {
    std::cerr << "data error: " << e.what();
    if (e.line() > 0) std::cerr << " (line " << e.line() << ')';
    std::cerr << '\n';
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  }
  return kUsage;
}

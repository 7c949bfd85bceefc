#include <cmath>
#include <random>

#include "doctest.h"
#include "support.hpp"
#include "tde3/train.hpp"

using namespace tde3;

namespace {

using Values = std::vector<double>;

// Short hand-built sequences keep the relaxed forward cheap and smooth.
std::vector<TapSeries> random_taps(std::mt19937& rng, int n, std::size_t T,
                                   std::vector<Values>& truths) {
  std::vector<TapSeries> out;
  std::uniform_int_distribution<int> lag(1, 6), start(0, 4);
  for (int i = 0; i < n; ++i) {
    TapSeries s;
    s.fac.assign(T, 0);
    s.trig.assign(T, 0);
    s.inh.assign(T, 0);
    Values y(T, 0.0);
    const int d = lag(rng);
    const std::size_t t0 = static_cast<std::size_t>(start(rng));
    s.fac[t0] = 1;
    s.trig[t0 + d] = 1;
    if (t0 + 2 * d < T) s.inh[t0 + 2 * d] = 1;
    y[t0 + d] = 1.0 / d;
    out.push_back(s);
    truths.push_back(y);
  }
  return out;
}

struct Grad {
  double loss;
  std::vector<double> g;  // w_fac, p_g, p_I, p_V, tau
};

Grad relaxed_grad(const std::vector<double>& x, const std::vector<TapSeries>& taps,
                  const std::vector<Values>& truths, const TrainConfig& cfg) {
  ad::Tape tape;
  ad::ScopedTape scope(tape);
  const DiffParams p{tape.leaf(x[0]), tape.leaf(x[1]), tape.leaf(x[2]), tape.leaf(x[3]),
                     tape.leaf(x[4])};
  const ad::Var l = diff_batch_loss(p, taps, truths, cfg, SpikeMode::Relaxed);
  const auto adj = tape.gradient(l);
  return {l.v, {adj[p.w_fac.id], adj[p.p_g.id], adj[p.p_I.id], adj[p.p_V.id], adj[p.tau.id]}};
}

double relaxed_value(const std::vector<double>& x, const std::vector<TapSeries>& taps,
                     const std::vector<Values>& truths, const TrainConfig& cfg) {
  const DiffParams p{x[0], x[1], x[2], x[3], x[4]};
  return diff_batch_loss(p, taps, truths, cfg, SpikeMode::Relaxed).v;
}

TrainConfig tiny_config(DecodeMode mode) {
  TrainConfig c;
  c.epochs = 6;
  c.batch_size = 8;
  c.inference_mode = mode;
  c.isi_warmup_epochs = 2;
  c.stcf_search_period = 3;
  return c;
}

}  // namespace

TEST_SUITE("train") {

TEST_CASE("surrogate derivative examples") {
  CHECK(surrogate_grad(0.0, 10.0) == 1.0);
  CHECK(surrogate_grad(0.1, 10.0) == doctest::Approx(0.25));
  CHECK(surrogate_grad(-0.1, 10.0) == doctest::Approx(0.25));
  CHECK(surrogate_grad(1e6, 10.0) < 1e-12);
  CHECK_THROWS_AS(surrogate_grad(0.0, 0.0), std::invalid_argument);
}

TEST_CASE("normalized L1 loss examples") {
  CHECK(loss_l1_normalized(Values{}, Values{}).value == 0.0);
  CHECK(loss_l1_normalized(Values{2, 4}, Values{1, 2}).value == 0.0);
  CHECK(loss_l1_normalized(Values{1, 1}, Values{1, 0.5}).value == doctest::Approx(0.25));
  const L1Loss z = loss_l1_normalized(Values{0, 0}, Values{1, 0.5});
  CHECK(z.degenerate);
  CHECK(z.value == doctest::Approx(0.75));
  CHECK_THROWS(loss_l1_normalized(Values{1}, Values{1, 2}));
}

TEST_CASE("regularizer examples") {
  CHECK(loss_regularizer(Values{}, 1.0) == 0.0);
  CHECK(loss_regularizer(Values{1, 1}, 1.0) == 1.0);
  CHECK(loss_regularizer(Values{2, 0}, 0.5) == 1.0);
  CHECK(loss_regularizer(Values{3}, 0.0) == 0.0);
  CHECK_THROWS_AS(loss_regularizer(Values{1}, -1.0), std::invalid_argument);
}

TEST_CASE("FTA examples") {
  CHECK(fta(Values{0, 1, 0}, Values{0, 1, 0}) == 1.0);
  CHECK(fta(Values{1, 0, 0, 0}, Values{0, 0, 0, 1}) == 0.0);
  CHECK(fta(Values{0, 0, 0}, Values{0, 1, 0}) == 1.0);
  // Off by one step still counts.
  CHECK(fta(Values{0, 0, 1, 0, 0}, Values{0, 1, 0, 0, 0}) == 1.0);
  CHECK(fta(Values{3, 0, 0, 0, 1, 0}, Values{1, 0, 0, 0, 0, 0}) == doctest::Approx(0.75));
}

TEST_CASE("zero epochs return the initial model") {
  TrainConfig c = tiny_config(DecodeMode::Count);
  c.epochs = 0;
  const TrainResult r = train_tde(c);
  CHECK(r.model.params.w_fac == c.init.w_fac);
  CHECK(r.model.params.p_g == c.init.p_g);
  CHECK(r.model.trace_tau == c.trace_tau);
  CHECK(r.history.loss.empty());
  CHECK(r.history.best_epoch == -1);
}

TEST_CASE("training is deterministic for a fixed seed") {
  for (DecodeMode mode : {DecodeMode::Count, DecodeMode::Isi}) {
    const TrainConfig c = tiny_config(mode);
    const TrainResult a = train_tde(c), b = train_tde(c);
    CHECK(a.model == b.model);
    CHECK(a.history.loss == b.history.loss);
    CHECK(a.history.loss.size() == 6);
    CHECK(a.history.held_loss.size() == 6);
    TrainConfig other = c;
    other.seed = 2;
    other.keep_best = false;
    TrainConfig same = c;
    same.keep_best = false;
    CHECK_FALSE(train_tde(other).model == train_tde(same).model);
  }
}

TEST_CASE("property: relaxed gradients match finite differences") {
  std::mt19937 rng(81);
  std::uniform_real_distribution<double> w(1.0, 6.0), p(-1.0, 3.0), tau(2.0, 8.0);
  for (DecodeMode mode : {DecodeMode::Count, DecodeMode::Isi})
    for (int trial = 0; trial < 12; ++trial) {
      TrainConfig cfg;
      cfg.inference_mode = mode;
      cfg.surrogate_beta = 2.0;
      cfg.reg_lambda = 1e-2;
      cfg.count_window = 8;
      cfg.kind = trial % 2 ? TdeKind::Tde3 : TdeKind::Tde2;
      std::vector<Values> truths;
      const auto taps = random_taps(rng, 3, 24, truths);
      const std::vector<double> x = {w(rng), p(rng), p(rng), p(rng), tau(rng)};
      const Grad g = relaxed_grad(x, taps, truths, cfg);
      const int n = mode == DecodeMode::Isi ? 5 : 4;
      for (int k = 0; k < n; ++k) {
        const double h = 1e-4;
        std::vector<double> up = x, dn = x;
        up[k] += h;
        dn[k] -= h;
        const double fd = (relaxed_value(up, taps, truths, cfg) -
                           relaxed_value(dn, taps, truths, cfg)) / (2 * h);
        CAPTURE(k);
        CAPTURE(trial);
        CHECK(g.g[k] == doctest::Approx(fd).epsilon(1e-3));
      }
    }
}

TEST_CASE("the hard forward equals the evaluated loss plus the regularizer") {
  const TrainedModel model{TdeParams::from_time_constants(3.5, 6.0, 4.0, 3.0), {0, 1}, 4.0};
  struct Case {
    DecodeMode mode;
    StimulusSpec spec;
  };
  const std::vector<Case> cases = {{DecodeMode::Count, StimulusSpec::wide()},
                                   {DecodeMode::Isi, StimulusSpec::wide()},
                                   {DecodeMode::Isi, StimulusSpec::spatial()},
                                   {DecodeMode::Count, StimulusSpec::noisy(2.0)}};
  for (const Case& c : cases) {
    TrainConfig cfg;
    cfg.inference_mode = c.mode;
    cfg.stimulus = c.spec;
    cfg.trace_tau = model.trace_tau;
    cfg.reg_lambda = 1e-3;
    const auto batch = make_batch(c.spec, 20, 5);
    std::vector<TapSeries> taps;
    std::vector<Values> truths;
    for (const auto& s : batch) {
      taps.push_back(sample_taps(s, model.stcf));
      truths.push_back(s.truth);
    }
    const DiffParams p{model.params.w_fac, model.params.p_g, model.params.p_I,
                       model.params.p_V, model.trace_tau};
    const double hard = diff_batch_loss(p, taps, truths, cfg, SpikeMode::Surrogate).v;
    const EvalResult ev = evaluate_model(model, cfg.decode_config(), cfg.kind, batch,
                                         c.spec.noise_rate > 0.0);
    CHECK(hard == doctest::Approx(ev.loss + cfg.reg_lambda * ev.mean_sq_spikes).epsilon(1e-9));
  }
}

TEST_CASE("the default init fires a burst on mid-range edges") {
  const TrainedModel model{default_init_params(), {0, 1}, 5.0};
  for (double v : {0.33, 0.5}) {
    const TrainSample s = make_sample(StimulusSpec::wide(), v, 3, 11);
    const TapSeries t = sample_taps(s, model.stcf);
    CHECK(tde_run(t.fac, t.trig, t.inh, model.params, TdeKind::Tde3).spike_count() >= 5);
  }
}

TEST_CASE("models round-trip byte for byte") {
  std::mt19937 rng(82);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  testing::TempDir dir("model");
  for (int trial = 0; trial < 20; ++trial) {
    TrainedModel m;
    m.params.w_fac = std::exp(u(rng));
    m.params.p_g = u(rng);
    m.params.p_I = u(rng) / 3;
    m.params.p_V = u(rng) * 1e-7;
    m.trace_tau = 1.0 + std::exp(u(rng));
    m.stcf = StcfConfig(trial % 9, 1 + trial % 3);
    write_model(m, dir / "p.txt");
    const TrainedModel back = read_model(dir / "p.txt");
    CHECK(back == m);
    write_model(back, dir / "q.txt");
    CHECK(testing::read_bytes(dir / "p.txt") == testing::read_bytes(dir / "q.txt"));
  }
}

TEST_CASE("malformed model files are rejected") {
  const std::string good = format_model(TrainedModel{default_init_params(), {1, 1}, 5.0});
  CHECK_NOTHROW(parse_model(good));
  CHECK_THROWS_AS(parse_model("tde-params v2\n"), ParseError);
  CHECK_THROWS_AS(parse_model(good + "extra 1\n"), ParseError);
  try {
    parse_model("tde-params v1\nw_fac four\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  std::string missing = good;
  missing.erase(missing.find("trace_tau"), missing.find('\n', missing.find("trace_tau")) -
                                               missing.find("trace_tau") + 1);
  CHECK_THROWS_AS(parse_model(missing), ParseError);
  std::string negative = good;
  negative.replace(negative.find("w_fac 4"), 7, "w_fac -4");
  CHECK_THROWS_AS(parse_model(negative), ParseError);
  CHECK_THROWS_AS(read_model("/nonexistent/params.txt"), ParseError);
}

TEST_CASE("task settings") {
  const TrainConfig wide_isi = task_config(TrainTask::Wide, DecodeMode::Isi);
  CHECK(wide_isi.epochs == 500);
  CHECK(wide_isi.learning_rate == 3e-2);
  CHECK(task_config(TrainTask::Wide, DecodeMode::Count).learning_rate == 1e-2);
  const TrainConfig narrow = task_config(TrainTask::Narrow, DecodeMode::Count);
  CHECK(narrow.scale.kind == VelocityScale::Kind::Narrow);
  CHECK(narrow.count_window == 30);
  CHECK(narrow.reg_lambda == 3e-5);
  CHECK(narrow.stimulus.velocities.size() == 15);
  for (double v : narrow.stimulus.velocities) {
    CHECK(v > 0.025);
    CHECK(v <= 0.04);
    CHECK(std::abs(1.0 / v - std::round(1.0 / v)) < 1e-9);
  }
  const TrainConfig noisy = task_config(TrainTask::Noisy, DecodeMode::Count, 2.0);
  CHECK(noisy.stimulus.noise_rate == 2.0);
  CHECK(noisy.stimulus.n_edges == 2);
  CHECK(task_config(TrainTask::Spatial, DecodeMode::Isi).stimulus.spacings ==
        std::vector<int>{3, 4, 5, 7, 10});
  CHECK(parse_train_task("spatial") == TrainTask::Spatial);
  CHECK_THROWS_AS(parse_train_task("wider"), std::invalid_argument);
}

TEST_CASE("invalid training settings are rejected") {
  auto bad = [](auto edit) {
    TrainConfig c;
    edit(c);
    return c;
  };
  CHECK_THROWS_AS(bad([](TrainConfig& c) { c.epochs = -1; }).validate(), std::invalid_argument);
  CHECK_THROWS_AS(bad([](TrainConfig& c) { c.batch_size = 0; }).validate(), std::invalid_argument);
  CHECK_THROWS_AS(bad([](TrainConfig& c) { c.learning_rate = 0; }).validate(),
                  std::invalid_argument);
  CHECK_THROWS_AS(bad([](TrainConfig& c) { c.beta2 = 1.0; }).validate(), std::invalid_argument);
  CHECK_THROWS_AS(bad([](TrainConfig& c) { c.reg_lambda = -1e-3; }).validate(),
                  std::invalid_argument);
  CHECK_THROWS_AS(bad([](TrainConfig& c) { c.stimulus.velocities = {1.5}; }).validate(),
                  std::invalid_argument);
  CHECK_THROWS_AS(bad([](TrainConfig& c) { c.stimulus.width = 2; }).validate(),
                  std::invalid_argument);
  CHECK_NOTHROW(TrainConfig{}.validate());
}

TEST_CASE("history CSV has one row per epoch") {
  const TrainResult r = train_tde(tiny_config(DecodeMode::Count));
  testing::TempDir dir("hist");
  write_history_csv(r.history, dir / "h.csv");
  const std::string csv = testing::read_bytes(dir / "h.csv");
  CHECK(csv.rfind("epoch,loss,pearson_r,mean_spikes,fta,stcf_n\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 7);
}

}  // TEST_SUITE

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "support.hpp"
#include "tde3/experiments.hpp"
#include "tde3/flownet.hpp"
#include "tde3/simulator.hpp"
#include "tde3/train.hpp"

using namespace tde3;

namespace {

using Bits = std::vector<std::uint8_t>;

const TdeParams kParams = TdeParams::from_time_constants(3.0, 8.0, 5.0, 5.0);

struct Taps {
  Bits fac, trig, inh;
};

Taps taps_of(const BinnedEvents& b, const TapLayout& t) {
  Taps out;
  for (std::size_t i = 0; i < b.bins(); ++i) {
    out.fac.push_back(b.at(i, t.fac_y, t.fac_x));
    out.trig.push_back(b.at(i, t.trig_y, t.trig_x));
    out.inh.push_back(b.at(i, t.inh_y, t.inh_x));
  }
  return out;
}

// Drops leading silent steps so trains can be compared up to a time shift.
Bits from_first(const Bits& b, std::size_t start) {
  return Bits(b.begin() + static_cast<long>(std::min(start, b.size())), b.end());
}

std::size_t first_one(const Bits& b) {
  return static_cast<std::size_t>(std::find(b.begin(), b.end(), 1) - b.begin());
}

}  // namespace

TEST_SUITE("flownet") {

TEST_CASE("a single band gives uniform spacing") {
  const DetectorGrid g = build_retina(7, 5, {1}, kParams, TdeKind::Tde3);
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 7; ++x) CHECK(g.spacing(x, y) == 1);
}

TEST_CASE("two bands split the field at half the corner radius") {
  const DetectorGrid g = build_retina(100, 100, {1, 2}, kParams, TdeKind::Tde3);
  const double c = 49.5, R = std::hypot(c, c);
  for (int y = 0; y < 100; ++y)
    for (int x = 0; x < 100; ++x) {
      const double r = std::hypot(x - c, y - c);
      CHECK(g.spacing(x, y) == (r < R / 2 ? 1 : 2));
    }
}

TEST_CASE("default bands grow with eccentricity") {
  const DetectorGrid g = build_retina(64, 48, kDefaultBands, kParams, TdeKind::Tde3);
  std::vector<std::pair<double, int>> by_radius;
  for (int y = 0; y < 48; ++y)
    for (int x = 0; x < 64; ++x)
      by_radius.emplace_back(std::hypot(x - 31.5, y - 23.5), g.spacing(x, y));
  std::sort(by_radius.begin(), by_radius.end());
  for (std::size_t i = 1; i < by_radius.size(); ++i)
    CHECK(by_radius[i].second >= by_radius[i - 1].second);
  CHECK(by_radius.front().second == 1);
  CHECK(by_radius.back().second == 8);
}

TEST_CASE("band lists must be positive and strictly increasing") {
  CHECK_THROWS_AS(build_retina(9, 9, {}, kParams, TdeKind::Tde3), std::invalid_argument);
  CHECK_THROWS_AS(build_retina(9, 9, {2, 1}, kParams, TdeKind::Tde3), std::invalid_argument);
  CHECK_THROWS_AS(build_retina(9, 9, {1, 1}, kParams, TdeKind::Tde3), std::invalid_argument);
  CHECK_THROWS_AS(build_retina(9, 9, {0, 1}, kParams, TdeKind::Tde3), std::invalid_argument);
}

TEST_CASE("detectors whose taps leave the sensor are disabled") {
  const DetectorGrid g(6, 6, 2, kParams, TdeKind::Tde3);
  CHECK_FALSE(g.enabled(Direction::LeftRight, 1, 3));
  CHECK(g.enabled(Direction::LeftRight, 2, 3));
  CHECK(g.enabled(Direction::LeftRight, 3, 3));
  CHECK_FALSE(g.enabled(Direction::LeftRight, 4, 3));
  CHECK_FALSE(g.enabled(Direction::TopBottom, 3, 0));
  CHECK_THROWS_AS(DetectorGrid(6, 6, 0, kParams, TdeKind::Tde3), std::invalid_argument);
}

TEST_CASE("all-zero bins give zero flow and no spikes") {
  const BinnedEvents b(10, 1, 8, 8, 0.05);
  const FlowResult r = run_flow(b, build_retina(8, 8, {1, 2}, kParams, TdeKind::Tde3), {});
  CHECK(r.stats.total_spikes == 0);
  for (std::size_t i = 0; i < r.flow.cells(); ++i) {
    CHECK_FALSE(r.flow.valid(i));
    CHECK(r.flow.vx(i) == 0.0);
    CHECK(r.flow.vy(i) == 0.0);
  }
  CHECK(r.stats.share(Direction::LeftRight) == 0.0);
}

TEST_CASE("a rightward edge gives positive vx and zero vy") {
  for (double v : {0.2, 0.5, 1.0}) {
    const Stimulus st = gen_edge_stimulus(v, 1, 0.0, 20, 5, 3);
    const BinnedEvents b = bin_events(emit_events(st, {}), 0.01, true);
    const FlowResult r = run_flow(b, DetectorGrid(20, 5, 1, kParams, TdeKind::Tde3), {});
    std::size_t valid = 0;
    for (std::size_t i = 0; i < r.flow.cells(); ++i) {
      if (!r.flow.valid(i)) continue;
      ++valid;
      CHECK(r.flow.vx(i) > 0.0);
      CHECK(r.flow.vy(i) == 0.0);
    }
    // Every interior column of every row sees the edge once.
    CHECK(valid == 18 * 5);
    CHECK(r.stats.share(Direction::LeftRight) == 1.0);
  }
}

TEST_CASE("TDE-3 grid spends fewer spikes than TDE-2 on a rightward texture") {
  FlowSceneConfig sc;
  sc.size = 21;
  const BinnedEvents b = bin_events(flow_scene_events(sc), sc.timestep, true);
  const SpikeBudget budget =
      compare_spike_budgets(b, DetectorGrid(21, 21, 1, kParams, TdeKind::Tde3), {});
  CHECK(budget.tde2 > 0);
  CHECK(budget.tde3 < budget.tde2);
}

TEST_CASE("property: inhibition never adds spikes on random grids") {
  std::mt19937 rng(61);
  for (int trial = 0; trial < 30; ++trial) {
    BinnedEvents b(40, 1, 9, 9, 0.01);
    std::bernoulli_distribution on(0.1 + 0.02 * (trial % 10));
    for (std::size_t t = 0; t < b.bins(); ++t)
      for (int y = 0; y < 9; ++y)
        for (int x = 0; x < 9; ++x) b.at(t, y, x) = on(rng);
    std::uniform_real_distribution<double> w(0.5, 8.0), tau(2.0, 20.0);
    const TdeParams p = TdeParams::from_time_constants(w(rng), tau(rng), tau(rng), tau(rng));
    const SpikeBudget s =
        compare_spike_budgets(b, build_retina(9, 9, {1, 2, 3}, p, TdeKind::Tde3), {});
    CHECK(s.tde3 <= s.tde2);
  }
}

TEST_CASE("zero IMU rates give zero flow") {
  const std::vector<ImuSample> s = {{0.01, 0, 0, 0}, {0.06, 0, 0, 0}};
  const FlowField f = imu_ground_truth(s, 5, 4, 2, 0.05, {2, 1.5});
  for (std::size_t i = 0; i < f.cells(); ++i) {
    CHECK(f.valid(i));
    CHECK(f.vx(i) == 0.0);
    CHECK(f.vy(i) == 0.0);
  }
}

TEST_CASE("yaw of 1 deg/s over 50 ms shifts 0.2125 px horizontally") {
  const FlowField f = imu_ground_truth({{0.0, 0.0, 1.0, 0.0}}, 3, 3, 1, 0.05, {1, 1});
  for (std::size_t i = 0; i < f.cells(); ++i) {
    CHECK(f.vx(i) * 0.05 == doctest::Approx(0.2125).epsilon(1e-12));
    CHECK(f.vy(i) == doctest::Approx(0.0));
  }
  const FlowField p = imu_ground_truth({{0.0, 2.0, 0.0, 0.0}}, 3, 3, 1, 0.05, {1, 1});
  CHECK(p.vy(0) * 0.05 == doctest::Approx(2 * 0.2125).epsilon(1e-12));
  CHECK(p.vx(0) == doctest::Approx(0.0));
}

TEST_CASE("pure roll moves points perpendicular to their radius") {
  const double z = 20.0, dt = 0.05, r = 10.0;
  const FlowField f = imu_ground_truth({{0.0, 0.0, 0.0, z}}, 21, 1, 1, dt, {0, 0});
  const std::size_t i = f.index(0, 0, static_cast<int>(r));
  const double a = z * dt * std::numbers::pi / 180.0;
  CHECK(f.vx(i) == doctest::Approx(r * (std::cos(a) - 1.0) / dt).epsilon(1e-12));
  CHECK(f.vy(i) == doctest::Approx(r * std::sin(a) / dt).epsilon(1e-12));
  // Small-angle magnitude.
  CHECK(std::hypot(f.vx(i), f.vy(i)) == doctest::Approx(r * a / dt).epsilon(1e-3));
  CHECK(std::abs(f.vx(i)) < 1e-2 * std::abs(f.vy(i)));
}

TEST_CASE("IMU rates average over samples within a bin") {
  const FlowField f =
      imu_ground_truth({{0.00, 0, 1, 0}, {0.02, 0, 3, 0}, {0.07, 0, 4, 0}}, 2, 2, 2, 0.05, {0, 0});
  CHECK(f.vx(f.index(0, 0, 0)) == doctest::Approx(4.25 * 2.0));
  CHECK(f.vx(f.index(1, 0, 0)) == doctest::Approx(4.25 * 4.0));
}

TEST_CASE("uncovered IMU bins are listed") {
  try {
    imu_ground_truth({{0.01, 0, 0, 0}}, 2, 2, 3, 0.05, {0, 0});
    FAIL("expected an error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("1,2") != std::string::npos);
  }
}

TEST_CASE("IMU files honour column indices") {
  testing::TempDir dir("imu");
  testing::write_text(dir / "imu.txt", "# t ax ay az x y z\n0.0, 9, 9, 9, 1.5, 2.5, 3.5\n\n0.1 9 9 9 4 5 6\n");
  const auto s = load_imu(dir / "imu.txt", {0, 4, 5, 6});
  REQUIRE(s.size() == 2);
  CHECK(s[0].pitch == 1.5);
  CHECK(s[0].yaw == 2.5);
  CHECK(s[1].roll == 6.0);
  testing::write_text(dir / "bad.txt", "0.0 1 2 3\n0.1 1 x 3\n");
  try {
    load_imu(dir / "bad.txt");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  testing::write_text(dir / "short.txt", "0.0 1 2\n");
  CHECK_THROWS_AS(load_imu(dir / "short.txt"), ParseError);
  testing::write_text(dir / "inf.txt", "0.0 1 inf 3\n");
  CHECK_THROWS_AS(load_imu(dir / "inf.txt"), ParseError);
}

TEST_CASE("property: mirroring left-right negates vx and keeps vy") {
  for (Direction d : kAllDirections)
    for (std::uint64_t seed : {1u, 2u}) {
      FlowSceneConfig sc;
      sc.size = 25;
      sc.direction = d;
      sc.velocity = seed == 1 ? 0.5 : 0.2;
      sc.seed = seed;
      const EventStream ev = flow_scene_events(sc);
      const EventStream mirrored = mirror_horizontal(ev);
      const DetectorGrid grid = build_retina(25, 25, {1, 2, 3}, kParams, TdeKind::Tde3);
      const FlowResult a = run_flow(bin_events(ev, 0.01, true), grid, {});
      const FlowResult b = run_flow(bin_events(mirrored, 0.01, true), grid, {});
      REQUIRE(a.flow.same_shape(b.flow));
      std::size_t valid = 0;
      for (std::size_t t = 0; t < a.flow.bins(); ++t)
        for (int y = 0; y < 25; ++y)
          for (int x = 0; x < 25; ++x) {
            const std::size_t i = a.flow.index(t, y, x), j = b.flow.index(t, y, 24 - x);
            REQUIRE(a.flow.valid(i) == b.flow.valid(j));
            if (!a.flow.valid(i)) continue;
            ++valid;
            CHECK(b.flow.vx(j) == -a.flow.vx(i));
            CHECK(b.flow.vy(j) == a.flow.vy(i));
          }
      CHECK(valid > 0);
      CHECK(a.stats.total_spikes == b.stats.total_spikes);
    }
}

TEST_CASE("property: spacing s at velocity v matches spacing 1 at v/s") {
  for (int k : {2, 3, 5, 8})
    for (int s : {1, 2, 3, 4, 6, 8}) {
      if (s > k) continue;  // keep v <= 1 px/timestep
      const int width = 2 * s + 3;
      const int x = width / 2;
      for (std::uint64_t seed = 0; seed < 4; ++seed) {
        const Stimulus fast = gen_edge_stimulus(static_cast<double>(s) / k, 1, 0.0, width, 1, seed);
        const Stimulus slow = gen_edge_stimulus(1.0 / k, 1, 0.0, width, 1, seed);
        const Taps a =
            taps_of(bin_events(emit_events(fast, {}), 0.01, true), detector_taps(Direction::LeftRight, x, 0, s));
        const Taps b =
            taps_of(bin_events(emit_events(slow, {}), 0.01, true), detector_taps(Direction::LeftRight, x, 0, 1));
        // Same tap timing up to a shift.
        const std::size_t fa = first_one(a.fac), fb = first_one(b.fac);
        REQUIRE(first_one(a.trig) - fa == static_cast<std::size_t>(k));
        REQUIRE(first_one(b.trig) - fb == static_cast<std::size_t>(k));
        const TdeOutput oa = tde_run(a.fac, a.trig, a.inh, kParams, TdeKind::Tde3);
        const TdeOutput ob = tde_run(b.fac, b.trig, b.inh, kParams, TdeKind::Tde3);
        const Bits sa = from_first(oa.spikes, fa), sb = from_first(ob.spikes, fb);
        const std::size_t n = std::min(sa.size(), sb.size());
        CHECK(Bits(sa.begin(), sa.begin() + static_cast<long>(n)) ==
              Bits(sb.begin(), sb.begin() + static_cast<long>(n)));
        CHECK(oa.spike_count() == ob.spike_count());
      }
    }
}

TEST_CASE("flow fields round-trip through the binary format") {
  std::mt19937 rng(62);
  FlowField f(3, 4, 5, 0.05);
  for (std::size_t i = 0; i < f.cells(); ++i) {
    f.vx(i) = static_cast<float>(rng() % 100) / 8.0;
    f.vy(i) = -static_cast<float>(rng() % 100) / 4.0;
    f.set_valid(i, rng() % 2);
  }
  testing::TempDir dir("flow");
  write_flow_binary(f, dir / "f.bin");
  const FlowField g = read_flow_binary(dir / "f.bin");
  REQUIRE(g.same_shape(f));
  CHECK(g.dt() == f.dt());
  for (std::size_t i = 0; i < f.cells(); ++i) {
    CHECK(g.valid(i) == f.valid(i));
    CHECK(g.vx(i) == f.vx(i));
    CHECK(g.vy(i) == f.vy(i));
  }
  write_flow_csv(f, dir / "f.csv");
  const std::string csv = testing::read_bytes(dir / "f.csv");
  std::size_t valid = 0;
  for (std::size_t i = 0; i < f.cells(); ++i) valid += f.valid(i);
  CHECK(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')) == valid + 1);
}

}  // TEST_SUITE

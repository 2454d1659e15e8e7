#include <doctest.h>

#include <cmath>
#include <numbers>

#include "ghostsim/propagation.hpp"
#include "ghostsim/scanner.hpp"
#include "support.hpp"

using namespace ghostsim;

namespace {

World open_world(Cell beacon_cell, int size = 10) {
  Beacon b;
  b.id = "b";
  b.cell = beacon_cell;
  return make_open_world(size, size, {b}, "hall");
}

PropagationConfig quiet() {
  PropagationConfig c;
  c.deterministic = true;
  return c;
}

double deterministic_rss(const World& w, const PlayerState& p, const PropagationConfig& c = quiet()) {
  RngStream rng(1);
  const auto s = predict_rss(w, c, w.beacons.front(), p, rng);
  REQUIRE(s.has_value());
  return s->rssi_dbm;
}

}  // namespace

TEST_CASE("model reference points") {
  const World w = open_world({5, 5});
  CHECK(deterministic_rss(w, test::pose("hall", {6, 5}, Orientation::West)) == doctest::Approx(-58.0));
  CHECK(deterministic_rss(w, test::pose("hall", {7, 5}, Orientation::West)) ==
        doctest::Approx(-58.0 - 22.0 * std::log10(2.0)));
  CHECK(deterministic_rss(w, test::pose("hall", {7, 5}, Orientation::West)) == doctest::Approx(-64.6).epsilon(0.001));
  CHECK(deterministic_rss(w, test::pose("hall", {6, 5}, Orientation::East)) == doctest::Approx(-68.0));
}

TEST_CASE("tx power shifts the curve") {
  World w = open_world({5, 5});
  w.beacons.front().tx_power_dbm = 0.0;
  CHECK(deterministic_rss(w, test::pose("hall", {6, 5}, Orientation::West)) == doctest::Approx(-54.0));
}

TEST_CASE("distance is clamped at half a metre") {
  const World w = open_world({5, 5});
  const double expected = -58.0 - 22.0 * std::log10(0.5);
  CHECK(deterministic_rss(w, test::pose("hall", {5, 5}, Orientation::North)) == doctest::Approx(expected));
}

TEST_CASE("obstacles attenuate") {
  World w = open_world({2, 5});
  Floor& f = w.venues.front().floors.front();
  const PlayerState p = test::pose("hall", {6, 5}, Orientation::West);
  const double open = deterministic_rss(w, p);
  f.set_obstacle({4, 5}, ObstacleKind::Shelf);
  CHECK(deterministic_rss(w, p) == doctest::Approx(open - 3.0));
  f.set_obstacle({3, 5}, ObstacleKind::Wall);
  CHECK(deterministic_rss(w, p) == doctest::Approx(open - 13.0));
}

TEST_CASE("orientation loss") {
  CHECK(orientation_loss(Orientation::East, 1.0, 0.0, 10.0) == doctest::Approx(0.0));
  CHECK(orientation_loss(Orientation::West, 1.0, 0.0, 10.0) == doctest::Approx(10.0));
  CHECK(orientation_loss(Orientation::North, 1.0, 0.0, 10.0) == doctest::Approx(5.0));
  CHECK(orientation_loss(Orientation::North, 0.0, 0.0, 10.0) == 0.0);
  // 45 degrees off
  CHECK(orientation_loss(Orientation::East, 1.0, -1.0, 10.0) ==
        doctest::Approx(10.0 * (1.0 - std::cos(std::numbers::pi / 4)) / 2.0));
}

TEST_CASE("detection floor and other floors") {
  const World w = open_world({0, 0}, 400);
  RngStream rng(3);
  CHECK_FALSE(predict_rss(w, quiet(), w.beacons.front(), test::pose("hall", {300, 300}, Orientation::East), rng));
  const auto two = test::world_fixture("two_floor.json");
  const Beacon* upper = two->find_beacon("upper_art");
  CHECK_FALSE(predict_rss(*two, quiet(), *upper, test::pose("tower", {1, 5}, Orientation::North, 0), rng));
  PropagationConfig leak = quiet();
  leak.floor_leak_db = 20.0;
  const auto leaked = predict_rss(*two, leak, *upper, test::pose("tower", {1, 6}, Orientation::North, 0), rng);
  REQUIRE(leaked);
  CHECK(leaked->rssi_dbm == doctest::Approx(-58.0 - 22.0 * std::log10(0.5) - 20.0));
}

TEST_CASE("one gaussian per call") {
  const World w = open_world({5, 5});
  PropagationConfig c;
  c.crowd.on_probability = 0.0;
  RngStream a(9);
  RngStream b(9);
  const PlayerState p = test::pose("hall", {6, 5}, Orientation::West);
  const PlayerState far = test::pose("hall", {0, 0}, Orientation::East);
  predict_rss(w, c, w.beacons.front(), p, a);
  predict_rss(w, c, w.beacons.front(), far, b);
  CHECK(a == b);
  b.gaussian(0.0, 1.0);
  predict_rss(w, c, w.beacons.front(), p, a);
  CHECK(a == b);
}

TEST_CASE("noise has the configured spread") {
  const World w = open_world({5, 5});
  PropagationConfig c;
  c.crowd.on_probability = 0.0;
  RngStream rng(21);
  const PlayerState p = test::pose("hall", {6, 5}, Orientation::West);
  double sum = 0.0;
  double sq = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double v = predict_rss(w, c, w.beacons.front(), p, rng)->rssi_dbm;
    sum += v;
    sq += v * v;
  }
  const double mean = sum / n;
  const double sd = std::sqrt(sq / n - mean * mean);
  CHECK(mean == doctest::Approx(-58.0).epsilon(0.002));
  CHECK(sd == doctest::Approx(3.2).epsilon(0.03));
}

TEST_CASE("crowd") {
  SUBCASE("never on") {
    CrowdConfig cfg;
    cfg.on_probability = 0.0;
    CrowdProcess proc(cfg, RngStream(1));
    for (int t = 0; t < 1000; ++t) {
      const CrowdEffect e = crowd_attenuation(cfg, proc, t + 0.5);
      CHECK(e.loss_db == 0.0);
      CHECK_FALSE(e.fully_blocked);
    }
  }
  SUBCASE("forced block") {
    CrowdConfig cfg;
    cfg.on_probability = 1.0;
    cfg.mean_dwell_s = 1e9;
    cfg.full_block_probability = 1.0;
    CrowdProcess proc(cfg, RngStream(1));
    const CrowdEffect e = crowd_attenuation(cfg, proc, 0.5);
    CHECK(proc.on());
    CHECK(e.fully_blocked);
    CHECK(e.loss_db >= cfg.attenuation_min_db);
    CHECK(e.loss_db <= cfg.attenuation_max_db);
  }
  SUBCASE("stationary fraction") {
    const CrowdConfig cfg;
    // Power iteration on the two-state transition matrix.
    const double a = cfg.on_probability;
    const double b = 1.0 / cfg.mean_dwell_s;
    double off = 1.0;
    double on = 0.0;
    for (int i = 0; i < 100000; ++i) {
      const double n_on = off * a + on * (1.0 - b);
      off = off * (1.0 - a) + on * b;
      on = n_on;
    }
    CHECK(cfg.stationary_on_fraction() == doctest::Approx(on).epsilon(1e-9));

    CrowdProcess proc(cfg, RngStream::derive(5, 0));
    int count = 0;
    const int steps = 100000;
    for (int t = 0; t < steps; ++t) {
      proc.at(t);
      count += proc.on() ? 1 : 0;
    }
    const double frac = static_cast<double>(count) / steps;
    CHECK(frac > 0.9 * on);
    CHECK(frac < 1.1 * on);
  }
  SUBCASE("same draws whatever the query pattern") {
    const CrowdConfig cfg;
    CrowdProcess a(cfg, RngStream(4));
    CrowdProcess b(cfg, RngStream(4));
    for (int t = 0; t < 500; ++t) a.at(t);
    b.at(499.9);
    CHECK(a.at(499) == b.at(499));
    CHECK(a.at(800) == b.at(800.2));
  }
}

TEST_CASE("config validation") {
  PropagationConfig c;
  c.noise_sigma_db = -1.0;
  CHECK_THROWS(c.validate());
  CrowdConfig crowd;
  crowd.on_probability = 1.5;
  CHECK_THROWS(crowd.validate());
}

TEST_CASE("physical noise does not depend on the path") {
  auto w = std::make_shared<const World>(open_world({5, 5}));
  PropagationConfig c;
  c.crowd.on_probability = 0.0;
  SignalEnvironment a(w, c, 42);
  SignalEnvironment b(w, c, 42);
  const PlayerState pa = test::pose("hall", {6, 5}, Orientation::West);
  const PlayerState pb = test::pose("hall", {5, 8}, Orientation::North);
  const auto sa = a.tick(pa, 0.0, 3.0);
  auto sb = b.tick(pb, 0.0, 1.3);
  const auto tail = b.tick(pb, 1.3, 3.0);
  sb.insert(sb.end(), tail.begin(), tail.end());
  REQUIRE(sa.size() == 30);
  REQUIRE(sb.size() == 30);
  const double ma = mean_rss(*w, c, w->beacons.front(), pa);
  const double mb = mean_rss(*w, c, w->beacons.front(), pb);
  for (std::size_t i = 0; i < sa.size(); ++i) {
    CHECK(sa[i].timestamp_s == sb[i].timestamp_s);
    CHECK(sa[i].rssi_dbm - ma == doctest::Approx(sb[i].rssi_dbm - mb).epsilon(1e-12));
  }
}

TEST_CASE("fingerprint replay") {
  const auto& grid = test::eastwing_grid();
  auto at = [&](int loc, Orientation o) {
    const auto c = grid.coord(loc);
    REQUIRE(c);
    return test::pose("eastwing", {c->x, c->y}, o);
  };
  RngStream rng(1);
  const auto east16 = replay_rss(grid, at(16, Orientation::East), rng, true);
  REQUIRE(east16.sample);
  CHECK(east16.sample->rssi_dbm == -69.0);
  CHECK_FALSE(replay_rss(grid, at(41, Orientation::North), rng, true).sample);
  CHECK_FALSE(replay_rss(grid, at(41, Orientation::North), rng, true).uncalibrated);

  for (int i = 0; i < 200; ++i) {
    const auto s = replay_rss(grid, at(1, Orientation::South), rng, false);
    REQUIRE(s.sample);
    CHECK(std::abs(s.sample->rssi_dbm - -81.0) <= 6 * 5.5);
  }

  // the beacon's own cell was never surveyed
  const auto off = replay_rss(grid, test::pose("eastwing", {3, 7}, Orientation::North), rng, true);
  CHECK(off.uncalibrated);
  CHECK_FALSE(off.sample);

  RngStream x(3);
  RngStream y(3);
  replay_rss(grid, at(41, Orientation::North), x, false);
  y.gaussian(0.0, 1.0);
  CHECK(x == y);
}

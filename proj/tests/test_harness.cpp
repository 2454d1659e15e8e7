#include <doctest.h>

#include <cmath>

#include "ghostsim/harness.hpp"
#include "support.hpp"

using namespace ghostsim;

namespace {

FeedbackEvent event(FeedbackCategory c, double t = 0.0) {
  FeedbackEvent e;
  e.category = c;
  e.message = "x";
  e.timestamp_s = t;
  return e;
}

PropagationConfig deterministic() {
  PropagationConfig c;
  c.deterministic = true;
  return c;
}

// frozen on first run, see the ledger
constexpr double kRandomWalkerRate = 0.029;
constexpr double kLocalizationP95 = 10.0;

}  // namespace

TEST_CASE("greedy policy") {
  const std::vector<FeedbackEvent> closer{event(FeedbackCategory::Closer)};
  CHECK(greedy_policy(closer, Orientation::North) == std::vector{MoveCommand::step(Orientation::North)});
  const std::vector<FeedbackEvent> farther{event(FeedbackCategory::Farther)};
  CHECK(greedy_policy(farther, Orientation::North) ==
        std::vector{MoveCommand::turn(Orientation::East), MoveCommand::step(Orientation::East)});
  const std::vector<FeedbackEvent> lost{event(FeedbackCategory::Lost)};
  CHECK(greedy_policy(lost, Orientation::West).front() == MoveCommand::turn(Orientation::North));
  CHECK(greedy_policy({}, Orientation::South) == std::vector{MoveCommand::step(Orientation::South)});
  CHECK(greedy_policy(closer, Orientation::South, true).front() == MoveCommand::turn(Orientation::West));

  // feed [Closer, Closer, Farther] one at a time
  Orientation facing = Orientation::North;
  int turns = 0;
  std::vector<FeedbackEvent> history;
  for (auto c : {FeedbackCategory::Closer, FeedbackCategory::Closer, FeedbackCategory::Farther}) {
    history.push_back(event(c));
    for (const auto& cmd : greedy_policy(history, facing)) {
      if (cmd.kind == MoveCommand::Kind::Turn) {
        ++turns;
        facing = cmd.direction;
      }
    }
  }
  CHECK(turns == 1);
  CHECK(facing == Orientation::East);
}

TEST_CASE("greedy finds a corner beacon on an open 10x10") {
  Beacon b;
  b.id = "b";
  b.cell = {9, 9};
  auto w = std::make_shared<const World>(make_open_world(10, 10, {b}, "hall"));
  EpisodeConfig ec;
  ec.source = deterministic();
  ec.target_beacon = "b";
  ec.step_budget = 4 * (10 + 10);
  const EpisodeReport r = run_episode(w, GreedyFollower{}, ec, 1);
  CHECK(r.found);
  CHECK(r.feedback_truth_agreement == 1.0);
  CHECK(r.time_to_find_s);
  CHECK(r.steps_taken <= ec.step_budget);
  CHECK(r.trend_events > 0);
}

TEST_CASE("random walker baseline stays low") {
  Beacon b;
  b.id = "b";
  b.cell = {10, 10};
  auto w = std::make_shared<const World>(make_open_world(20, 20, {b}, "hall"));
  EpisodeConfig ec;
  ec.source = deterministic();
  ec.step_budget = 10;
  ec.target_beacon = "b";
  ec.keep_events = false;
  // found only on or next to the beacon, roughly facing it
  ec.thresholds.found_mean_dbm = -62.0;
  int found = 0;
  for (std::uint64_t seed = 1; seed <= 1000; ++seed) {
    RngStream r = RngStream::derive(seed, 0x7374);
    PlayerState p;
    p.venue = "hall";
    p.cell = {static_cast<int>(r.below(20)), static_cast<int>(r.below(20))};
    p.facing = static_cast<Orientation>(r.below(4));
    ec.start = p;
    found += run_episode(w, RandomWalker{}, ec, seed).found ? 1 : 0;
  }
  const double rate = found / 1000.0;
  MESSAGE("random walker found rate " << rate);
  CHECK(rate < 0.1);
  CHECK(std::abs(rate - kRandomWalkerRate) <= 0.01);
}

TEST_CASE("survey walk over the east wing reproduces the tables") {
  const auto w = test::world_fixture("eastwing.json");
  const auto& grid = test::eastwing_grid();
  const SurveyRoute route = survey_route(*w, "eastwing", 0, grid);
  ReplaySource src;
  src.grids.emplace("beacon1", grid);
  EpisodeConfig ec;
  ec.source = src;
  ec.target_beacon = "beacon1";
  ec.step_budget = static_cast<int>(route.commands.size());
  ec.keep_events = false;
  PlayerState start = player_at_entrance(*w, "eastwing");
  start.cell = route.start;
  ec.start = start;

  const int repeats = 20;
  std::map<std::pair<int, Orientation>, std::pair<double, int>> acc;
  for (int i = 0; i < repeats; ++i) {
    const EpisodeReport r = run_episode(w, ScriptedWalk{route.commands}, ec, 100 + i);
    REQUIRE(r.windows.size() == route.tags.size());
    for (std::size_t k = 0; k < route.tags.size(); ++k) {
      if (!route.tags[k]) continue;
      const RssWindow& win = r.windows[k];
      if (!grid.reading(route.tags[k]->first, route.tags[k]->second)) {
        CHECK(win.empty());
        continue;
      }
      REQUIRE(win.n == 50);
      acc[*route.tags[k]].first += *win.mean_dbm;
      acc[*route.tags[k]].second += 1;
    }
  }
  CHECK(acc.size() == grid.entries().size());
  for (const auto& [key, reading] : grid.entries()) {
    CAPTURE(key.first);
    const auto& [sum, n] = acc.at(key);
    const double mean = sum / n;
    const double se = reading.rss_sd_db / std::sqrt(50.0 * n);
    CHECK(std::abs(mean - reading.rss_mean_dbm) <= 5.0 * se + 1e-9);
  }
}

TEST_CASE("localization") {
  const auto& grid = test::eastwing_grid();
  GridSet grids;
  grids.emplace("beacon1", grid);
  auto window = [](double mean) {
    RssWindow w;
    w.beacon_id = "beacon1";
    w.n = 50;
    w.mean_dbm = mean;
    w.sd_db = 0.0;
    return w;
  };
  SUBCASE("exact match") {
    const auto est = fingerprint_localize(std::vector{window(-69.0)}, grids, Orientation::East);
    REQUIRE(est);
    CHECK(est->location_id == 16);
    CHECK(est->coord == *grid.coord(16));
  }
  SUBCASE("tie goes to the lower id") {
    FingerprintGrid g("b");
    g.add_location(5, {0, 0, 0});
    g.add_location(2, {3, 0, 0});
    g.add_reading(5, Orientation::North, {-70, 1});
    g.add_reading(2, Orientation::North, {-74, 1});
    GridSet two;
    two.emplace("b", g);
    RssWindow w = window(-72.0);
    w.beacon_id = "b";
    CHECK(fingerprint_localize(std::vector{w}, two, Orientation::North)->location_id == 2);
  }
  SUBCASE("nothing heard") {
    RssWindow empty;
    empty.beacon_id = "beacon1";
    CHECK_FALSE(fingerprint_localize(std::vector{empty}, grids, Orientation::East));
  }
}

TEST_CASE("localization error under table noise") {
  const auto w = test::world_fixture("eastwing.json");
  GridSet grids;
  grids.emplace("beacon1", test::eastwing_grid());
  const auto& grid = grids.begin()->second;
  std::vector<std::pair<int, Orientation>> keys;
  for (const auto& [k, r] : grid.entries()) keys.push_back(k);
  ReplaySource src;
  src.grids = grids;
  SignalEnvironment env(w, src, 5);
  RngStream pick(77);
  std::vector<double> errors;
  double t = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const auto key = keys[pick.below(keys.size())];
    const auto c = *grid.coord(key.first);
    const PlayerState p = test::pose("eastwing", {c.x, c.y}, key.second);
    const auto samples = env.tick(p, t, t + 5.0);
    const RssWindow win = window_stats(samples, "beacon1", t, t + 5.0, 10.0);
    t += 5.0;
    const auto est = fingerprint_localize(std::vector{win}, grids, key.second);
    REQUIRE(est);
    errors.push_back(std::hypot(est->coord.x - c.x, est->coord.y - c.y) * w->cell_size_m);
  }
  const double p95 = percentile(errors, 0.95);
  MESSAGE("single-beacon localization p95 error " << p95 << " m, median " << median(errors) << " m");
  CHECK(std::abs(p95 - kLocalizationP95) <= 0.5);
}

TEST_CASE("model survey") {
  Beacon b;
  b.id = "b";
  b.cell = {1, 1};
  World w = make_open_world(3, 2, {b}, "hall");
  w.venues[0].floors[0].set_obstacle({2, 0}, ObstacleKind::Wall);
  const GridSet s = fingerprint_survey(w, PropagationConfig{}, "hall", 0);
  REQUIRE(s.count("b") == 1);
  const auto& g = s.at("b");
  CHECK(g.locations().size() == 5);
  CHECK(g.coord(4) == LocationCoord{0, 1, 0});
  CHECK_FALSE(g.coord(3));
  CHECK(g.reading(1, Orientation::East)->rss_sd_db == 0.0);
  CHECK(g.reading(5, Orientation::North)->rss_mean_dbm ==
        doctest::Approx(-58.0 - 22.0 * std::log10(0.5)));
}

TEST_CASE("attention replay") {
  // realtime: every event; popup: category changes, one ack per update after 5 s
  std::vector<FeedbackEvent> trace;
  for (int i = 1; i <= 6; ++i) trace.push_back(event(FeedbackCategory::Steady, 5.0 * i));
  trace.push_back(event(FeedbackCategory::Closer, 35.0));
  trace.push_back(event(FeedbackCategory::Closer, 40.0));
  std::vector<double> updates;
  for (int i = 1; i <= 8; ++i) updates.push_back(5.0 * i);
  const AttentionStats a = attention_replay(trace, updates, 5.0);
  CHECK(a.realtime_deliveries == 8);
  CHECK(a.popup_notifications == 2);
  CHECK(a.popup_deliveries == 2);
  CHECK(a.popup_deliveries < a.realtime_deliveries);
}

TEST_CASE("comparison sweep edge cases") {
  const auto w = test::world_fixture("eastwing.json");
  SweepConfig quiet;
  quiet.noise_sigmas = {0.0};
  CrowdConfig none;
  none.on_probability = 0.0;
  quiet.crowd_levels = {{"none", none}};
  quiet.seeds = 10;
  SUBCASE("no noise, no crowd, open floor") {
    Beacon b;
    b.id = "b";
    b.cell = {6, 3};
    auto open = std::make_shared<const World>(make_open_world(10, 10, {b}, "hall"));
    quiet.target_beacon = "b";
    const ComparisonReport r = compare_paradigms(open, quiet);
    REQUIRE(r.cells.size() == 1);
    const auto& c = r.cells[0];
    CHECK(c.seamful_success_rate == 1.0);
    CHECK(c.seamless_success_rate == 1.0);
    CHECK(c.seamless_median_error_m == 0.0);
    CHECK(c.popup_below_realtime_every_trace);
  }
  SUBCASE("no noise, no crowd, east wing") {
    quiet.target_beacon = "beacon1";
    const ComparisonReport r = compare_paradigms(w, quiet);
    const auto& c = r.cells.at(0);
    CHECK(c.seamless_success_rate == 1.0);
    CHECK(c.seamless_median_error_m == 0.0);
    CHECK(c.seamless_missing_fraction == 0.0);
    // hot-cold can be trapped behind the shelf runs
    CHECK(c.seamful_success_rate > 0.0);
    CHECK(c.popup_below_realtime_every_trace);
  }
  SUBCASE("crowd always blocking") {
    SweepConfig sweep;
    sweep.noise_sigmas = {3.2};
    CrowdConfig wall;
    wall.on_probability = 1.0;
    wall.mean_dwell_s = 1e9;
    wall.full_block_probability = 1.0;
    sweep.crowd_levels = {{"wall", wall}};
    sweep.seeds = 5;
    sweep.step_budget = 20;
    sweep.target_beacon = "beacon1";
    const ComparisonReport r = compare_paradigms(w, sweep);
    const auto& c = r.cells.at(0);
    CHECK(c.seamless_missing_fraction == 1.0);
    CHECK_FALSE(c.seamless_median_error_m);
    CHECK(c.seamful_success_rate == 0.0);
    CHECK(c.seamless_success_rate == 0.0);
    const std::string csv = r.to_csv();
    CHECK(csv.find("wall") != std::string::npos);
    CHECK(r.to_text().find("wall") != std::string::npos);
  }
}

TEST_CASE("statistics helpers") {
  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
  CHECK(percentile({1.0, 2.0, 3.0, 4.0, 5.0}, 0.95) == doctest::Approx(4.8));
  CHECK(percentile({7.0}, 0.3) == 7.0);
}

TEST_CASE("episode errors") {
  const auto w = test::world_fixture("eastwing.json");
  EpisodeConfig ec;
  ec.target_beacon = "missing";
  CHECK_THROWS_AS(run_episode(w, GreedyFollower{}, ec, 1), std::invalid_argument);
  ec.target_beacon = "beacon1";
  ec.step_budget = 0;
  CHECK_THROWS_AS(run_episode(w, GreedyFollower{}, ec, 1), std::invalid_argument);
}

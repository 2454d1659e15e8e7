#include <doctest.h>

#include "ghostsim/guidance.hpp"
#include "support.hpp"

using namespace ghostsim;

namespace {

struct Walk {
  std::shared_ptr<const World> world;
  SignalEnvironment env;
  GuidanceTracker tracker;
  PlayerState state;
  MoveTiming timing{1.0, 0.0};
  std::vector<int> floors;
  std::vector<std::pair<FeedbackEvent, int>> events;  // event, active floor after the interval
  std::vector<Evaluation> evaluations;

  Walk(std::shared_ptr<const World> w, PlayerState start, DeliveryMode mode = DeliveryMode::Realtime,
       SignalSource source = deterministic())
      : world(w),
        env(w, std::move(source), 7),
        tracker(w, GuidanceConfig{ScanConfig{}, {}, SeamStrategy::Opportunistic, mode},
                FeedbackRenderer(default_message_table(), {"g"}, {}), start.floor),
        state(std::move(start)) {
    floors.push_back(tracker.active_floor());
  }

  static PropagationConfig deterministic() {
    PropagationConfig c;
    c.deterministic = true;
    return c;
  }

  GuidanceOutput run(MoveCommand cmd) {
    const double t0 = state.clock_s;
    state = move_player(*world, state, cmd, timing).state;
    const auto samples = env.tick(state, t0, state.clock_s);
    GuidanceOutput out = tracker.advance(state, samples, t0, state.clock_s);
    for (int f : out.floor_changes) floors.push_back(f);
    for (const auto& e : out.events) events.emplace_back(e, tracker.active_floor());
    evaluations.insert(evaluations.end(), out.evaluations.begin(), out.evaluations.end());
    return out;
  }

  void steps(Orientation o, int n) {
    for (int i = 0; i < n; ++i) run(MoveCommand::step(o));
  }
  void wait(int n) {
    for (int i = 0; i < n; ++i) run(MoveCommand::wait());
  }
};

}  // namespace

TEST_CASE("down-then-up walk switches floors 0, 1, 0") {
  const auto w = test::world_fixture("two_floor.json");
  Walk walk(w, player_at_entrance(*w, "tower"));
  walk.tracker.set_target(GuidanceTarget{"ground_art", "g"});
  walk.steps(Orientation::East, 6);
  walk.steps(Orientation::South, 6);
  walk.wait(2);
  walk.run(MoveCommand::take_stairs());
  walk.wait(8);
  walk.steps(Orientation::West, 4);
  walk.steps(Orientation::East, 4);
  walk.run(MoveCommand::take_stairs());
  walk.wait(8);
  CHECK(walk.floors == std::vector<int>{0, 1, 0});
  for (const auto& [e, floor] : walk.events) {
    const Beacon* b = w->find_beacon(e.beacon_id);
    REQUIRE(b != nullptr);
    CAPTURE(e.beacon_id);
    CAPTURE(e.timestamp_s);
    CHECK(b->floor == floor);
  }
  const auto switched = std::count_if(walk.events.begin(), walk.events.end(),
                                      [](auto& p) { return p.first.category == FeedbackCategory::FloorSwitched; });
  CHECK(switched == 2);
}

TEST_CASE("no evaluation until a full window fits the segment") {
  Beacon b;
  b.id = "b";
  b.cell = {5, 5};
  auto w = std::make_shared<const World>(make_open_world(10, 10, {b}, "hall"));
  Walk walk(w, test::pose("hall", {0, 5}, Orientation::East));
  walk.tracker.set_target(GuidanceTarget{"b", "g"});
  walk.wait(4);
  CHECK(walk.evaluations.empty());
  walk.wait(1);
  REQUIRE(walk.evaluations.size() == 1);
  CHECK(walk.evaluations[0].t_s == 5.0);
  CHECK_FALSE(walk.evaluations[0].reference);
  walk.wait(1);
  REQUIRE(walk.evaluations.size() == 2);
  CHECK(walk.evaluations[1].reference);

  walk.run(MoveCommand::turn(Orientation::North));
  walk.wait(4);
  CHECK(walk.evaluations.size() == 2);
  walk.wait(1);
  CHECK(walk.evaluations.size() == 3);
  CHECK_FALSE(walk.evaluations[2].reference);
}

TEST_CASE("walking in deterministically gets closer, then found") {
  Beacon b;
  b.id = "b";
  b.cell = {9, 5};
  auto w = std::make_shared<const World>(make_open_world(10, 10, {b}, "hall"));
  Walk walk(w, test::pose("hall", {0, 5}, Orientation::East));
  walk.timing = {5.0, 0.0};
  walk.tracker.set_target(GuidanceTarget{"b", "g"});
  walk.wait(1);
  walk.steps(Orientation::East, 8);
  std::vector<FeedbackCategory> cats;
  for (const auto& e : walk.evaluations) cats.push_back(e.category);
  CHECK(std::count(cats.begin(), cats.end(), FeedbackCategory::Farther) == 0);
  CHECK(std::count(cats.begin(), cats.end(), FeedbackCategory::Closer) >= 2);
  CHECK(cats.back() == FeedbackCategory::Found);
}

TEST_CASE("popup mode notifies on change only") {
  Beacon b;
  b.id = "b";
  b.cell = {5, 5};
  auto w = std::make_shared<const World>(make_open_world(10, 10, {b}, "hall"));
  Walk walk(w, test::pose("hall", {0, 5}, Orientation::East), DeliveryMode::Popup);
  walk.tracker.set_target(GuidanceTarget{"b", "g"});
  walk.wait(20);
  CHECK(walk.evaluations.size() == 16);
  CHECK(walk.events.size() == 16);
  CHECK(walk.tracker.queue().pending_count() == 1);
  CHECK(walk.tracker.queue().vibration_active());
  const AckResult a = walk.tracker.acknowledge(walk.state.clock_s);
  REQUIRE(a.delivered);
  CHECK(a.delivered->event.category == FeedbackCategory::Steady);
  CHECK_FALSE(walk.tracker.queue().vibration_active());
}

TEST_CASE("crowd blocks turn into blackouts") {
  Beacon b;
  b.id = "b";
  b.cell = {5, 5};
  auto w = std::make_shared<const World>(make_open_world(10, 10, {b}, "hall"));
  PropagationConfig blocked;
  blocked.crowd.on_probability = 1.0;
  blocked.crowd.mean_dwell_s = 1e9;
  blocked.crowd.full_block_probability = 1.0;
  Walk walk(w, test::pose("hall", {3, 5}, Orientation::East), DeliveryMode::Realtime, blocked);
  walk.tracker.set_target(GuidanceTarget{"b", "g"});
  walk.wait(8);
  REQUIRE_FALSE(walk.evaluations.empty());
  for (const auto& e : walk.evaluations) CHECK(e.category == FeedbackCategory::Blackout);
}

TEST_CASE("target changes") {
  const auto w = test::world_fixture("eastwing.json");
  Walk walk(w, player_at_entrance(*w, "eastwing"));
  CHECK_THROWS_AS(walk.tracker.set_target(GuidanceTarget{"nope", "g"}), std::invalid_argument);
  walk.wait(6);
  CHECK(walk.evaluations.empty());
  walk.tracker.set_target(GuidanceTarget{"beacon2", "g"});
  walk.wait(1);
  CHECK(walk.evaluations.size() == 1);
}

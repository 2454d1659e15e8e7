#include <doctest.h>

#include <algorithm>
#include <set>

#include "ghostsim/rng.hpp"
#include "ghostsim/world.hpp"
#include "support.hpp"

using namespace ghostsim;

namespace {

const char* kMinimal = R"({
  "venues": [{
    "id": "hall",
    "floors": [{"index": 0, "width": 10, "height": 10,
                "beacons": [{"id": "b1", "x": 2, "y": 2}]}]
  }]
})";

// Does the segment between two cell centres touch the closed unit square of
// `c`? Liang-Barsky clipping in exact integer arithmetic on doubled coords.
bool segment_touches(Cell a, Cell b, Cell c) {
  const long long ax = 2 * a.x, ay = 2 * a.y;
  const long long dx = 2 * (b.x - a.x), dy = 2 * (b.y - a.y);
  const long long lo_x = 2 * c.x - 1, hi_x = 2 * c.x + 1;
  const long long lo_y = 2 * c.y - 1, hi_y = 2 * c.y + 1;
  // t in [0,1] with p*t <= q for each side; t kept as num/den, den > 0.
  long long tmin_n = 0, tmin_d = 1, tmax_n = 1, tmax_d = 1;
  const long long p[4] = {-dx, dx, -dy, dy};
  const long long q[4] = {ax - lo_x, hi_x - ax, ay - lo_y, hi_y - ay};
  for (int i = 0; i < 4; ++i) {
    if (p[i] == 0) {
      if (q[i] < 0) return false;
      continue;
    }
    long long n = q[i], d = p[i];
    if (d < 0) {
      n = -n;
      d = -d;
      // t >= n/d
      if (n * tmin_d > tmin_n * d) {
        tmin_n = n;
        tmin_d = d;
      }
    } else if (n * tmax_d < tmax_n * d) {
      tmax_n = n;
      tmax_d = d;
    }
  }
  return tmin_n * tmax_d <= tmax_n * tmin_d;
}

std::set<Cell> brute_force_cells(Cell a, Cell b) {
  std::set<Cell> out;
  for (int y = std::min(a.y, b.y) - 1; y <= std::max(a.y, b.y) + 1; ++y) {
    for (int x = std::min(a.x, b.x) - 1; x <= std::max(a.x, b.x) + 1; ++x) {
      if (segment_touches(a, b, {x, y})) out.insert({x, y});
    }
  }
  return out;
}

}  // namespace

TEST_CASE("minimal document loads") {
  const World w = load_world(kMinimal);
  CHECK(w.venues.size() == 1);
  CHECK(w.beacons.size() == 1);
  CHECK(w.beacons[0].cell == Cell{2, 2});
  CHECK(w.beacons[0].tx_power_dbm == -4.0);
  CHECK(w.beacons[0].adv_rate_hz == 10.0);
  CHECK(w.venues[0].entrance == Cell{0, 0});
}

TEST_CASE("beacon on a wall names the beacon") {
  const char* doc = R"({"venues": [{"id": "hall", "floors": [{"index": 0, "width": 4, "height": 4,
    "obstacles": [{"x": 1, "y": 1, "kind": "wall"}],
    "beacons": [{"id": "walled_in", "x": 1, "y": 1}]}]}]})";
  try {
    load_world(doc);
    FAIL("expected WorldError");
  } catch (const WorldError& e) {
    CHECK(std::string(e.what()).find("walled_in") != std::string::npos);
  }
}

TEST_CASE("malformed documents") {
  CHECK_THROWS_AS(load_world("{"), WorldError);
  CHECK_THROWS_AS(load_world(R"({"venues": []})"), WorldError);
  CHECK_THROWS_AS(load_world(R"({"venues": [{"id": "a", "floors": [{"index": 0, "width": 0, "height": 2}]}]})"),
                  WorldError);
  // duplicate beacon id
  CHECK_THROWS_AS(load_world(R"({"venues": [{"id": "a", "floors": [{"index": 0, "width": 3, "height": 3,
    "beacons": [{"id": "b", "x": 0, "y": 0}, {"id": "b", "x": 1, "y": 1}]}]}]})"),
                  WorldError);
}

TEST_CASE("east wing has every surveyed location on an open cell") {
  const auto w = test::world_fixture("eastwing.json");
  const Floor* f = w->find_floor("eastwing", 0);
  REQUIRE(f != nullptr);
  const auto& grid = test::eastwing_grid();
  CHECK(grid.locations().size() >= 80);
  for (const auto& [id, c] : grid.locations()) {
    CAPTURE(id);
    CHECK(f->is_open({c.x, c.y}));
  }
  // the beacon sits next to the strongest reading
  const auto loc104 = grid.coord(104);
  REQUIRE(loc104);
  const Beacon* b = w->find_beacon("beacon1");
  REQUIRE(b != nullptr);
  CHECK(std::abs(b->cell.x - loc104->x) + std::abs(b->cell.y - loc104->y) == 1);
}

TEST_CASE("turn is pure") {
  const World w = load_world(kMinimal);
  const PlayerState p = test::pose("hall", {3, 3}, Orientation::North);
  const MoveResult r = move_player(w, p, MoveCommand::turn(Orientation::East));
  CHECK(r.state.cell == Cell{3, 3});
  CHECK(r.state.facing == Orientation::East);
  CHECK_FALSE(r.blocked);
  CHECK(r.state.clock_s == 0.0);
}

TEST_CASE("steps") {
  const char* doc = R"({"venues": [{"id": "hall", "floors": [{"index": 0, "width": 4, "height": 4,
    "obstacles": [{"x": 1, "y": 0, "kind": "wall"}]}]}]})";
  const World w = load_world(doc);
  MoveTiming timing{2.0, 0.5};

  SUBCASE("into a wall") {
    const PlayerState p = test::pose("hall", {0, 0}, Orientation::South);
    const MoveResult r = move_player(w, p, MoveCommand::step(Orientation::East), timing);
    CHECK(r.blocked);
    CHECK(r.state.cell == Cell{0, 0});
    CHECK(r.state.facing == Orientation::South);
  }
  SUBCASE("off the grid") {
    const PlayerState p = test::pose("hall", {0, 0}, Orientation::North);
    CHECK(move_player(w, p, MoveCommand::step(Orientation::North), timing).blocked);
  }
  SUBCASE("open") {
    const PlayerState p = test::pose("hall", {0, 0}, Orientation::North);
    const MoveResult r = move_player(w, p, MoveCommand::step(Orientation::South), timing);
    CHECK_FALSE(r.blocked);
    CHECK(r.state.cell == Cell{0, 1});
    CHECK(r.state.facing == Orientation::South);
    CHECK(r.state.clock_s == 2.0);
  }
}

TEST_CASE("stairs link bottom and top") {
  const auto w = test::world_fixture("two_floor.json");
  const Floor* ground = w->find_floor("tower", 0);
  REQUIRE(ground != nullptr);
  REQUIRE_FALSE(ground->stairways().empty());
  const Stairway s = ground->stairways().front();

  PlayerState p = test::pose("tower", s.bottom, Orientation::North);
  const MoveResult up = move_player(*w, p, MoveCommand::take_stairs());
  CHECK(up.state.floor == 1);
  CHECK(up.state.cell == s.top);
  const MoveResult down = move_player(*w, up.state, MoveCommand::take_stairs());
  CHECK(down.state.floor == 0);
  CHECK(down.state.cell == s.bottom);

  p.cell = {0, 0};
  CHECK_THROWS_AS(move_player(*w, p, MoveCommand::take_stairs()), CommandRejected);
}

TEST_CASE("transit") {
  const auto w = test::world_fixture("museums.json");
  PlayerState p = player_at_entrance(*w, "sedgwick");
  p = enter_transit(*w, p, "whipple");
  CHECK(p.in_transit());
  CHECK_THROWS_AS(move_player(*w, p, MoveCommand::step(Orientation::North)), CommandRejected);
  p = arrive(*w, p);
  CHECK_FALSE(p.in_transit());
  CHECK(p.venue == "whipple");
  CHECK(p.cell == w->find_venue("whipple")->entrance);
  CHECK_THROWS(enter_transit(*w, player_at_entrance(*w, "whipple"), "nowhere"));
}

TEST_CASE("obstruction counts") {
  Floor f(0, 10, 10);
  SUBCASE("adjacent") { CHECK(path_obstruction(f, {2, 2}, {3, 2}) == ObstructionSummary{0, 0}); }
  SUBCASE("one shelf") {
    f.set_obstacle({4, 2}, ObstacleKind::Shelf);
    CHECK(path_obstruction(f, {2, 2}, {6, 2}) == ObstructionSummary{0, 1});
  }
  SUBCASE("endpoints are excluded") {
    f.set_obstacle({2, 2}, ObstacleKind::Wall);
    f.set_obstacle({6, 2}, ObstacleKind::Wall);
    CHECK(path_obstruction(f, {2, 2}, {6, 2}) == ObstructionSummary{0, 0});
  }
  SUBCASE("diagonal across a shelf cluster") {
    for (Cell c : {Cell{4, 4}, Cell{5, 4}, Cell{4, 5}}) f.set_obstacle(c, ObstacleKind::Shelf);
    int expected = 0;
    for (Cell c : brute_force_cells({2, 2}, {7, 7})) {
      if (c != Cell{2, 2} && c != Cell{7, 7} && f.obstacle_at(c)) ++expected;
    }
    CHECK(expected == 3);
    CHECK(path_obstruction(f, {2, 2}, {7, 7}).shelves == expected);
  }
}

TEST_CASE("supercover matches brute-force enumeration") {
  RngStream rng(7);
  for (int i = 0; i < 3000; ++i) {
    const Cell a{static_cast<int>(rng.below(16)), static_cast<int>(rng.below(16))};
    const Cell b{static_cast<int>(rng.below(16)), static_cast<int>(rng.below(16))};
    const auto line = supercover_line(a, b);
    const std::set<Cell> got(line.begin(), line.end());
    CAPTURE(a.x);
    CAPTURE(a.y);
    CAPTURE(b.x);
    CAPTURE(b.y);
    CHECK(got.size() == line.size());
    CHECK(got == brute_force_cells(a, b));
    CHECK(line.front() == a);
    CHECK(line.back() == b);
  }
}

TEST_CASE("obstruction is symmetric") {
  RngStream rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    Floor f(0, 12, 12);
    for (int k = 0; k < 30; ++k) {
      const Cell c{static_cast<int>(rng.below(12)), static_cast<int>(rng.below(12))};
      f.set_obstacle(c, rng.bernoulli(0.5) ? ObstacleKind::Wall : ObstacleKind::Shelf);
    }
    for (int k = 0; k < 40; ++k) {
      const Cell a{static_cast<int>(rng.below(12)), static_cast<int>(rng.below(12))};
      const Cell b{static_cast<int>(rng.below(12)), static_cast<int>(rng.below(12))};
      CHECK(path_obstruction(f, a, b) == path_obstruction(f, b, a));
    }
  }
}

TEST_CASE("orientation helpers") {
  CHECK(turn_right(Orientation::North) == Orientation::East);
  CHECK(turn_right(Orientation::West) == Orientation::North);
  CHECK(parse_orientation("S") == Orientation::South);
  CHECK_FALSE(parse_orientation("up"));
  CHECK(direction_vector(Orientation::South) == Cell{0, 1});
}

#include "ghostsim/world.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

namespace ghostsim {

using nlohmann::json;

Floor::Floor(int index, int width, int height)
    : index_(index), width_(width), height_(height),
      cells_(static_cast<std::size_t>(std::max(width, 0)) * static_cast<std::size_t>(std::max(height, 0)), 0) {}

std::optional<ObstacleKind> Floor::obstacle_at(Cell c) const {
  if (!in_bounds(c)) return std::nullopt;
  const auto v = cells_[static_cast<std::size_t>(c.y) * width_ + c.x];
  if (v == 0) return std::nullopt;
  return static_cast<ObstacleKind>(v - 1);
}

void Floor::set_obstacle(Cell c, ObstacleKind kind) {
  if (!in_bounds(c)) {
    throw WorldError(fmt::format("obstacle ({},{}) outside floor {} ({}x{})", c.x, c.y, index_, width_, height_));
  }
  cells_[static_cast<std::size_t>(c.y) * width_ + c.x] = static_cast<std::uint8_t>(kind) + 1;
}

const Venue* World::find_venue(std::string_view id) const {
  for (const auto& v : venues) {
    if (v.id == id) return &v;
  }
  return nullptr;
}

const Floor* World::find_floor(std::string_view venue, int floor) const {
  const Venue* v = find_venue(venue);
  if (v == nullptr || floor < 0 || floor >= static_cast<int>(v->floors.size())) return nullptr;
  return &v->floors[static_cast<std::size_t>(floor)];
}

const Beacon* World::find_beacon(std::string_view id) const {
  for (const auto& b : beacons) {
    if (b.id == id) return &b;
  }
  return nullptr;
}

std::optional<std::size_t> World::beacon_index(std::string_view id) const {
  for (std::size_t i = 0; i < beacons.size(); ++i) {
    if (beacons[i].id == id) return i;
  }
  return std::nullopt;
}

const Artifact* World::find_artifact(std::string_view id) const {
  for (const auto& a : artifacts) {
    if (a.id == id) return &a;
  }
  return nullptr;
}

namespace {

bool has_stairway_end(const Floor& f, Cell c, bool bottom) {
  return std::any_of(f.stairways().begin(), f.stairways().end(),
                     [&](const Stairway& s) { return (bottom ? s.bottom : s.top) == c; });
}

}  // namespace

void World::validate() const {
  if (venues.empty()) throw WorldError("world has no venues");
  if (!(cell_size_m > 0.0)) throw WorldError("cell_size_m must be positive");

  std::set<std::string, std::less<>> venue_ids;
  for (const auto& v : venues) {
    if (!venue_ids.insert(v.id).second) throw WorldError(fmt::format("duplicate venue id '{}'", v.id));
  }
  for (const auto& v : venues) {
    if (v.floors.empty()) throw WorldError(fmt::format("venue '{}' has no floors", v.id));
    for (std::size_t i = 0; i < v.floors.size(); ++i) {
      const Floor& f = v.floors[i];
      if (f.index() != static_cast<int>(i)) {
        throw WorldError(fmt::format("venue '{}': floor indices must be contiguous from 0", v.id));
      }
      if (f.width() <= 0 || f.height() <= 0) {
        throw WorldError(fmt::format("venue '{}' floor {}: grid must be non-empty", v.id, f.index()));
      }
      for (const auto& s : f.stairways()) {
        if (!f.is_open(s.bottom)) {
          throw WorldError(fmt::format("venue '{}' floor {}: stairway bottom ({},{}) is not an open cell", v.id,
                                       f.index(), s.bottom.x, s.bottom.y));
        }
        if (i + 1 >= v.floors.size()) {
          throw WorldError(fmt::format("venue '{}' floor {}: stairway leads to missing floor {}", v.id, f.index(),
                                       f.index() + 1));
        }
        if (!v.floors[i + 1].is_open(s.top)) {
          throw WorldError(fmt::format("venue '{}' floor {}: stairway top ({},{}) is not an open cell", v.id,
                                       f.index() + 1, s.top.x, s.top.y));
        }
      }
    }
    if (!v.floors.front().is_open(v.entrance)) {
      throw WorldError(fmt::format("venue '{}': entrance ({},{}) is not an open cell", v.id, v.entrance.x, v.entrance.y));
    }
    for (const auto& n : v.neighbors) {
      if (n == v.id || !venue_ids.contains(n)) {
        throw WorldError(fmt::format("venue '{}': invalid neighbor '{}'", v.id, n));
      }
    }
  }

  std::set<std::string, std::less<>> beacon_ids;
  for (const auto& b : beacons) {
    if (!beacon_ids.insert(b.id).second) throw WorldError(fmt::format("duplicate beacon id '{}'", b.id));
    const Floor* f = find_floor(b.venue, b.floor);
    if (f == nullptr) throw WorldError(fmt::format("beacon '{}': unknown venue/floor", b.id));
    if (!f->is_open(b.cell)) {
      throw WorldError(fmt::format("beacon '{}' at ({},{}) is not on an open cell", b.id, b.cell.x, b.cell.y));
    }
    if (!(b.adv_rate_hz > 0.0)) throw WorldError(fmt::format("beacon '{}': adv_rate_hz must be > 0", b.id));
    if (b.role == BeaconRole::StairwayBottom && !has_stairway_end(*f, b.cell, true)) {
      throw WorldError(fmt::format("beacon '{}': stairway_bottom role off a stairway bottom cell", b.id));
    }
    if (b.role == BeaconRole::StairwayTop) {
      const Floor* below = find_floor(b.venue, b.floor - 1);
      if (below == nullptr || !has_stairway_end(*below, b.cell, false)) {
        throw WorldError(fmt::format("beacon '{}': stairway_top role off a stairway top cell", b.id));
      }
    }
  }

  std::set<std::string, std::less<>> artifact_ids;
  for (const auto& a : artifacts) {
    if (!artifact_ids.insert(a.id).second) throw WorldError(fmt::format("duplicate artifact id '{}'", a.id));
    const Beacon* b = find_beacon(a.beacon_id);
    if (b == nullptr) throw WorldError(fmt::format("artifact '{}': unknown beacon '{}'", a.id, a.beacon_id));
    if (b->venue != a.venue || b->floor != a.floor) {
      throw WorldError(fmt::format("artifact '{}': beacon '{}' is on a different floor", a.id, a.beacon_id));
    }
    if (a.quest) {
      const auto& q = a.quest->quiz;
      if (q.choices.size() < 2 || q.choices.size() > 4) {
        throw WorldError(fmt::format("artifact '{}': quiz needs 2-4 choices", a.id));
      }
      if (q.correct_index < 0 || q.correct_index >= static_cast<int>(q.choices.size())) {
        throw WorldError(fmt::format("artifact '{}': quiz correct_index out of range", a.id));
      }
    }
  }
}

namespace {

// Field access with a JSON-path prefix in every error message.
class Reader {
 public:
  Reader(const json& node, std::string path) : node_(node), path_(std::move(path)) {}

  const json& at(std::string_view key) const {
    if (!node_.is_object()) fail("", "expected an object");
    auto it = node_.find(key);
    if (it == node_.end()) fail(key, "missing field");
    return *it;
  }
  bool has(std::string_view key) const { return node_.is_object() && node_.contains(key); }

  int integer(std::string_view key) const {
    const json& v = at(key);
    if (!v.is_number_integer()) fail(key, "expected an integer");
    return v.get<int>();
  }
  double number(std::string_view key, std::optional<double> fallback = std::nullopt) const {
    if (fallback && !has(key)) return *fallback;
    const json& v = at(key);
    if (!v.is_number()) fail(key, "expected a number");
    return v.get<double>();
  }
  std::string text(std::string_view key, std::optional<std::string> fallback = std::nullopt) const {
    if (fallback && !has(key)) return *fallback;
    const json& v = at(key);
    if (!v.is_string()) fail(key, "expected a string");
    return v.get<std::string>();
  }
  const json& array(std::string_view key, bool optional = false) const {
    static const json empty = json::array();
    if (optional && !has(key)) return empty;
    const json& v = at(key);
    if (!v.is_array()) fail(key, "expected an array");
    return v;
  }
  Cell pair(std::string_view key) const {
    const json& v = at(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer()) {
      fail(key, "expected [x, y]");
    }
    return {v[0].get<int>(), v[1].get<int>()};
  }
  Reader child(std::string_view key, std::size_t i) const {
    return Reader(array(key)[i], fmt::format("{}.{}[{}]", path_, key, i));
  }
  Reader child(std::string_view key) const { return Reader(at(key), fmt::format("{}.{}", path_, key)); }

  [[noreturn]] void fail(std::string_view key, std::string_view what) const {
    if (key.empty()) throw WorldError(fmt::format("{}: {}", path_, what));
    throw WorldError(fmt::format("{}.{}: {}", path_, key, what));
  }
  const std::string& path() const { return path_; }

 private:
  const json& node_;
  std::string path_;
};

BeaconRole parse_role(const Reader& r) {
  const std::string role = r.text("role", "artifact");
  if (role == "artifact") return BeaconRole::Artifact;
  if (role == "stairway_top") return BeaconRole::StairwayTop;
  if (role == "stairway_bottom") return BeaconRole::StairwayBottom;
  r.fail("role", fmt::format("unknown role '{}'", role));
}

ObstacleKind parse_kind(const Reader& r) {
  const std::string kind = r.text("kind");
  if (kind == "wall") return ObstacleKind::Wall;
  if (kind == "shelf") return ObstacleKind::Shelf;
  r.fail("kind", fmt::format("unknown obstacle kind '{}'", kind));
}

std::optional<QuestSpec> parse_quest(const Reader& a) {
  if (!a.has("quest")) return std::nullopt;
  const Reader q = a.child("quest");
  QuestSpec spec;
  spec.ghost_name = q.text("ghost_name");
  spec.intro_text = q.text("intro_text");
  const Reader quiz = q.child("quiz");
  spec.quiz.question = quiz.text("question");
  const json& choices = quiz.array("choices");
  for (std::size_t i = 0; i < choices.size(); ++i) {
    if (!choices[i].is_string()) quiz.fail(fmt::format("choices[{}]", i), "expected a string");
    spec.quiz.choices.push_back(choices[i].get<std::string>());
  }
  spec.quiz.correct_index = quiz.integer("correct_index");
  return spec;
}

std::size_t line_of(std::string_view doc, std::size_t byte) {
  byte = std::min(byte, doc.size());
  return 1 + static_cast<std::size_t>(std::count(doc.begin(), doc.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

}  // namespace

World load_world(std::string_view document) {
  json root;
  try {
    root = json::parse(document);
  } catch (const json::parse_error& e) {
    throw WorldError(fmt::format("parse error at line {}: {}", line_of(document, e.byte), e.what()));
  }

  const Reader top(root, "$");
  World world;
  world.cell_size_m = top.number("cell_size_m", 1.0);

  const json& venues = top.array("venues");
  for (std::size_t vi = 0; vi < venues.size(); ++vi) {
    const Reader v = top.child("venues", vi);
    Venue venue;
    venue.id = v.text("id");
    const json& neighbors = v.array("neighbors", true);
    for (std::size_t ni = 0; ni < neighbors.size(); ++ni) {
      if (!neighbors[ni].is_string()) v.fail(fmt::format("neighbors[{}]", ni), "expected a string");
      venue.neighbors.push_back(neighbors[ni].get<std::string>());
    }

    const json& floors = v.array("floors");
    for (std::size_t fi = 0; fi < floors.size(); ++fi) {
      const Reader f = v.child("floors", fi);
      Floor floor(f.integer("index"), f.integer("width"), f.integer("height"));
      if (floor.width() <= 0 || floor.height() <= 0) f.fail("width", "grid must be non-empty");

      const json& obstacles = f.array("obstacles", true);
      for (std::size_t oi = 0; oi < obstacles.size(); ++oi) {
        const Reader o = f.child("obstacles", oi);
        const Cell c{o.integer("x"), o.integer("y")};
        if (!floor.in_bounds(c)) o.fail("", fmt::format("obstacle ({},{}) out of bounds", c.x, c.y));
        floor.set_obstacle(c, parse_kind(o));
      }
      const json& stairways = f.array("stairways", true);
      for (std::size_t si = 0; si < stairways.size(); ++si) {
        const Reader s = f.child("stairways", si);
        floor.add_stairway({s.pair("bottom"), s.pair("top")});
      }
      const json& beacons = f.array("beacons", true);
      for (std::size_t bi = 0; bi < beacons.size(); ++bi) {
        const Reader b = f.child("beacons", bi);
        Beacon beacon;
        beacon.id = b.text("id");
        beacon.venue = venue.id;
        beacon.floor = floor.index();
        beacon.cell = {b.integer("x"), b.integer("y")};
        beacon.tx_power_dbm = b.number("tx_power_dbm", -4.0);
        beacon.adv_rate_hz = b.number("adv_rate_hz", 10.0);
        beacon.role = parse_role(b);
        world.beacons.push_back(std::move(beacon));
      }
      const json& artifacts = f.array("artifacts", true);
      for (std::size_t ai = 0; ai < artifacts.size(); ++ai) {
        const Reader a = f.child("artifacts", ai);
        Artifact artifact;
        artifact.id = a.text("id");
        artifact.beacon_id = a.text("beacon_id");
        artifact.name = a.text("name");
        artifact.venue = venue.id;
        artifact.floor = floor.index();
        artifact.quest = parse_quest(a);
        world.artifacts.push_back(std::move(artifact));
      }
      venue.floors.push_back(std::move(floor));
    }
    std::sort(venue.floors.begin(), venue.floors.end(),
              [](const Floor& a, const Floor& b) { return a.index() < b.index(); });

    if (v.has("entrance")) {
      venue.entrance = v.pair("entrance");
    } else if (!venue.floors.empty()) {
      const Floor& ground = venue.floors.front();
      bool found = false;
      for (int y = 0; y < ground.height() && !found; ++y) {
        for (int x = 0; x < ground.width() && !found; ++x) {
          if (ground.is_open({x, y})) {
            venue.entrance = {x, y};
            found = true;
          }
        }
      }
      if (!found) v.fail("", "ground floor has no open cell");
    }
    world.venues.push_back(std::move(venue));
  }

  world.validate();
  return world;
}

World load_world_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw WorldError(fmt::format("cannot open world file '{}'", path));
  std::stringstream ss;
  ss << in.rdbuf();
  return load_world(ss.str());
}

World make_open_world(int width, int height, std::vector<Beacon> beacons, std::string venue_id) {
  World world;
  Venue venue;
  venue.id = venue_id;
  venue.floors.emplace_back(0, width, height);
  world.venues.push_back(std::move(venue));
  for (auto& b : beacons) {
    b.venue = venue_id;
    world.beacons.push_back(std::move(b));
  }
  world.validate();
  return world;
}

PlayerState player_at_entrance(const World& world, std::string_view venue) {
  const Venue* v = world.find_venue(venue);
  if (v == nullptr) throw WorldError(fmt::format("unknown venue '{}'", venue));
  PlayerState p;
  p.venue = v->id;
  p.floor = 0;
  p.cell = v->entrance;
  return p;
}

Orientation turn_right(Orientation o) {
  return static_cast<Orientation>((static_cast<int>(o) + 1) % 4);
}

Cell direction_vector(Orientation o) {
  switch (o) {
    case Orientation::North: return {0, -1};
    case Orientation::East: return {1, 0};
    case Orientation::South: return {0, 1};
    case Orientation::West: return {-1, 0};
  }
  return {0, 0};
}

std::string_view to_string(Orientation o) {
  switch (o) {
    case Orientation::North: return "N";
    case Orientation::East: return "E";
    case Orientation::South: return "S";
    case Orientation::West: return "W";
  }
  return "?";
}

std::optional<Orientation> parse_orientation(std::string_view s) {
  if (s == "N") return Orientation::North;
  if (s == "E") return Orientation::East;
  if (s == "S") return Orientation::South;
  if (s == "W") return Orientation::West;
  return std::nullopt;
}

std::string_view to_string(ObstacleKind k) { return k == ObstacleKind::Wall ? "wall" : "shelf"; }

std::string_view to_string(BeaconRole r) {
  switch (r) {
    case BeaconRole::Artifact: return "artifact";
    case BeaconRole::StairwayTop: return "stairway_top";
    case BeaconRole::StairwayBottom: return "stairway_bottom";
  }
  return "?";
}

MoveResult move_player(const World& world, const PlayerState& state, MoveCommand command, const MoveTiming& timing) {
  if (state.in_transit() && command.kind != MoveCommand::Kind::Wait) {
    throw CommandRejected("player is in transit between venues");
  }
  MoveResult result{state, false};
  PlayerState& next = result.state;

  switch (command.kind) {
    case MoveCommand::Kind::Wait:
      next.clock_s += timing.step_duration_s;
      break;
    case MoveCommand::Kind::Turn:
      next.facing = command.direction;
      next.clock_s += timing.turn_duration_s;
      break;
    case MoveCommand::Kind::Step: {
      const Floor* floor = world.find_floor(state.venue, state.floor);
      const Cell d = direction_vector(command.direction);
      const Cell target{state.cell.x + d.x, state.cell.y + d.y};
      if (floor != nullptr && floor->is_open(target)) {
        next.cell = target;
        next.facing = command.direction;
      } else {
        result.blocked = true;
      }
      next.clock_s += timing.step_duration_s;
      break;
    }
    case MoveCommand::Kind::TakeStairs: {
      const Floor* here = world.find_floor(state.venue, state.floor);
      const Floor* below = world.find_floor(state.venue, state.floor - 1);
      bool moved = false;
      if (here != nullptr) {
        for (const auto& s : here->stairways()) {
          if (s.bottom == state.cell && world.find_floor(state.venue, state.floor + 1) != nullptr) {
            next.floor = state.floor + 1;
            next.cell = s.top;
            moved = true;
            break;
          }
        }
      }
      if (!moved && below != nullptr) {
        for (const auto& s : below->stairways()) {
          if (s.top == state.cell) {
            next.floor = state.floor - 1;
            next.cell = s.bottom;
            moved = true;
            break;
          }
        }
      }
      if (!moved) {
        throw CommandRejected(fmt::format("no stairway at ({},{}) on floor {}", state.cell.x, state.cell.y, state.floor));
      }
      next.clock_s += timing.step_duration_s;
      break;
    }
  }
  return result;
}

PlayerState enter_transit(const World& world, const PlayerState& state, std::string_view to_venue) {
  if (state.in_transit()) throw CommandRejected("already in transit");
  const Venue* here = world.find_venue(state.venue);
  if (here == nullptr || std::find(here->neighbors.begin(), here->neighbors.end(), to_venue) == here->neighbors.end()) {
    throw CommandRejected(fmt::format("venue '{}' is not a neighbor of '{}'", to_venue, state.venue));
  }
  PlayerState next = state;
  next.transit_to = std::string(to_venue);
  return next;
}

PlayerState arrive(const World& world, const PlayerState& state) {
  if (!state.in_transit()) throw CommandRejected("player is not in transit");
  PlayerState next = player_at_entrance(world, *state.transit_to);
  next.clock_s = state.clock_s;
  next.facing = state.facing;
  return next;
}

std::vector<Cell> supercover_line(Cell from, Cell to) {
  // Walks cell boundaries between the two centres. When the line passes
  // exactly through a lattice corner, both side cells are included.
  std::vector<Cell> out;
  const int dx = to.x - from.x;
  const int dy = to.y - from.y;
  const int nx = std::abs(dx);
  const int ny = std::abs(dy);
  const int sx = dx > 0 ? 1 : -1;
  const int sy = dy > 0 ? 1 : -1;
  Cell p = from;
  out.push_back(p);
  int ix = 0;
  int iy = 0;
  while (ix < nx || iy < ny) {
    // Compare the parametric crossing times of the next vertical and
    // horizontal boundaries: (0.5 + ix) / nx vs (0.5 + iy) / ny.
    const long long lhs = static_cast<long long>(1 + 2 * ix) * ny;
    const long long rhs = static_cast<long long>(1 + 2 * iy) * nx;
    if (lhs == rhs) {
      out.push_back({p.x + sx, p.y});
      out.push_back({p.x, p.y + sy});
      p.x += sx;
      p.y += sy;
      ++ix;
      ++iy;
    } else if (lhs < rhs) {
      p.x += sx;
      ++ix;
    } else {
      p.y += sy;
      ++iy;
    }
    out.push_back(p);
  }
  return out;
}

ObstructionSummary path_obstruction(const Floor& floor, Cell from, Cell to) {
  ObstructionSummary out;
  if (from == to) return out;
  for (const Cell c : supercover_line(from, to)) {
    if (c == from || c == to) continue;
    if (auto k = floor.obstacle_at(c)) {
      if (*k == ObstacleKind::Wall) {
        ++out.walls;
      } else {
        ++out.shelves;
      }
    }
  }
  return out;
}

ObstructionSummary path_obstruction(const World& world, std::string_view venue, int from_floor, Cell from,
                                    int to_floor, Cell to) {
  if (from_floor != to_floor) {
    throw WorldError("path_obstruction requires both cells on the same floor");
  }
  const Floor* f = world.find_floor(venue, from_floor);
  if (f == nullptr) throw WorldError(fmt::format("unknown floor {} in venue '{}'", from_floor, venue));
  return path_obstruction(*f, from, to);
}

}  // namespace ghostsim

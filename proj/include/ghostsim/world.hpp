#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ghostsim {

enum class Orientation : std::uint8_t { North, East, South, West };

// Grid coordinates: x grows east, y grows south (row index).
struct Cell {
  int x = 0;
  int y = 0;
  friend auto operator<=>(const Cell&, const Cell&) = default;
};

enum class ObstacleKind : std::uint8_t { Wall, Shelf };

// Links `bottom` on the declaring floor with `top` on the floor above.
struct Stairway {
  Cell bottom;
  Cell top;
};

enum class BeaconRole : std::uint8_t { Artifact, StairwayTop, StairwayBottom };

struct Beacon {
  std::string id;
  std::string venue;
  int floor = 0;
  Cell cell;
  double tx_power_dbm = -4.0;
  double adv_rate_hz = 10.0;
  BeaconRole role = BeaconRole::Artifact;
};

struct QuizSpec {
  std::string question;
  std::vector<std::string> choices;
  int correct_index = 0;
};

struct QuestSpec {
  std::string ghost_name;
  std::string intro_text;
  QuizSpec quiz;
};

struct Artifact {
  std::string id;
  std::string beacon_id;
  std::string name;
  std::string venue;
  int floor = 0;
  std::optional<QuestSpec> quest;
};

class Floor {
 public:
  Floor() = default;
  Floor(int index, int width, int height);

  int index() const { return index_; }
  int width() const { return width_; }
  int height() const { return height_; }

  bool in_bounds(Cell c) const { return c.x >= 0 && c.y >= 0 && c.x < width_ && c.y < height_; }
  std::optional<ObstacleKind> obstacle_at(Cell c) const;
  bool is_open(Cell c) const { return in_bounds(c) && !obstacle_at(c); }

  void set_obstacle(Cell c, ObstacleKind kind);
  void add_stairway(Stairway s) { stairways_.push_back(s); }
  const std::vector<Stairway>& stairways() const { return stairways_; }

 private:
  int index_ = 0;
  int width_ = 0;
  int height_ = 0;
  // 0 = open, 1 + ObstacleKind otherwise; row-major.
  std::vector<std::uint8_t> cells_;
  std::vector<Stairway> stairways_;
};

struct Venue {
  std::string id;
  std::vector<Floor> floors;
  std::vector<std::string> neighbors;
  // Floor-0 entry cell. Defaults to the first open cell in row-major order.
  Cell entrance;
};

class WorldError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct World {
  std::vector<Venue> venues;
  double cell_size_m = 1.0;
  // Flattened in document order; index is stable and keys per-beacon RNG streams.
  std::vector<Beacon> beacons;
  std::vector<Artifact> artifacts;

  const Venue* find_venue(std::string_view id) const;
  const Floor* find_floor(std::string_view venue, int floor) const;
  const Beacon* find_beacon(std::string_view id) const;
  std::optional<std::size_t> beacon_index(std::string_view id) const;
  const Artifact* find_artifact(std::string_view id) const;

  // Throws WorldError naming the offending entity.
  void validate() const;
};

// Parses the JSON world-description document. Throws WorldError.
World load_world(std::string_view document);
World load_world_file(const std::string& path);

// Single venue, single open floor. Handy for generated experiments.
World make_open_world(int width, int height, std::vector<Beacon> beacons,
                      std::string venue_id = "venue");

struct PlayerState {
  std::string venue;
  int floor = 0;
  Cell cell;
  Orientation facing = Orientation::North;
  double clock_s = 0.0;
  // Set while crossing the dead space between venues.
  std::optional<std::string> transit_to;

  bool in_transit() const { return transit_to.has_value(); }
  friend bool operator==(const PlayerState&, const PlayerState&) = default;
};

PlayerState player_at_entrance(const World& world, std::string_view venue);

struct MoveCommand {
  enum class Kind : std::uint8_t { Step, Turn, TakeStairs, Wait };
  Kind kind = Kind::Wait;
  Orientation direction = Orientation::North;

  static MoveCommand step(Orientation d) { return {Kind::Step, d}; }
  static MoveCommand turn(Orientation d) { return {Kind::Turn, d}; }
  static MoveCommand take_stairs() { return {Kind::TakeStairs, Orientation::North}; }
  static MoveCommand wait() { return {Kind::Wait, Orientation::North}; }
  friend bool operator==(const MoveCommand&, const MoveCommand&) = default;
};

struct MoveTiming {
  double step_duration_s = 1.0;
  double turn_duration_s = 0.0;
};

struct MoveResult {
  PlayerState state;
  bool blocked = false;
};

class CommandRejected : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Steps face the direction walked; a blocked step leaves cell and facing as
// they were. Throws CommandRejected for stairs off a stairway cell or any
// movement while in transit.
MoveResult move_player(const World& world, const PlayerState& state, MoveCommand command,
                       const MoveTiming& timing = {});

// Dead-space transitions between venues.
PlayerState enter_transit(const World& world, const PlayerState& state, std::string_view to_venue);
PlayerState arrive(const World& world, const PlayerState& state);

struct ObstructionSummary {
  int walls = 0;
  int shelves = 0;
  friend bool operator==(const ObstructionSummary&, const ObstructionSummary&) = default;
};

// Obstacle cells crossed by the supercover line between the two cell centres,
// endpoints excluded.
ObstructionSummary path_obstruction(const Floor& floor, Cell from, Cell to);
ObstructionSummary path_obstruction(const World& world, std::string_view venue, int from_floor,
                                    Cell from, int to_floor, Cell to);

// Cells touched by the supercover line, in walk order, endpoints included.
std::vector<Cell> supercover_line(Cell from, Cell to);

std::string_view to_string(Orientation o);
std::optional<Orientation> parse_orientation(std::string_view s);
Orientation turn_right(Orientation o);
// Unit vector (dx, dy) in grid coordinates.
Cell direction_vector(Orientation o);
std::string_view to_string(ObstacleKind k);
std::string_view to_string(BeaconRole r);

}  // namespace ghostsim

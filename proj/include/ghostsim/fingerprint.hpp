#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ghostsim/propagation.hpp"
#include "ghostsim/rng.hpp"
#include "ghostsim/world.hpp"

namespace ghostsim {

struct FingerprintReading {
  double rss_mean_dbm = 0.0;
  double rss_sd_db = 0.0;
  friend bool operator==(const FingerprintReading&, const FingerprintReading&) = default;
};

struct LocationCoord {
  int x = 0;
  int y = 0;
  int floor = 0;
  friend auto operator<=>(const LocationCoord&, const LocationCoord&) = default;
};

// Per-location, per-orientation (mean, SD) survey of one beacon. Unmeasured
// (location, orientation) pairs are absent keys.
class FingerprintGrid {
 public:
  FingerprintGrid() = default;
  explicit FingerprintGrid(std::string beacon_id) : beacon_id_(std::move(beacon_id)) {}

  const std::string& beacon_id() const { return beacon_id_; }

  // Throws std::invalid_argument on invariant violations (positive mean,
  // negative SD, duplicate key, conflicting coordinates).
  void add_location(int location_id, LocationCoord coord);
  void add_reading(int location_id, Orientation o, FingerprintReading r);

  std::optional<FingerprintReading> reading(int location_id, Orientation o) const;
  std::optional<int> location_at(int floor, Cell cell) const;
  std::optional<LocationCoord> coord(int location_id) const;

  const std::map<std::pair<int, Orientation>, FingerprintReading>& entries() const { return entries_; }
  const std::map<int, LocationCoord>& locations() const { return coords_; }
  std::size_t orientation_count() const;

 private:
  std::string beacon_id_;
  std::map<std::pair<int, Orientation>, FingerprintReading> entries_;
  std::map<int, LocationCoord> coords_;
  std::map<LocationCoord, int> by_cell_;
};

class GridError : public std::runtime_error {
 public:
  GridError(std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

inline constexpr std::string_view kFingerprintCsvHeader = "location_id,x,y,floor,orientation,rss_mean_dbm,rss_sd_db";

// Parses the fingerprint CSV. Errors carry the 1-based line number.
FingerprintGrid parse_fingerprint_csv(std::string_view text, std::string beacon_id);
FingerprintGrid load_fingerprint_csv(const std::string& path, std::string beacon_id);
std::string to_csv(const FingerprintGrid& grid);

struct ReplayResult {
  std::optional<RssSample> sample;
  bool uncalibrated = false;  // player cell is not a surveyed location
};

// Draws gaussian(mean, sd) for the player's (location, orientation). One
// gaussian is consumed per call (even without a sample) unless deterministic.
ReplayResult replay_rss(const FingerprintGrid& grid, const PlayerState& player, RngStream& rng, bool deterministic);

}  // namespace ghostsim

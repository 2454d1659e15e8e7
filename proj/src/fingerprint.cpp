#include "ghostsim/fingerprint.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

namespace ghostsim {

void FingerprintGrid::add_location(int location_id, LocationCoord coord) {
  if (auto it = coords_.find(location_id); it != coords_.end()) {
    if (it->second != coord) {
      throw std::invalid_argument(fmt::format("location {} has conflicting coordinates", location_id));
    }
    return;
  }
  if (auto it = by_cell_.find(coord); it != by_cell_.end()) {
    throw std::invalid_argument(
        fmt::format("locations {} and {} share cell ({},{}) on floor {}", it->second, location_id, coord.x, coord.y,
                    coord.floor));
  }
  coords_.emplace(location_id, coord);
  by_cell_.emplace(coord, location_id);
}

void FingerprintGrid::add_reading(int location_id, Orientation o, FingerprintReading r) {
  if (!coords_.contains(location_id)) {
    throw std::invalid_argument(fmt::format("location {} has no coordinates", location_id));
  }
  if (r.rss_mean_dbm > 0.0) throw std::invalid_argument(fmt::format("location {}: mean RSS above 0 dBm", location_id));
  if (r.rss_sd_db < 0.0) throw std::invalid_argument(fmt::format("location {}: negative SD", location_id));
  if (!entries_.emplace(std::pair{location_id, o}, r).second) {
    throw std::invalid_argument(fmt::format("duplicate reading for location {} facing {}", location_id, to_string(o)));
  }
}

std::optional<FingerprintReading> FingerprintGrid::reading(int location_id, Orientation o) const {
  auto it = entries_.find({location_id, o});
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::optional<int> FingerprintGrid::location_at(int floor, Cell cell) const {
  auto it = by_cell_.find(LocationCoord{cell.x, cell.y, floor});
  if (it == by_cell_.end()) return std::nullopt;
  return it->second;
}

std::optional<LocationCoord> FingerprintGrid::coord(int location_id) const {
  auto it = coords_.find(location_id);
  if (it == coords_.end()) return std::nullopt;
  return it->second;
}

std::size_t FingerprintGrid::orientation_count() const {
  std::set<Orientation> seen;
  for (const auto& [key, _] : entries_) seen.insert(key.second);
  return seen.size();
}

GridError::GridError(std::size_t line, const std::string& what)
    : std::runtime_error(fmt::format("line {}: {}", line, what)), line_(line) {}

namespace {

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
T parse_number(std::string_view field, std::size_t line, std::string_view name) {
  field = trim(field);
  T value{};
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc{} || ptr != end || field.empty()) {
    throw GridError(line, fmt::format("invalid {} '{}'", name, field));
  }
  return value;
}

}  // namespace

FingerprintGrid parse_fingerprint_csv(std::string_view text, std::string beacon_id) {
  FingerprintGrid grid(std::move(beacon_id));
  std::size_t line_no = 0;
  bool header_seen = false;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const std::string_view line = trim(text.substr(pos, nl - pos));
    pos = nl + 1;
    ++line_no;
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != kFingerprintCsvHeader) {
        throw GridError(line_no, fmt::format("expected header '{}'", kFingerprintCsvHeader));
      }
      header_seen = true;
      continue;
    }
    const auto fields = split(line);
    if (fields.size() != 7) throw GridError(line_no, fmt::format("expected 7 fields, found {}", fields.size()));
    const int id = parse_number<int>(fields[0], line_no, "location_id");
    const LocationCoord coord{parse_number<int>(fields[1], line_no, "x"), parse_number<int>(fields[2], line_no, "y"),
                              parse_number<int>(fields[3], line_no, "floor")};
    const auto o = parse_orientation(trim(fields[4]));
    if (!o) throw GridError(line_no, fmt::format("invalid orientation '{}'", trim(fields[4])));
    const FingerprintReading r{parse_number<double>(fields[5], line_no, "rss_mean_dbm"),
                               parse_number<double>(fields[6], line_no, "rss_sd_db")};
    try {
      grid.add_location(id, coord);
      grid.add_reading(id, *o, r);
    } catch (const std::invalid_argument& e) {
      throw GridError(line_no, e.what());
    }
  }
  if (!header_seen) throw GridError(1, "empty file");
  return grid;
}

FingerprintGrid load_fingerprint_csv(const std::string& path, std::string beacon_id) {
  std::ifstream in(path);
  if (!in) throw GridError(0, fmt::format("cannot open '{}'", path));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_fingerprint_csv(ss.str(), std::move(beacon_id));
}

std::string to_csv(const FingerprintGrid& grid) {
  std::string out(kFingerprintCsvHeader);
  out += '\n';
  for (const auto& [key, r] : grid.entries()) {
    const auto c = *grid.coord(key.first);
    out += fmt::format("{},{},{},{},{},{:g},{:g}\n", key.first, c.x, c.y, c.floor, to_string(key.second),
                       r.rss_mean_dbm, r.rss_sd_db);
  }
  return out;
}

ReplayResult replay_rss(const FingerprintGrid& grid, const PlayerState& player, RngStream& rng, bool deterministic) {
  const double z = deterministic ? 0.0 : rng.gaussian(0.0, 1.0);
  ReplayResult out;
  if (player.in_transit()) return out;
  const auto location = grid.location_at(player.floor, player.cell);
  if (!location) {
    out.uncalibrated = true;
    return out;
  }
  const auto r = grid.reading(*location, player.facing);
  if (!r) return out;
  const double value = deterministic ? r->rss_mean_dbm : r->rss_mean_dbm + r->rss_sd_db * z;
  out.sample = RssSample{grid.beacon_id(), player.clock_s, std::min(value, 0.0)};
  return out;
}

}  // namespace ghostsim

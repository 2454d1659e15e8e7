#include "ghostsim/propagation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace ghostsim {

double CrowdConfig::stationary_on_fraction() const {
  const double leave = 1.0 / mean_dwell_s;
  if (on_probability + leave <= 0.0) return 0.0;
  return on_probability / (on_probability + leave);
}

void CrowdConfig::validate() const {
  auto in_unit = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!in_unit(on_probability) || !in_unit(full_block_probability)) {
    throw std::invalid_argument("crowd probabilities must lie in [0, 1]");
  }
  if (!(mean_dwell_s >= 1.0)) throw std::invalid_argument("crowd mean_dwell_s must be >= 1 s");
  if (attenuation_min_db < 0.0 || attenuation_max_db < attenuation_min_db) {
    throw std::invalid_argument("crowd attenuation range must satisfy 0 <= min <= max");
  }
}

void PropagationConfig::validate() const {
  if (!(path_loss_exponent > 0.0)) throw std::invalid_argument("path_loss_exponent must be > 0");
  if (!(noise_sigma_db >= 0.0)) throw std::invalid_argument("noise_sigma_db must be >= 0");
  if (!(detection_floor_dbm < measured_power_1m_dbm)) {
    throw std::invalid_argument("detection_floor_dbm must be below measured_power_1m_dbm");
  }
  if (!(min_distance_m > 0.0)) throw std::invalid_argument("min_distance_m must be > 0");
  crowd.validate();
}

void CrowdProcess::step() {
  ++slot_;
  const double transition = rng_.uniform();
  const double level = rng_.uniform();
  const double block = rng_.uniform();
  if (on_) {
    if (transition < 1.0 / config_.mean_dwell_s) on_ = false;
  } else {
    if (transition < config_.on_probability) on_ = true;
  }
  if (on_) {
    effect_.loss_db = config_.attenuation_min_db + (config_.attenuation_max_db - config_.attenuation_min_db) * level;
    effect_.fully_blocked = block < config_.full_block_probability;
  } else {
    effect_ = {};
  }
}

CrowdEffect CrowdProcess::at(double clock_s) {
  const auto target = static_cast<std::int64_t>(std::floor(clock_s));
  while (slot_ < target) step();
  return effect_;
}

CrowdEffect crowd_attenuation(const CrowdConfig& config, CrowdProcess& process, double clock_s) {
  if (config.on_probability <= 0.0) {
    process.at(clock_s);  // keep the stream aligned
    return {};
  }
  return process.at(clock_s);
}

double orientation_loss(Orientation facing, double bearing_dx, double bearing_dy, double max_loss_db) {
  const double norm = std::hypot(bearing_dx, bearing_dy);
  if (norm == 0.0) return 0.0;
  const Cell f = direction_vector(facing);
  const double cos_theta = std::clamp((f.x * bearing_dx + f.y * bearing_dy) / norm, -1.0, 1.0);
  return max_loss_db * (1.0 - cos_theta) / 2.0;
}

double mean_rss(const World& world, const PropagationConfig& config, const Beacon& beacon, const PlayerState& player) {
  const double dx = beacon.cell.x - player.cell.x;
  const double dy = beacon.cell.y - player.cell.y;
  const double d = std::max(config.min_distance_m, std::hypot(dx, dy) * world.cell_size_m);

  double rss = config.measured_power_1m_dbm + (beacon.tx_power_dbm - config.reference_tx_power_dbm) -
               10.0 * config.path_loss_exponent * std::log10(d);
  if (beacon.floor == player.floor) {
    const Floor* floor = world.find_floor(player.venue, player.floor);
    if (floor != nullptr) {
      const auto obs = path_obstruction(*floor, player.cell, beacon.cell);
      rss -= obs.walls * config.wall_loss_db + obs.shelves * config.shelf_loss_db;
    }
  } else if (config.floor_leak_db) {
    rss -= *config.floor_leak_db;
  }
  rss -= orientation_loss(player.facing, dx, dy, config.orientation_max_loss_db);
  return rss;
}

std::optional<RssSample> realize_rss(const PropagationConfig& config, const Beacon& beacon, const PlayerState& player,
                                     double mean, double noise, CrowdEffect crowd) {
  if (player.in_transit() || beacon.venue != player.venue) return std::nullopt;
  if (beacon.floor != player.floor && !config.floor_leak_db) return std::nullopt;
  if (!config.deterministic && crowd.fully_blocked) return std::nullopt;
  double rss = mean;
  if (!config.deterministic) rss += noise - crowd.loss_db;
  if (rss < config.detection_floor_dbm) return std::nullopt;
  return RssSample{beacon.id, player.clock_s, std::min(rss, 0.0)};
}

std::optional<RssSample> predict_rss(const World& world, const PropagationConfig& config, const Beacon& beacon,
                                     const PlayerState& player, RngStream& rng, CrowdEffect crowd) {
  const double noise = config.deterministic ? 0.0 : rng.gaussian(0.0, config.noise_sigma_db);
  if (player.in_transit() || beacon.venue != player.venue) return std::nullopt;
  return realize_rss(config, beacon, player, mean_rss(world, config, beacon, player), noise, crowd);
}

}  // namespace ghostsim

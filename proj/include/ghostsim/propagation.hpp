#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "ghostsim/rng.hpp"
#include "ghostsim/world.hpp"

namespace ghostsim {

struct CrowdConfig {
  double on_probability = 0.02;  // off -> on, per second
  double mean_dwell_s = 10.0;    // mean length of an "on" spell
  double attenuation_min_db = 5.0;
  double attenuation_max_db = 15.0;
  double full_block_probability = 0.1;  // per second while on

  // Long-run fraction of seconds spent in the "on" state.
  double stationary_on_fraction() const;
  void validate() const;
};

struct PropagationConfig {
  double measured_power_1m_dbm = -58.0;
  double reference_tx_power_dbm = -4.0;
  double path_loss_exponent = 2.2;
  double shelf_loss_db = 3.0;
  double wall_loss_db = 10.0;
  double orientation_max_loss_db = 10.0;
  double noise_sigma_db = 3.2;
  double detection_floor_dbm = -92.0;
  double min_distance_m = 0.5;
  CrowdConfig crowd;
  bool deterministic = false;
  // When set, beacons on other floors of the same venue leak through with this
  // extra loss instead of being inaudible.
  std::optional<double> floor_leak_db;

  void validate() const;
};

struct RssSample {
  std::string beacon_id;
  double timestamp_s = 0.0;
  double rssi_dbm = 0.0;
  friend bool operator==(const RssSample&, const RssSample&) = default;
};

struct CrowdEffect {
  double loss_db = 0.0;
  bool fully_blocked = false;
  friend bool operator==(const CrowdEffect&, const CrowdEffect&) = default;
};

// Two-state (off/on) Markov chain stepped once per whole second. Every step
// consumes the same number of draws whatever the state, so two processes with
// the same seed stay in lockstep regardless of who queries them.
class CrowdProcess {
 public:
  CrowdProcess(CrowdConfig config, RngStream rng) : config_(config), rng_(rng) {}

  // Effect in force at clock_s (the second slot floor(clock_s)). Clock must
  // not go backwards across slots.
  CrowdEffect at(double clock_s);
  bool on() const { return on_; }
  std::int64_t slot() const { return slot_; }

 private:
  void step();

  CrowdConfig config_;
  RngStream rng_;
  std::int64_t slot_ = -1;
  bool on_ = false;
  CrowdEffect effect_;
};

CrowdEffect crowd_attenuation(const CrowdConfig& config, CrowdProcess& process, double clock_s);

// max_loss * (1 - cos theta) / 2, theta between facing and the bearing to the
// beacon. Zero when the bearing is undefined (dx = dy = 0).
double orientation_loss(Orientation facing, double bearing_dx, double bearing_dy, double max_loss_db);

// Noise-free model value; ignores crowd and detection floor. Requires same venue.
double mean_rss(const World& world, const PropagationConfig& config, const Beacon& beacon, const PlayerState& player);

// Full model: path loss, obstruction, orientation, crowd, noise. Returns
// nullopt for beacons on other floors, full crowd blocks, and readings below
// the detection floor. `rng` is advanced by exactly one gaussian per call
// unless the config is deterministic.
std::optional<RssSample> predict_rss(const World& world, const PropagationConfig& config, const Beacon& beacon,
                                     const PlayerState& player, RngStream& rng, CrowdEffect crowd = {});

// Applies noise, crowd and the detection floor to a precomputed model mean.
// predict_rss == realize_rss(mean_rss(...), gaussian draw, crowd).
std::optional<RssSample> realize_rss(const PropagationConfig& config, const Beacon& beacon, const PlayerState& player,
                                     double mean, double noise, CrowdEffect crowd);

}  // namespace ghostsim

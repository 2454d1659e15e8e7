#pragma once

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ghostsim/fingerprint.hpp"
#include "ghostsim/propagation.hpp"
#include "ghostsim/rng.hpp"
#include "ghostsim/world.hpp"

namespace ghostsim {

struct ScanConfig {
  int window_samples = 50;
  double window_span_s = 5.0;
  double window_step_s = 1.0;

  void validate() const;
};

struct RssWindow {
  std::string beacon_id;
  double t_start_s = 0.0;  // exclusive
  double t_end_s = 0.0;    // inclusive
  int n = 0;
  int expected_samples = 0;
  std::optional<double> mean_dbm;
  std::optional<double> sd_db;  // population SD
  double coverage = 0.0;

  bool empty() const { return n == 0; }
};

// Number of advertising events k / rate_hz falling in (t_start, t_end].
int advertising_events(double rate_hz, double t_start_s, double t_end_s);

// Statistics over samples of `beacon_id` with timestamp in (t_start, t_end].
// `samples` must be sorted by timestamp.
RssWindow window_stats(std::span<const RssSample> samples, std::string_view beacon_id, double t_start_s,
                       double t_end_s, double adv_rate_hz);

// Beacon with the largest mean among non-empty windows; ties go to the
// lexicographically smallest id.
std::optional<std::string> strongest_beacon(std::span<const RssWindow> windows);

// Empirical replay of surveyed beacons; beacons without a grid stay silent.
struct ReplaySource {
  std::map<std::string, FingerprintGrid, std::less<>> grids;
  bool deterministic = false;
};

using SignalSource = std::variant<PropagationConfig, ReplaySource>;

bool is_deterministic(const SignalSource& source);

// Physical signal environment for one session: per-beacon noise streams and
// the crowd process, all derived from one seed. Noise draws are tied to
// advertising events, not to what the player does, so identical seeds give
// identical physical realisations along any path.
class SignalEnvironment {
 public:
  SignalEnvironment(std::shared_ptr<const World> world, SignalSource source, std::uint64_t seed);

  // One attempted sample per beacon per advertising event in (t_from, t_to],
  // taken at `player`'s pose. Sorted by timestamp, then beacon order.
  std::vector<RssSample> tick(const PlayerState& player, double t_from, double t_to);

  const World& world() const { return *world_; }
  const SignalSource& source() const { return source_; }
  std::size_t uncalibrated_reads() const { return uncalibrated_reads_; }
  // Crowd state for the current slot (diagnostics and tests).
  const CrowdProcess& crowd() const { return crowd_; }

 private:
  std::shared_ptr<const World> world_;
  SignalSource source_;
  std::vector<RngStream> beacon_rngs_;
  CrowdProcess crowd_;
  std::size_t uncalibrated_reads_ = 0;
};

}  // namespace ghostsim

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "ghostsim/feedback.hpp"
#include "ghostsim/fingerprint.hpp"
#include "ghostsim/guidance.hpp"
#include "ghostsim/scanner.hpp"
#include "ghostsim/world.hpp"

namespace ghostsim {

using GridSet = std::map<std::string, FingerprintGrid, std::less<>>;

// Hot-cold follower: straight on Closer/Steady/Blackout, turn right then step
// on Farther/Lost or after a blocked step.
struct GreedyFollower {};
struct RandomWalker {};
struct ScriptedWalk {
  std::vector<MoveCommand> commands;
};
// Seamless baseline: localizes against a fingerprint survey every step and
// walks toward the target's surveyed cell.
struct SeamlessNavigator {
  GridSet survey;
};

using Agent = std::variant<GreedyFollower, RandomWalker, ScriptedWalk, SeamlessNavigator>;

std::string_view agent_name(const Agent& agent);

struct EpisodeConfig {
  SignalSource source = PropagationConfig{};
  // One agent step is one full, fresh window.
  ScanConfig scan{50, 5.0, 5.0};
  FeedbackThresholds thresholds;
  SeamStrategy strategy = SeamStrategy::Opportunistic;
  MoveTiming timing{5.0, 0.0};
  int step_budget = 100;
  std::string target_beacon;
  std::optional<PlayerState> start;  // default: entrance of the target's venue
  bool keep_events = true;
};

struct EpisodeReport {
  std::uint64_t seed = 0;
  int steps_taken = 0;
  bool found = false;
  std::optional<double> time_to_find_s;
  double feedback_truth_agreement = 1.0;  // 1.0 when no Closer/Farther was judged
  int trend_events = 0;
  int blackout_count = 0;
  double duration_s = 0.0;
  std::vector<FeedbackEvent> events;
  std::vector<FeedbackCategory> categories;  // one per evaluation
  std::vector<double> positioning_errors_m;  // seamless agent only
  int missing_estimates = 0;                 // seamless agent only
  PlayerState final_state;
  std::vector<RssWindow> windows;            // ScriptedWalk: target window per evaluation
};

// Next commands for the hot-cold follower given the events delivered so far.
// Only the last event matters; no events means keep walking.
std::vector<MoveCommand> greedy_policy(std::span<const FeedbackEvent> history, Orientation facing,
                                       bool last_blocked = false);

EpisodeReport run_episode(std::shared_ptr<const World> world, const Agent& agent, const EpisodeConfig& config,
                          std::uint64_t seed);

struct LocationEstimate {
  int location_id = 0;
  LocationCoord coord;
};

// Nearest neighbour over stored means for `facing`; a missing observation or
// stored reading counts as the detection floor. Ties go to the lowest id.
std::optional<LocationEstimate> fingerprint_localize(std::span<const RssWindow> windows, const GridSet& grids,
                                                     Orientation facing, double missing_dbm = -92.0);

// Deterministic model survey of every open cell and orientation of one floor,
// one grid per beacon on that floor. Location ids are row-major, from 1.
GridSet fingerprint_survey(const World& world, const PropagationConfig& config, std::string_view venue, int floor);

// Delivered-event counts for one realtime trace: every rendered event is
// delivered in realtime mode; popup mode notifies on category change and a
// simulated user acknowledges one popup per update once it has vibrated for
// `ack_delay_s`.
struct AttentionStats {
  int realtime_deliveries = 0;
  int popup_deliveries = 0;
  int popup_notifications = 0;
};
AttentionStats attention_replay(std::span<const FeedbackEvent> realtime_trace, std::span<const double> update_times,
                                double ack_delay_s);

struct CrowdLevel {
  std::string label;
  CrowdConfig crowd;
};

struct SweepConfig {
  std::vector<double> noise_sigmas{0.0, 3.2, 6.4};
  std::vector<CrowdLevel> crowd_levels;  // empty: none / default / dense
  int seeds = 50;
  std::uint64_t base_seed = 1;
  int step_budget = 120;
  std::string target_beacon;
  double ack_delay_s = 5.0;
};

std::vector<CrowdLevel> default_crowd_levels();

struct ComparisonCell {
  double noise_sigma_db = 0.0;
  std::string crowd_label;
  int episodes = 0;
  double seamful_success_rate = 0.0;
  std::optional<double> seamful_median_steps;
  double seamless_success_rate = 0.0;
  std::optional<double> seamless_median_error_m;
  double seamless_missing_fraction = 0.0;
  double realtime_events_per_min = 0.0;
  double popup_events_per_min = 0.0;
  bool popup_below_realtime_every_trace = true;
};

struct ComparisonReport {
  std::vector<ComparisonCell> cells;
  std::string to_csv() const;
  std::string to_text() const;
};

ComparisonReport compare_paradigms(std::shared_ptr<const World> world, const SweepConfig& sweep);

// Measurement walk over a surveyed floor: visits the grid's locations in id
// order along shortest open paths and, at each, turns to every orientation and
// listens for one step. `tags[i]` names the (location, orientation) measured
// by the i-th timed command (steps and waits), if any.
struct SurveyRoute {
  Cell start;
  std::vector<MoveCommand> commands;
  std::vector<std::optional<std::pair<int, Orientation>>> tags;
};
SurveyRoute survey_route(const World& world, std::string_view venue, int floor, const FingerprintGrid& grid);

double median(std::vector<double> values);
double percentile(std::vector<double> values, double p);

}  // namespace ghostsim

#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ghostsim/feedback.hpp"
#include "ghostsim/scanner.hpp"
#include "ghostsim/world.hpp"

namespace ghostsim {

struct GuidanceConfig {
  ScanConfig scan;
  FeedbackThresholds thresholds;
  SeamStrategy strategy = SeamStrategy::Opportunistic;
  DeliveryMode delivery = DeliveryMode::Popup;
};

struct GuidanceTarget {
  std::string beacon_id;
  std::string ghost_id;
};

// One classification of the target window.
struct Evaluation {
  double t_s = 0.0;
  FeedbackCategory category = FeedbackCategory::Steady;
  RssWindow window;
  std::optional<RssWindow> reference;
};

struct GuidanceOutput {
  std::vector<Evaluation> evaluations;
  std::vector<FeedbackEvent> events;        // rendered, in time order
  std::vector<DeliveryRecord> deliveries;   // realtime deliveries
  std::vector<int> floor_changes;           // new active floors, in order
};

// Session-side feedback pipeline: buffers samples, keeps the active floor,
// evaluates the target beacon at every window-step boundary and renders and
// queues feedback.
//
// The trend reference is the last window that produced Closer or Farther (or
// the first window of a segment). A segment restarts whenever the heading,
// venue or active floor changes, and target windows never reach back past the
// segment start; no target evaluation happens until a full window fits.
// Stairway windows ignore readings taken before the latest floor switch.
class GuidanceTracker {
 public:
  GuidanceTracker(std::shared_ptr<const World> world, GuidanceConfig config, FeedbackRenderer renderer,
                  int active_floor);

  void set_target(std::optional<GuidanceTarget> target);
  const std::optional<GuidanceTarget>& target() const { return target_; }

  // `pose` is the player's pose over (t_from, t_to]; `samples` are the raw
  // readings for that interval, sorted by time.
  GuidanceOutput advance(const PlayerState& pose, std::span<const RssSample> samples, double t_from, double t_to);

  AckResult acknowledge(double now_s) { return queue_.acknowledge(now_s); }
  const NotificationQueue& queue() const { return queue_; }
  int active_floor() const { return active_floor_; }
  const std::vector<std::string>& log() const { return log_; }
  const GuidanceConfig& config() const { return config_; }

 private:
  void restart_segment(double t);
  void emit(FeedbackEvent event, GuidanceOutput& out);

  std::shared_ptr<const World> world_;
  GuidanceConfig config_;
  FeedbackRenderer renderer_;
  NotificationQueue queue_;
  int active_floor_;
  std::optional<GuidanceTarget> target_;

  std::vector<RssSample> buffer_;  // sorted by time
  std::optional<PlayerState> segment_pose_;
  double segment_start_s_ = 0.0;
  double last_switch_s_ = -1e300;
  std::optional<RssWindow> reference_;
  ClassifierHistory history_;
  std::optional<FeedbackCategory> last_category_;
  std::int64_t last_eval_index_ = 0;
  std::vector<std::string> log_;
};

}  // namespace ghostsim

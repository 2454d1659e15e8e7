#include "ghostsim/guidance.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace ghostsim {

namespace {

constexpr double kEps = 1e-9;

bool is_stairway(const Beacon& b) { return b.role != BeaconRole::Artifact; }

}  // namespace

GuidanceTracker::GuidanceTracker(std::shared_ptr<const World> world, GuidanceConfig config,
                                 FeedbackRenderer renderer, int active_floor)
    : world_(std::move(world)),
      config_(config),
      renderer_(std::move(renderer)),
      queue_(config.delivery),
      active_floor_(active_floor) {
  config_.scan.validate();
  config_.thresholds.validate();
}

void GuidanceTracker::set_target(std::optional<GuidanceTarget> target) {
  if (target && world_->find_beacon(target->beacon_id) == nullptr) {
    throw std::invalid_argument(fmt::format("unknown target beacon '{}'", target->beacon_id));
  }
  const bool changed = target.has_value() != target_.has_value() ||
                       (target && target_ && target->beacon_id != target_->beacon_id);
  target_ = std::move(target);
  if (changed) {
    reference_.reset();
    history_ = {};
    last_category_.reset();
  }
}

void GuidanceTracker::restart_segment(double t) {
  segment_start_s_ = t;
  reference_.reset();
}

void GuidanceTracker::emit(FeedbackEvent event, GuidanceOutput& out) {
  const bool popup = queue_.mode() == DeliveryMode::Popup;
  const bool changed = !last_category_ || *last_category_ != event.category;
  if (event.category != FeedbackCategory::FloorSwitched) last_category_ = event.category;
  out.events.push_back(event);
  if (popup && !changed && event.category != FeedbackCategory::FloorSwitched) return;
  if (auto d = queue_.notify(std::move(event))) out.deliveries.push_back(std::move(*d));
}

GuidanceOutput GuidanceTracker::advance(const PlayerState& pose, std::span<const RssSample> samples, double t_from,
                                        double t_to) {
  GuidanceOutput out;
  const double step = config_.scan.window_step_s;
  const double span = config_.scan.window_span_s;

  if (!segment_pose_ || segment_pose_->facing != pose.facing || segment_pose_->venue != pose.venue ||
      segment_pose_->transit_to != pose.transit_to) {
    if (segment_pose_ && (segment_pose_->venue != pose.venue || segment_pose_->transit_to != pose.transit_to)) {
      buffer_.clear();
    }
    restart_segment(t_from);
  }
  segment_pose_ = pose;

  const Beacon* last = nullptr;
  for (const auto& s : samples) {
    if (last == nullptr || last->id != s.beacon_id) last = world_->find_beacon(s.beacon_id);
    if (last == nullptr) {
      floor_filter(active_floor_, s, *world_, &log_);
      continue;
    }
    // Same decision as floor_filter, without a second lookup.
    if (is_stairway(*last) || last->floor == active_floor_) buffer_.push_back(s);
  }

  const std::vector<RssSample>& flat = buffer_;
  const std::string_view ghost = target_ ? std::string_view(target_->ghost_id) : kGuideGhostId;

  auto k = std::max(last_eval_index_ + 1, static_cast<std::int64_t>(std::floor(t_from / step + kEps)) + 1);
  for (; static_cast<double>(k) * step <= t_to + kEps; ++k) {
    last_eval_index_ = k;
    const double te = static_cast<double>(k) * step;
    const double ts = te - span;
    if (pose.in_transit()) continue;

    std::vector<RssWindow> stair_windows;
    for (const auto& b : world_->beacons) {
      if (b.venue != pose.venue || !is_stairway(b)) continue;
      // readings from before the last switch don't vote on the next one
      stair_windows.push_back(window_stats(flat, b.id, std::max(ts, last_switch_s_), te, b.adv_rate_hz));
    }
    const FloorUpdate fu = update_active_floor(active_floor_, stair_windows, *world_, config_.thresholds);
    if (fu.switched) {
      active_floor_ = fu.active_floor;
      last_switch_s_ = te;
      out.floor_changes.push_back(active_floor_);
      restart_segment(te);
      const auto trig = std::find_if(stair_windows.begin(), stair_windows.end(),
                                     [&](const RssWindow& w) { return w.beacon_id == *fu.trigger_beacon; });
      if (auto ev = renderer_.render(FeedbackCategory::FloorSwitched, ghost, config_.strategy, *trig, std::nullopt,
                                     te)) {
        emit(std::move(*ev), out);
      }
      continue;
    }

    if (!target_) continue;
    const Beacon* tb = world_->find_beacon(target_->beacon_id);
    if (tb->venue != pose.venue || tb->floor != active_floor_) continue;
    if (ts + kEps < segment_start_s_) continue;

    RssWindow cur = window_stats(flat, tb->id, ts, te, tb->adv_rate_hz);
    history_ = advance_history(history_, cur, config_.thresholds);
    const FeedbackCategory cat = classify(reference_, cur, config_.thresholds, history_);
    out.evaluations.push_back({te, cat, cur, reference_});
    const std::optional<RssWindow> prev_ref = reference_;
    if (!cur.empty() && (!reference_ || cat == FeedbackCategory::Closer || cat == FeedbackCategory::Farther)) {
      reference_ = cur;
    }
    if (auto ev = renderer_.render(cat, ghost, config_.strategy, cur, prev_ref, te)) emit(std::move(*ev), out);
  }

  const double keep_after = static_cast<double>(last_eval_index_ + 1) * step - span;
  auto first_kept = std::find_if(buffer_.begin(), buffer_.end(),
                                 [&](const RssSample& s) { return s.timestamp_s > keep_after + kEps; });
  buffer_.erase(buffer_.begin(), first_kept);
  return out;
}

}  // namespace ghostsim

#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ghostsim/propagation.hpp"
#include "ghostsim/scanner.hpp"
#include "ghostsim/world.hpp"

namespace ghostsim {

struct FeedbackThresholds {
  double trend_delta_db = 3.0;
  double weak_mean_dbm = -88.0;
  double high_sd_db = 6.0;
  int blackout_windows = 1;
  int lost_windows = 2;
  double found_mean_dbm = -65.0;
  double switch_mean_dbm = -70.0;

  // found > switch > weak > detection floor.
  void validate(double detection_floor_dbm = -92.0) const;
};

enum class FeedbackCategory : std::uint8_t { Closer, Farther, Steady, Lost, Blackout, Found, FloorSwitched };
enum class SeamStrategy : std::uint8_t { Pessimistic, Optimistic, Cautious, Opportunistic };
enum class Emotion : std::uint8_t { Happy, Angry, Neutral, Excited };

std::string_view to_string(FeedbackCategory c);
std::string_view to_string(SeamStrategy s);
std::string_view to_string(Emotion e);
std::optional<FeedbackCategory> parse_category(std::string_view s);
std::optional<SeamStrategy> parse_strategy(std::string_view s);
std::optional<Emotion> parse_emotion(std::string_view s);

// Whether `e` is an allowed emotion for `c` (Closer/Found happy or excited,
// Farther/Lost angry, anything else unconstrained).
bool emotion_fits(FeedbackCategory c, Emotion e);

struct FeedbackEvent {
  FeedbackCategory category = FeedbackCategory::Steady;
  std::string ghost_id;
  std::string beacon_id;
  std::string message;
  Emotion emotion = Emotion::Neutral;
  std::optional<std::string> uncertainty_note;
  double timestamp_s = 0.0;
  friend bool operator==(const FeedbackEvent&, const FeedbackEvent&) = default;
};

// Consecutive-window counters feeding the Blackout and Lost rules.
struct ClassifierHistory {
  int empty_run = 0;
  int weak_run = 0;
  friend bool operator==(const ClassifierHistory&, const ClassifierHistory&) = default;
};

// History after observing `cur`. Empty windows extend the empty run and leave
// the weak run untouched.
ClassifierHistory advance_history(ClassifierHistory history, const RssWindow& cur,
                                  const FeedbackThresholds& thresholds);

// Precedence: Found > Blackout > Lost > trend (Closer / Farther / Steady).
// `history` must already include `cur` (see advance_history). `reference` is
// the window the trend is measured against; absent or empty means Steady.
FeedbackCategory classify(const std::optional<RssWindow>& reference, const RssWindow& cur,
                          const FeedbackThresholds& thresholds, const ClassifierHistory& history);

struct MessageLine {
  std::string text;
  Emotion emotion = Emotion::Neutral;
};

// Category -> lines, chosen round-robin. Every category must have a line.
class MessageTable {
 public:
  MessageTable() = default;
  explicit MessageTable(std::map<FeedbackCategory, std::vector<MessageLine>> lines);

  const std::vector<MessageLine>& lines(FeedbackCategory c) const;

 private:
  // Immutable once built; copies share it.
  std::shared_ptr<const std::map<FeedbackCategory, std::vector<MessageLine>>> lines_;
};

// Parses the JSON message table; throws std::invalid_argument.
MessageTable parse_message_table(std::string_view json_text);
MessageTable load_message_table(const std::string& path);
// The built-in table shipped as fixtures/messages.json.
const MessageTable& default_message_table();
std::string_view default_message_table_json();

inline constexpr std::string_view kGuideGhostId = "guide";

// Seam presentation. Holds per-category round-robin cursors, so one renderer
// belongs to one session.
class FeedbackRenderer {
 public:
  FeedbackRenderer(MessageTable table, std::vector<std::string> ghost_ids, FeedbackThresholds thresholds);

  // Throws std::invalid_argument for an unknown ghost. Returns nullopt when
  // the strategy suppresses the event. Pessimistic only suppresses trend and
  // Lost readings; Found, Blackout and FloorSwitched always render.
  std::optional<FeedbackEvent> render(FeedbackCategory category, std::string_view ghost_id, SeamStrategy strategy,
                                      const RssWindow& cur, const std::optional<RssWindow>& reference,
                                      double timestamp_s);

  bool knows(std::string_view ghost_id) const;

 private:
  MessageTable table_;
  std::vector<std::string> ghosts_;
  FeedbackThresholds thresholds_;
  std::map<FeedbackCategory, std::size_t> cursor_;
};

// "-75 ± 4 dBm" style note; one decimal at most.
std::string uncertainty_note(const RssWindow& w);

enum class FilterDecision : std::uint8_t { Keep, Drop };

// Drops samples from beacons on a floor other than the active one. Unknown
// beacons are dropped and a line is appended to `log`.
FilterDecision floor_filter(int active_floor, const RssSample& sample, const World& world,
                            std::vector<std::string>* log = nullptr);

struct FloorUpdate {
  int active_floor = 0;
  bool switched = false;
  std::optional<std::string> trigger_beacon;
};

// Stairway beacons act as switches: a qualifying top (bottom) window selects
// the beacon's own floor. Strongest qualifying mean wins; an exact tie between
// different floors leaves the floor unchanged.
FloorUpdate update_active_floor(int active_floor, std::span<const RssWindow> stairway_windows, const World& world,
                                const FeedbackThresholds& thresholds);

enum class DeliveryMode : std::uint8_t { Realtime, Popup };
std::string_view to_string(DeliveryMode m);
std::optional<DeliveryMode> parse_delivery_mode(std::string_view s);

struct DeliveryRecord {
  FeedbackEvent event;
  double delivered_at_s = 0.0;
  bool sound = false;
};

struct AckResult {
  std::optional<DeliveryRecord> delivered;
  bool warning = false;  // nothing to acknowledge
};

// Realtime delivers immediately with a sound cue. Popup queues events FIFO
// and vibrates until every queued popup is acknowledged; one ack delivers one
// event.
class NotificationQueue {
 public:
  explicit NotificationQueue(DeliveryMode mode = DeliveryMode::Popup) : mode_(mode) {}

  std::optional<DeliveryRecord> notify(FeedbackEvent event);
  AckResult acknowledge(double now_s);

  DeliveryMode mode() const { return mode_; }
  bool vibration_active() const { return !pending_.empty(); }
  std::size_t pending_count() const { return pending_.size(); }
  // The popup on screen, if any.
  const FeedbackEvent* showing() const { return pending_.empty() ? nullptr : &pending_.front(); }
  // Clock of the event that started the current vibration.
  std::optional<double> vibrating_since() const { return vibrating_since_; }

 private:
  DeliveryMode mode_;
  std::deque<FeedbackEvent> pending_;
  std::optional<double> vibrating_since_;
};

}  // namespace ghostsim

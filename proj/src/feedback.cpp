#include "ghostsim/feedback.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>
#include <json.hpp>

namespace ghostsim {

void FeedbackThresholds::validate(double detection_floor_dbm) const {
  if (!(found_mean_dbm > switch_mean_dbm && switch_mean_dbm > weak_mean_dbm && weak_mean_dbm > detection_floor_dbm)) {
    throw std::invalid_argument("thresholds must satisfy found > switch > weak > detection floor");
  }
  if (blackout_windows < 1 || lost_windows < 1) throw std::invalid_argument("window counts must be >= 1");
  if (!(trend_delta_db > 0.0)) throw std::invalid_argument("trend_delta_db must be positive");
}

std::string_view to_string(FeedbackCategory c) {
  switch (c) {
    case FeedbackCategory::Closer: return "closer";
    case FeedbackCategory::Farther: return "farther";
    case FeedbackCategory::Steady: return "steady";
    case FeedbackCategory::Lost: return "lost";
    case FeedbackCategory::Blackout: return "blackout";
    case FeedbackCategory::Found: return "found";
    case FeedbackCategory::FloorSwitched: return "floor_switched";
  }
  return "?";
}

std::string_view to_string(SeamStrategy s) {
  switch (s) {
    case SeamStrategy::Pessimistic: return "pessimistic";
    case SeamStrategy::Optimistic: return "optimistic";
    case SeamStrategy::Cautious: return "cautious";
    case SeamStrategy::Opportunistic: return "opportunistic";
  }
  return "?";
}

std::string_view to_string(Emotion e) {
  switch (e) {
    case Emotion::Happy: return "happy";
    case Emotion::Angry: return "angry";
    case Emotion::Neutral: return "neutral";
    case Emotion::Excited: return "excited";
  }
  return "?";
}

std::string_view to_string(DeliveryMode m) { return m == DeliveryMode::Realtime ? "realtime" : "popup"; }

std::optional<FeedbackCategory> parse_category(std::string_view s) {
  for (auto c : {FeedbackCategory::Closer, FeedbackCategory::Farther, FeedbackCategory::Steady, FeedbackCategory::Lost,
                 FeedbackCategory::Blackout, FeedbackCategory::Found, FeedbackCategory::FloorSwitched}) {
    if (to_string(c) == s) return c;
  }
  return std::nullopt;
}

std::optional<SeamStrategy> parse_strategy(std::string_view s) {
  for (auto v : {SeamStrategy::Pessimistic, SeamStrategy::Optimistic, SeamStrategy::Cautious,
                 SeamStrategy::Opportunistic}) {
    if (to_string(v) == s) return v;
  }
  return std::nullopt;
}

std::optional<Emotion> parse_emotion(std::string_view s) {
  for (auto v : {Emotion::Happy, Emotion::Angry, Emotion::Neutral, Emotion::Excited}) {
    if (to_string(v) == s) return v;
  }
  return std::nullopt;
}

std::optional<DeliveryMode> parse_delivery_mode(std::string_view s) {
  if (s == "realtime") return DeliveryMode::Realtime;
  if (s == "popup") return DeliveryMode::Popup;
  return std::nullopt;
}

bool emotion_fits(FeedbackCategory c, Emotion e) {
  switch (c) {
    case FeedbackCategory::Closer:
    case FeedbackCategory::Found: return e == Emotion::Happy || e == Emotion::Excited;
    case FeedbackCategory::Farther:
    case FeedbackCategory::Lost: return e == Emotion::Angry;
    default: return true;
  }
}

ClassifierHistory advance_history(ClassifierHistory history, const RssWindow& cur,
                                  const FeedbackThresholds& thresholds) {
  if (cur.empty()) {
    ++history.empty_run;
    return history;
  }
  history.empty_run = 0;
  const bool weak = *cur.mean_dbm < thresholds.weak_mean_dbm || *cur.sd_db > thresholds.high_sd_db;
  history.weak_run = weak ? history.weak_run + 1 : 0;
  return history;
}

FeedbackCategory classify(const std::optional<RssWindow>& reference, const RssWindow& cur,
                          const FeedbackThresholds& thresholds, const ClassifierHistory& history) {
  if (!cur.empty() && *cur.mean_dbm >= thresholds.found_mean_dbm) return FeedbackCategory::Found;
  if (cur.empty()) {
    return history.empty_run >= thresholds.blackout_windows ? FeedbackCategory::Blackout : FeedbackCategory::Steady;
  }
  if (history.weak_run >= thresholds.lost_windows) return FeedbackCategory::Lost;
  if (!reference || reference->empty()) return FeedbackCategory::Steady;
  const double delta = *cur.mean_dbm - *reference->mean_dbm;
  if (delta >= thresholds.trend_delta_db) return FeedbackCategory::Closer;
  if (delta <= -thresholds.trend_delta_db) return FeedbackCategory::Farther;
  return FeedbackCategory::Steady;
}

MessageTable::MessageTable(std::map<FeedbackCategory, std::vector<MessageLine>> lines) {
  for (auto c : {FeedbackCategory::Closer, FeedbackCategory::Farther, FeedbackCategory::Steady, FeedbackCategory::Lost,
                 FeedbackCategory::Blackout, FeedbackCategory::Found, FeedbackCategory::FloorSwitched}) {
    auto it = lines.find(c);
    if (it == lines.end() || it->second.empty()) {
      throw std::invalid_argument(fmt::format("message table has no lines for '{}'", to_string(c)));
    }
    for (const auto& line : it->second) {
      if (line.text.empty()) throw std::invalid_argument(fmt::format("empty message for '{}'", to_string(c)));
      if (!emotion_fits(c, line.emotion)) {
        throw std::invalid_argument(
            fmt::format("emotion '{}' does not fit category '{}'", to_string(line.emotion), to_string(c)));
      }
    }
  }
  lines_ = std::make_shared<const std::map<FeedbackCategory, std::vector<MessageLine>>>(std::move(lines));
}

const std::vector<MessageLine>& MessageTable::lines(FeedbackCategory c) const {
  if (!lines_) throw std::logic_error("empty message table");
  return lines_->at(c);
}

MessageTable parse_message_table(std::string_view json_text) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(fmt::format("message table: {}", e.what()));
  }
  if (!root.is_object()) throw std::invalid_argument("message table must be a JSON object");
  std::map<FeedbackCategory, std::vector<MessageLine>> lines;
  for (const auto& [key, list] : root.items()) {
    const auto category = parse_category(key);
    if (!category) throw std::invalid_argument(fmt::format("message table: unknown category '{}'", key));
    if (!list.is_array()) throw std::invalid_argument(fmt::format("message table: '{}' must be an array", key));
    for (const auto& item : list) {
      if (!item.is_object() || !item.contains("text") || !item["text"].is_string() || !item.contains("emotion") ||
          !item["emotion"].is_string()) {
        throw std::invalid_argument(fmt::format("message table: '{}' entries need text and emotion", key));
      }
      const auto emotion = parse_emotion(item["emotion"].get<std::string>());
      if (!emotion) throw std::invalid_argument(fmt::format("message table: bad emotion in '{}'", key));
      lines[*category].push_back({item["text"].get<std::string>(), *emotion});
    }
  }
  return MessageTable(std::move(lines));
}

MessageTable load_message_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument(fmt::format("cannot open message table '{}'", path));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_message_table(ss.str());
}

std::string_view default_message_table_json() {
  return R"json({
  "closer": [
    {"text": "Yes, I can see we're going into the right direction!", "emotion": "happy"},
    {"text": "Oh, this looks familiar! Keep going!", "emotion": "happy"},
    {"text": "I can see it more clearly now!", "emotion": "excited"}
  ],
  "farther": [
    {"text": "Hmm, everything looks blurry this way...", "emotion": "angry"},
    {"text": "No, no! I can't see it from here, let's try another way!", "emotion": "angry"}
  ],
  "steady": [
    {"text": "I'm looking around... nothing has changed yet.", "emotion": "neutral"},
    {"text": "Keep your eyes open, we're not there yet.", "emotion": "neutral"}
  ],
  "lost": [
    {"text": "I can't see anything familiar here, I think we're getting lost!", "emotion": "angry"},
    {"text": "It's so foggy here, where are we?", "emotion": "angry"}
  ],
  "blackout": [
    {"text": "Everything went dark! Someone is standing in my way.", "emotion": "angry"},
    {"text": "I can't see a thing! Maybe hold me up high or find a more open space?", "emotion": "neutral"}
  ],
  "found": [
    {"text": "There it is! I can see my home!", "emotion": "excited"},
    {"text": "We found it! Thank you for helping me!", "emotion": "happy"}
  ],
  "floor_switched": [
    {"text": "A different floor! Let me have a look around up here... or down here!", "emotion": "excited"}
  ]
}
)json";
}

const MessageTable& default_message_table() {
  static const MessageTable table = parse_message_table(default_message_table_json());
  return table;
}

FeedbackRenderer::FeedbackRenderer(MessageTable table, std::vector<std::string> ghost_ids,
                                   FeedbackThresholds thresholds)
    : table_(std::move(table)), ghosts_(std::move(ghost_ids)), thresholds_(thresholds) {}

bool FeedbackRenderer::knows(std::string_view ghost_id) const {
  return ghost_id == kGuideGhostId || std::find(ghosts_.begin(), ghosts_.end(), ghost_id) != ghosts_.end();
}

std::string uncertainty_note(const RssWindow& w) {
  if (w.empty()) return "no signal";
  auto round1 = [](double v) {
    const double r = std::round(v * 10.0) / 10.0;
    return r == 0.0 ? 0.0 : r;
  };
  return fmt::format("{:g} ± {:g} dBm", round1(*w.mean_dbm), round1(*w.sd_db));
}

std::optional<FeedbackEvent> FeedbackRenderer::render(FeedbackCategory category, std::string_view ghost_id,
                                                      SeamStrategy strategy, const RssWindow& cur,
                                                      const std::optional<RssWindow>& reference, double timestamp_s) {
  if (!knows(ghost_id)) throw std::invalid_argument(fmt::format("unknown ghost '{}'", ghost_id));

  switch (strategy) {
    case SeamStrategy::Pessimistic:
      if (category == FeedbackCategory::Found || category == FeedbackCategory::Blackout ||
          category == FeedbackCategory::FloorSwitched) {
        break;
      }
      if (cur.coverage < 1.0 || cur.empty() || *cur.sd_db > thresholds_.high_sd_db) return std::nullopt;
      break;
    case SeamStrategy::Optimistic:
      if (category == FeedbackCategory::Steady && reference && !reference->empty() && !cur.empty()) {
        const double delta = *cur.mean_dbm - *reference->mean_dbm;
        if (delta > 0.0) category = FeedbackCategory::Closer;
        if (delta < 0.0) category = FeedbackCategory::Farther;
      }
      break;
    case SeamStrategy::Cautious:
    case SeamStrategy::Opportunistic: break;
  }

  const auto& lines = table_.lines(category);
  std::size_t& cursor = cursor_[category];
  const MessageLine& line = lines[cursor % lines.size()];
  ++cursor;

  FeedbackEvent event;
  event.category = category;
  event.ghost_id = std::string(ghost_id);
  event.beacon_id = cur.beacon_id;
  event.message = line.text;
  event.emotion = line.emotion;
  event.timestamp_s = timestamp_s;
  if (strategy == SeamStrategy::Cautious) event.uncertainty_note = uncertainty_note(cur);
  return event;
}

FilterDecision floor_filter(int active_floor, const RssSample& sample, const World& world,
                            std::vector<std::string>* log) {
  const Beacon* b = world.find_beacon(sample.beacon_id);
  if (b == nullptr) {
    if (log != nullptr) log->push_back(fmt::format("dropped sample from unknown beacon '{}'", sample.beacon_id));
    return FilterDecision::Drop;
  }
  return b->floor == active_floor ? FilterDecision::Keep : FilterDecision::Drop;
}

FloorUpdate update_active_floor(int active_floor, std::span<const RssWindow> stairway_windows, const World& world,
                                const FeedbackThresholds& thresholds) {
  struct Candidate {
    double mean;
    int floor;
    const std::string* beacon;
  };
  std::optional<Candidate> best;
  bool tied = false;
  for (const auto& w : stairway_windows) {
    if (w.empty() || *w.mean_dbm < thresholds.switch_mean_dbm) continue;
    const Beacon* b = world.find_beacon(w.beacon_id);
    if (b == nullptr || b->role == BeaconRole::Artifact) continue;
    if (!best || *w.mean_dbm > best->mean) {
      best = Candidate{*w.mean_dbm, b->floor, &w.beacon_id};
      tied = false;
    } else if (*w.mean_dbm == best->mean && b->floor != best->floor) {
      tied = true;
    }
  }
  FloorUpdate out{active_floor, false, std::nullopt};
  if (!best || tied) return out;
  if (best->floor != active_floor) {
    out.active_floor = best->floor;
    out.switched = true;
    out.trigger_beacon = *best->beacon;
  }
  return out;
}

std::optional<DeliveryRecord> NotificationQueue::notify(FeedbackEvent event) {
  if (mode_ == DeliveryMode::Realtime) {
    const double t = event.timestamp_s;
    return DeliveryRecord{std::move(event), t, true};
  }
  if (pending_.empty()) vibrating_since_ = event.timestamp_s;
  pending_.push_back(std::move(event));
  return std::nullopt;
}

AckResult NotificationQueue::acknowledge(double now_s) {
  AckResult out;
  if (pending_.empty()) {
    out.warning = true;
    return out;
  }
  out.delivered = DeliveryRecord{std::move(pending_.front()), now_s, false};
  pending_.pop_front();
  if (pending_.empty()) {
    vibrating_since_.reset();
  } else {
    vibrating_since_ = now_s;
  }
  return out;
}

}  // namespace ghostsim

#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ghostsim/feedback.hpp"
#include "ghostsim/guidance.hpp"
#include "ghostsim/quest.hpp"
#include "ghostsim/scanner.hpp"
#include "ghostsim/world.hpp"

namespace ghostsim {

struct SessionOptions {
  std::uint64_t seed = 1;
  DeliveryMode mode = DeliveryMode::Popup;
  SeamStrategy strategy = SeamStrategy::Opportunistic;
  bool deterministic = false;
  bool debug = false;
  std::optional<std::string> venue;
  PropagationConfig propagation;
  ScanConfig scan;
  FeedbackThresholds thresholds;
  MoveTiming timing;
};

// Reads the create-command fields (seed, mode, strategy, deterministic,
// debug, venue). Throws std::invalid_argument.
SessionOptions parse_session_options(const nlohmann::json& create);

struct Envelope {
  std::string session_id;
  std::uint64_t sequence = 0;
  std::string kind;  // snapshot | feedback | popup | quest | warning | error
  nlohmann::json payload;

  nlohmann::json to_json() const;
  friend bool operator==(const Envelope&, const Envelope&) = default;
};

nlohmann::json to_json(const FeedbackEvent& e);
nlohmann::json to_json(const QuestEvent& e);

// One player's game: world, physical signal environment, feedback pipeline
// and quest state. Not thread-safe; the server serializes access.
class PlaySession {
 public:
  PlaySession(std::string id, std::shared_ptr<const World> world, SessionOptions options, MessageTable table);

  // Envelopes produced at creation (quest intro, snapshot).
  std::vector<Envelope> start();
  // Applies one command. Malformed or rejected commands yield an error
  // envelope and a snapshot and leave the session unchanged.
  std::vector<Envelope> handle(const nlohmann::json& command);

  nlohmann::json snapshot() const;
  const std::string& id() const { return id_; }
  const std::vector<Envelope>& log() const { return log_; }
  const GameSession& game() const { return game_; }
  const GuidanceTracker& tracker() const { return tracker_; }

 private:
  void push(std::vector<Envelope>& out, std::string kind, nlohmann::json payload);
  void run_interval(double t0, std::vector<Envelope>& out);
  void quest_events(const std::vector<QuestEvent>& events, std::vector<Envelope>& out);
  void apply(const nlohmann::json& command, std::vector<Envelope>& out);

  std::string id_;
  std::shared_ptr<const World> world_;
  SessionOptions options_;
  SignalEnvironment env_;
  GuidanceTracker tracker_;
  GameSession game_;
  bool blocked_ = false;
  std::uint64_t sequence_ = 0;
  std::vector<Envelope> log_;
};

struct ServerOptions {
  std::string fixture_dir;
  std::optional<std::string> log_dir;
};

// Fixture directory: GHOSTSIM_FIXTURES if set, else the build-time default.
std::string default_fixture_dir();

// Transport-agnostic session server. Each session has its own lock and a
// gap-free envelope sequence; sessions are independent.
class SessionServer {
 public:
  explicit SessionServer(ServerOptions options);

  // `command.type == "create"` starts a session; any other command needs
  // `session_id`. Always returns at least one envelope.
  std::vector<Envelope> handle_command(const nlohmann::json& command);
  std::vector<Envelope> handle_command(std::string_view session_id, const nlohmann::json& command);
  std::vector<Envelope> handle_line(std::string_view line);

  // Envelopes with sequence > after; waits up to `wait` for new ones.
  std::vector<Envelope> events_after(std::string_view session_id, std::uint64_t after,
                                     std::chrono::milliseconds wait = std::chrono::milliseconds(0));
  bool has_session(std::string_view session_id) const;

  std::shared_ptr<const World> resolve_world(const std::string& ref);

 private:
  struct Slot {
    std::mutex mu;
    std::condition_variable cv;
    std::unique_ptr<PlaySession> session;
  };

  std::vector<Envelope> create(const nlohmann::json& command);
  std::shared_ptr<Slot> find(std::string_view id) const;
  void write_log(const std::string& id, const nlohmann::json& command, const std::vector<Envelope>& envelopes);
  static std::vector<Envelope> error(std::string_view session_id, const std::string& message);

  ServerOptions options_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Slot>, std::less<>> sessions_;
  std::map<std::string, std::shared_ptr<const World>> worlds_;
  std::optional<MessageTable> messages_;
  std::uint64_t next_id_ = 1;
};

}  // namespace ghostsim

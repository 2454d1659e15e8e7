#include "ghostsim/session.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <fmt/format.h>

#ifndef GHOSTSIM_FIXTURE_DIR
#define GHOSTSIM_FIXTURE_DIR "fixtures"
#endif

namespace ghostsim {

using nlohmann::json;

namespace {

template <class T>
T field(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j[key].is_null()) return fallback;
  try {
    return j[key].get<T>();
  } catch (const json::exception&) {
    throw std::invalid_argument(fmt::format("field '{}' has the wrong type", key));
  }
}

std::string required_text(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_string()) throw std::invalid_argument(fmt::format("missing field '{}'", key));
  return j[key].get<std::string>();
}

Orientation required_direction(const json& j) {
  const auto o = parse_orientation(required_text(j, "direction"));
  if (!o) throw std::invalid_argument("direction must be one of N, E, S, W");
  return *o;
}

}  // namespace

SessionOptions parse_session_options(const json& create) {
  if (!create.is_object()) throw std::invalid_argument("create command must be an object");
  SessionOptions o;
  o.seed = field<std::uint64_t>(create, "seed", 1);
  const auto mode = parse_delivery_mode(field<std::string>(create, "mode", "popup"));
  if (!mode) throw std::invalid_argument("mode must be 'realtime' or 'popup'");
  o.mode = *mode;
  const auto strategy = parse_strategy(field<std::string>(create, "strategy", "opportunistic"));
  if (!strategy) throw std::invalid_argument("unknown strategy");
  o.strategy = *strategy;
  o.deterministic = field<bool>(create, "deterministic", false);
  o.debug = field<bool>(create, "debug", false);
  if (create.contains("venue") && create["venue"].is_string()) o.venue = create["venue"].get<std::string>();
  o.propagation.deterministic = o.deterministic;
  return o;
}

json Envelope::to_json() const {
  return json{{"session_id", session_id}, {"sequence", sequence}, {"kind", kind}, {"payload", payload}};
}

json to_json(const FeedbackEvent& e) {
  json j{{"category", to_string(e.category)}, {"ghost_id", e.ghost_id},     {"beacon_id", e.beacon_id},
         {"message", e.message},              {"emotion", to_string(e.emotion)}, {"timestamp_s", e.timestamp_s}};
  if (e.uncertainty_note) j["uncertainty_note"] = *e.uncertainty_note;
  return j;
}

json to_json(const QuestEvent& e) {
  json j{{"event", to_string(e.kind)}, {"quest_id", e.quest_id}, {"ghost_id", e.ghost_id},
         {"venue", e.venue},           {"text", e.text},         {"timestamp_s", e.timestamp_s}};
  if (e.correct) j["correct"] = *e.correct;
  if (!e.choices.empty()) j["choices"] = e.choices;
  return j;
}

PlaySession::PlaySession(std::string id, std::shared_ptr<const World> world, SessionOptions options,
                         MessageTable table)
    : id_(std::move(id)),
      world_(world),
      options_(options),
      env_(world, options.propagation, options.seed),
      tracker_(world,
               GuidanceConfig{options.scan, options.thresholds, options.strategy, options.mode},
               FeedbackRenderer(std::move(table),
                                [&] {
                                  std::vector<std::string> ghosts;
                                  for (const auto& a : world->artifacts) {
                                    if (a.quest) ghosts.push_back(a.quest->ghost_name);
                                  }
                                  return ghosts;
                                }(),
                                options.thresholds),
               0),
      game_(new_game(*world, options.seed, options.venue)) {
  if (options_.venue && world_->find_venue(*options_.venue) == nullptr) {
    throw std::invalid_argument(fmt::format("unknown venue '{}'", *options_.venue));
  }
}

void PlaySession::push(std::vector<Envelope>& out, std::string kind, json payload) {
  Envelope e{id_, ++sequence_, std::move(kind), std::move(payload)};
  log_.push_back(e);
  out.push_back(std::move(e));
}

std::vector<Envelope> PlaySession::start() {
  std::vector<Envelope> out;
  quest_events(advance(game_, {}, game_.player.clock_s), out);
  push(out, "snapshot", snapshot());
  return out;
}

void PlaySession::quest_events(const std::vector<QuestEvent>& events, std::vector<Envelope>& out) {
  for (const auto& e : events) push(out, "quest", to_json(e));
  tracker_.set_target(guidance_target(game_));
}

void PlaySession::run_interval(double t0, std::vector<Envelope>& out) {
  const PlayerState& p = game_.player;
  if (p.clock_s <= t0) return;
  const auto samples = env_.tick(p, t0, p.clock_s);
  const std::size_t pending_before = tracker_.queue().pending_count();
  GuidanceOutput g = tracker_.advance(p, samples, t0, p.clock_s);
  for (const auto& d : g.deliveries) {
    json j = to_json(d.event);
    j["delivered_at_s"] = d.delivered_at_s;
    j["sound"] = d.sound;
    push(out, "feedback", std::move(j));
  }
  if (tracker_.queue().pending_count() > pending_before) {
    push(out, "popup",
         json{{"pending", tracker_.queue().pending_count()},
              {"vibration", tracker_.queue().vibration_active()},
              {"timestamp_s", p.clock_s}});
  }
  quest_events(advance(game_, g.events, p.clock_s), out);
}

void PlaySession::apply(const json& command, std::vector<Envelope>& out) {
  const std::string type = required_text(command, "type");
  const double now = game_.player.clock_s;
  if (type == "snapshot") return;
  if (type == "acknowledge") {
    AckResult r = tracker_.acknowledge(now);
    if (r.warning) {
      push(out, "warning", json{{"message", "nothing to acknowledge"}, {"timestamp_s", now}});
      return;
    }
    json j = to_json(r.delivered->event);
    j["delivered_at_s"] = r.delivered->delivered_at_s;
    j["sound"] = r.delivered->sound;
    push(out, "feedback", std::move(j));
    return;
  }
  if (type == "open_quiz") {
    const QuestEvent e = open_quiz(game_, required_text(command, "quest"), now);
    quest_events({e}, out);
    return;
  }
  if (type == "answer") {
    const std::string quest = required_text(command, "quest");
    if (!command.contains("choice") || !command["choice"].is_number_integer()) {
      throw std::invalid_argument("missing integer field 'choice'");
    }
    const int choice = command["choice"].get<int>();
    Quest* q = game_.find_quest(quest);
    if (q == nullptr) throw CommandRejected(fmt::format("unknown quest '{}'", quest));
    if (q->state != QuestState::Found && q->state != QuestState::Quiz) {
      throw CommandRejected(fmt::format("quest '{}' is {}, not in a quiz", quest, to_string(q->state)));
    }
    if (choice < 0 || choice >= static_cast<int>(q->quiz.choices.size())) {
      throw CommandRejected(fmt::format("choice {} out of range", choice));
    }
    if (q->state == QuestState::Found) open_quiz(game_, quest, now);
    quest_events(answer_quiz(game_, *world_, quest, choice, now).events, out);
    return;
  }
  if (type != "move") throw std::invalid_argument(fmt::format("unknown command type '{}'", type));

  const std::string action = required_text(command, "action");
  if (action == "transit") {
    quest_events(handoff(game_, *world_, required_text(command, "to"), now), out);
    blocked_ = false;
    return;
  }
  if (action == "arrive") {
    quest_events(ghostsim::arrive(game_, *world_, now), out);
    blocked_ = false;
    return;
  }
  MoveCommand cmd;
  if (action == "step") {
    cmd = MoveCommand::step(required_direction(command));
  } else if (action == "turn") {
    cmd = MoveCommand::turn(required_direction(command));
  } else if (action == "stairs") {
    cmd = MoveCommand::take_stairs();
  } else if (action == "wait") {
    cmd = MoveCommand::wait();
  } else {
    throw std::invalid_argument(fmt::format("unknown move action '{}'", action));
  }
  const MoveResult r = move_player(*world_, game_.player, cmd, options_.timing);
  game_.player = r.state;
  blocked_ = r.blocked;
  run_interval(now, out);
}

std::vector<Envelope> PlaySession::handle(const json& command) {
  std::vector<Envelope> out;
  try {
    if (!command.is_object()) throw std::invalid_argument("command must be a JSON object");
    apply(command, out);
  } catch (const std::exception& e) {
    // Every mutation happens after validation, so nothing has changed here.
    push(out, "error", json{{"message", e.what()}});
  }
  push(out, "snapshot", snapshot());
  return out;
}

json PlaySession::snapshot() const {
  const PlayerState& p = game_.player;
  json player{{"venue", p.venue},
              {"floor", p.floor},
              {"x", p.cell.x},
              {"y", p.cell.y},
              {"facing", to_string(p.facing)},
              {"clock_s", p.clock_s},
              {"in_transit", p.in_transit()},
              {"transit_to", p.transit_to ? json(*p.transit_to) : json(nullptr)}};
  json quests = json::array();
  for (const auto& q : game_.quests) {
    json jq{{"id", q.id},       {"ghost_id", q.ghost_id}, {"venue", q.venue}, {"artifact_name", q.artifact_name},
            {"state", to_string(q.state)}, {"attempts", q.quiz.attempts}};
    if (q.state == QuestState::Found || q.state == QuestState::Quiz) {
      jq["question"] = q.quiz.question;
      jq["choices"] = q.quiz.choices;
    }
    quests.push_back(std::move(jq));
  }
  json map = nullptr;
  json neighbors = json::array();
  if (!p.in_transit()) {
    const Venue* v = world_->find_venue(p.venue);
    const Floor* f = world_->find_floor(p.venue, p.floor);
    neighbors = v->neighbors;
    json obstacles = json::array();
    for (int y = 0; y < f->height(); ++y) {
      for (int x = 0; x < f->width(); ++x) {
        if (auto k = f->obstacle_at({x, y})) obstacles.push_back(json{{"x", x}, {"y", y}, {"kind", to_string(*k)}});
      }
    }
    json stairs = json::array();
    for (const auto& s : f->stairways()) stairs.push_back(json{{"x", s.bottom.x}, {"y", s.bottom.y}, {"leads", "up"}});
    if (const Floor* below = world_->find_floor(p.venue, p.floor - 1)) {
      for (const auto& s : below->stairways()) stairs.push_back(json{{"x", s.top.x}, {"y", s.top.y}, {"leads", "down"}});
    }
    map = json{{"venue", p.venue},         {"floor", p.floor},     {"floors", v->floors.size()},
               {"width", f->width()},      {"height", f->height()}, {"obstacles", std::move(obstacles)},
               {"stairways", std::move(stairs)}};
  }
  json snap{{"player", std::move(player)},
            {"active_floor", tracker_.active_floor()},
            {"blocked", blocked_},
            {"mode", to_string(options_.mode)},
            {"strategy", to_string(options_.strategy)},
            {"vibration", tracker_.queue().vibration_active()},
            {"pending_popups", tracker_.queue().pending_count()},
            {"quests", std::move(quests)},
            {"achievements", game_.achievements},
            {"neighbors", std::move(neighbors)},
            {"map", std::move(map)},
            {"debug", options_.debug}};
  if (options_.debug) {
    json beacons = json::array();
    for (const auto& b : world_->beacons) {
      beacons.push_back(json{{"id", b.id}, {"venue", b.venue}, {"floor", b.floor}, {"x", b.cell.x}, {"y", b.cell.y},
                             {"role", to_string(b.role)}});
    }
    snap["debug_beacons"] = std::move(beacons);
  }
  return snap;
}

std::string default_fixture_dir() {
  if (const char* env = std::getenv("GHOSTSIM_FIXTURES"); env != nullptr && *env != '\0') return env;
  return GHOSTSIM_FIXTURE_DIR;
}

SessionServer::SessionServer(ServerOptions options) : options_(std::move(options)) {
  if (options_.fixture_dir.empty()) options_.fixture_dir = default_fixture_dir();
  if (options_.log_dir) std::filesystem::create_directories(*options_.log_dir);
}

std::shared_ptr<const World> SessionServer::resolve_world(const std::string& ref) {
  std::lock_guard lock(mu_);
  if (auto it = worlds_.find(ref); it != worlds_.end()) return it->second;
  std::filesystem::path path(ref);
  if (!std::filesystem::exists(path)) {
    path = std::filesystem::path(options_.fixture_dir) / (ref.ends_with(".json") ? ref : ref + ".json");
  }
  auto world = std::make_shared<const World>(load_world_file(path.string()));
  worlds_.emplace(ref, world);
  if (!messages_) {
    const auto msg = std::filesystem::path(options_.fixture_dir) / "messages.json";
    messages_ = std::filesystem::exists(msg) ? load_message_table(msg.string()) : default_message_table();
  }
  return world;
}

std::vector<Envelope> SessionServer::error(std::string_view session_id, const std::string& message) {
  return {Envelope{std::string(session_id), 0, "error", json{{"message", message}}}};
}

std::shared_ptr<SessionServer::Slot> SessionServer::find(std::string_view id) const {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

bool SessionServer::has_session(std::string_view session_id) const { return find(session_id) != nullptr; }

std::vector<Envelope> SessionServer::create(const json& command) {
  std::shared_ptr<const World> world;
  SessionOptions opts;
  try {
    opts = parse_session_options(command);
    world = resolve_world(field<std::string>(command, "world", "eastwing"));
  } catch (const std::exception& e) {
    return error("", e.what());
  }
  std::string id;
  auto slot = std::make_shared<Slot>();
  {
    std::lock_guard lock(mu_);
    id = fmt::format("s{}", next_id_);
    try {
      slot->session = std::make_unique<PlaySession>(id, world, opts, *messages_);
    } catch (const std::exception& e) {
      return error("", e.what());
    }
    ++next_id_;
    sessions_.emplace(id, slot);
  }
  std::vector<Envelope> out;
  {
    std::lock_guard lock(slot->mu);
    out = slot->session->start();
  }
  slot->cv.notify_all();
  write_log(id, command, out);
  return out;
}

std::vector<Envelope> SessionServer::handle_command(const json& command) {
  if (!command.is_object()) return error("", "command must be a JSON object");
  if (command.value("type", "") == "create") return create(command);
  if (!command.contains("session_id") || !command["session_id"].is_string()) {
    return error("", "missing session_id");
  }
  return handle_command(command["session_id"].get<std::string>(), command);
}

std::vector<Envelope> SessionServer::handle_command(std::string_view session_id, const json& command) {
  auto slot = find(session_id);
  if (!slot) return error(session_id, fmt::format("unknown session '{}'", session_id));
  std::vector<Envelope> out;
  {
    std::lock_guard lock(slot->mu);
    out = slot->session->handle(command);
  }
  slot->cv.notify_all();
  write_log(std::string(session_id), command, out);
  return out;
}

std::vector<Envelope> SessionServer::handle_line(std::string_view line) {
  json command;
  try {
    command = json::parse(line);
  } catch (const json::parse_error& e) {
    return error("", fmt::format("malformed JSON: {}", e.what()));
  }
  return handle_command(command);
}

std::vector<Envelope> SessionServer::events_after(std::string_view session_id, std::uint64_t after,
                                                  std::chrono::milliseconds wait) {
  auto slot = find(session_id);
  if (!slot) return error(session_id, fmt::format("unknown session '{}'", session_id));
  std::unique_lock lock(slot->mu);
  auto ready = [&] { return slot->session->log().size() > after; };
  if (!ready() && wait.count() > 0) slot->cv.wait_for(lock, wait, ready);
  const auto& log = slot->session->log();
  if (log.size() <= after) return {};
  return {log.begin() + static_cast<std::ptrdiff_t>(after), log.end()};
}

void SessionServer::write_log(const std::string& id, const json& command, const std::vector<Envelope>& envelopes) {
  if (!options_.log_dir || id.empty()) return;
  std::lock_guard lock(mu_);
  std::ofstream out(std::filesystem::path(*options_.log_dir) / (id + ".ndjson"), std::ios::app);
  out << json{{"command", command}}.dump() << '\n';
  for (const auto& e : envelopes) out << e.to_json().dump() << '\n';
}

}  // namespace ghostsim

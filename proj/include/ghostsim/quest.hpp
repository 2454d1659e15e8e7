#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ghostsim/feedback.hpp"
#include "ghostsim/guidance.hpp"
#include "ghostsim/world.hpp"

namespace ghostsim {

enum class QuestState : std::uint8_t { Pending, Active, Found, Quiz, Complete };
std::string_view to_string(QuestState s);

struct Quiz {
  std::string question;
  std::vector<std::string> choices;
  int correct_index = 0;
  int attempts = 0;  // wrong answers so far
};

struct Quest {
  std::string id;  // artifact id
  std::string ghost_id;
  std::string target_beacon_id;
  std::string venue;
  std::string artifact_name;
  std::string intro_text;
  QuestState state = QuestState::Pending;
  Quiz quiz;
};

enum class QuestEventKind : std::uint8_t {
  Intro,
  QuizPrompt,
  QuizResult,
  QuestComplete,
  Achievement,
  Share,
  LostGhost,
  Directions,
  Arrived,
};
std::string_view to_string(QuestEventKind k);

struct QuestEvent {
  QuestEventKind kind = QuestEventKind::Intro;
  std::string quest_id;
  std::string ghost_id;
  std::string venue;
  std::string text;
  std::optional<bool> correct;        // QuizResult
  std::vector<std::string> choices;   // QuizPrompt
  double timestamp_s = 0.0;
  friend bool operator==(const QuestEvent&, const QuestEvent&) = default;
};

struct GameSession {
  PlayerState player;
  std::vector<Quest> quests;  // world-file order
  std::map<std::string, bool> venue_complete;
  std::vector<std::string> achievements;  // venue ids, in award order
  std::uint64_t rng_seed = 0;
  std::vector<std::string> log;

  // First non-complete quest of the player's venue, if it has left Pending.
  Quest* active_quest();
  const Quest* active_quest() const;
  Quest* find_quest(std::string_view id);
};

// Quests come from artifacts carrying quest content. The player starts at the
// entrance of `venue` (default: first venue).
GameSession new_game(const World& world, std::uint64_t seed, std::optional<std::string> venue = std::nullopt);

// Activates the venue's next quest if needed and consumes Found feedback for
// the active target. Other Found events are ignored and logged.
std::vector<QuestEvent> advance(GameSession& session, std::span<const FeedbackEvent> feedback, double now_s);

// found -> quiz. Throws CommandRejected in any other state.
QuestEvent open_quiz(GameSession& session, std::string_view quest_id, double now_s);

enum class AnswerOutcome : std::uint8_t { Correct, Retry };

struct AnswerResult {
  AnswerOutcome outcome = AnswerOutcome::Retry;
  std::vector<QuestEvent> events;
};

// Throws CommandRejected unless the quest is in the quiz state or the choice
// is out of range.
AnswerResult answer_quiz(GameSession& session, const World& world, std::string_view quest_id, int choice_index,
                         double now_s);

// Leaves for a neighbouring venue. Rejected mid-quest and for non-neighbours.
std::vector<QuestEvent> handoff(GameSession& session, const World& world, std::string_view to_venue, double now_s);
std::vector<QuestEvent> arrive(GameSession& session, const World& world, double now_s);

// Beacon and ghost the guidance layer should track, if any.
std::optional<GuidanceTarget> guidance_target(const GameSession& session);

}  // namespace ghostsim

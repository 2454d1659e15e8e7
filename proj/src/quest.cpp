#include "ghostsim/quest.hpp"

#include <algorithm>

#include <fmt/format.h>

namespace ghostsim {

std::string_view to_string(QuestState s) {
  switch (s) {
    case QuestState::Pending: return "pending";
    case QuestState::Active: return "active";
    case QuestState::Found: return "found";
    case QuestState::Quiz: return "quiz";
    case QuestState::Complete: return "complete";
  }
  return "?";
}

std::string_view to_string(QuestEventKind k) {
  switch (k) {
    case QuestEventKind::Intro: return "intro";
    case QuestEventKind::QuizPrompt: return "quiz_prompt";
    case QuestEventKind::QuizResult: return "quiz_result";
    case QuestEventKind::QuestComplete: return "quest_complete";
    case QuestEventKind::Achievement: return "achievement";
    case QuestEventKind::Share: return "share";
    case QuestEventKind::LostGhost: return "lost_ghost";
    case QuestEventKind::Directions: return "directions";
    case QuestEventKind::Arrived: return "arrived";
  }
  return "?";
}

Quest* GameSession::active_quest() {
  return const_cast<Quest*>(static_cast<const GameSession&>(*this).active_quest());
}

const Quest* GameSession::active_quest() const {
  if (player.in_transit()) return nullptr;
  for (const auto& q : quests) {
    if (q.venue != player.venue || q.state == QuestState::Complete) continue;
    return q.state == QuestState::Pending ? nullptr : &q;
  }
  return nullptr;
}

Quest* GameSession::find_quest(std::string_view id) {
  auto it = std::find_if(quests.begin(), quests.end(), [&](const Quest& q) { return q.id == id; });
  return it == quests.end() ? nullptr : &*it;
}

GameSession new_game(const World& world, std::uint64_t seed, std::optional<std::string> venue) {
  GameSession s;
  s.rng_seed = seed;
  const std::string start = venue ? *venue : world.venues.at(0).id;
  s.player = player_at_entrance(world, start);
  for (const auto& a : world.artifacts) {
    if (!a.quest) continue;
    Quest q;
    q.id = a.id;
    q.ghost_id = a.quest->ghost_name;
    q.target_beacon_id = a.beacon_id;
    q.venue = a.venue;
    q.artifact_name = a.name;
    q.intro_text = a.quest->intro_text;
    q.quiz = {a.quest->quiz.question, a.quest->quiz.choices, a.quest->quiz.correct_index, 0};
    s.quests.push_back(std::move(q));
  }
  for (const auto& v : world.venues) s.venue_complete[v.id] = false;
  return s;
}

namespace {

bool venue_has_quests(const GameSession& s, std::string_view venue) {
  return std::any_of(s.quests.begin(), s.quests.end(), [&](const Quest& q) { return q.venue == venue; });
}

bool venue_done(const GameSession& s, std::string_view venue) {
  return std::all_of(s.quests.begin(), s.quests.end(),
                     [&](const Quest& q) { return q.venue != venue || q.state == QuestState::Complete; });
}

void activate_next(GameSession& s, double now, std::vector<QuestEvent>& out) {
  if (s.player.in_transit()) return;
  for (auto& q : s.quests) {
    if (q.venue != s.player.venue || q.state == QuestState::Complete) continue;
    if (q.state == QuestState::Pending) {
      q.state = QuestState::Active;
      out.push_back({QuestEventKind::Intro, q.id, q.ghost_id, q.venue, q.intro_text, std::nullopt, {}, now});
    }
    return;
  }
}

void complete_venue(GameSession& s, const World& world, const std::string& venue, double now,
                    std::vector<QuestEvent>& out) {
  s.venue_complete[venue] = true;
  s.achievements.push_back(venue);
  out.push_back({QuestEventKind::Achievement, "", std::string(kGuideGhostId), venue,
                 fmt::format("All the ghosts of {} are back home!", venue), std::nullopt, {}, now});
  out.push_back({QuestEventKind::Share, "", std::string(kGuideGhostId), venue,
                 fmt::format("I helped every ghost in {} find its way home.", venue), std::nullopt, {}, now});
  s.log.push_back(fmt::format("share stub recorded for {}", venue));

  const Venue* v = world.find_venue(venue);
  if (v == nullptr || v->neighbors.empty()) return;
  std::string next = v->neighbors.front();
  for (const auto& n : v->neighbors) {
    if (venue_has_quests(s, n) && !venue_done(s, n)) {
      next = n;
      break;
    }
  }
  std::string ghost(kGuideGhostId);
  for (const auto& q : s.quests) {
    if (q.venue == next && q.state != QuestState::Complete) {
      ghost = q.ghost_id;
      break;
    }
  }
  out.push_back({QuestEventKind::LostGhost, "", ghost, next,
                 fmt::format("A lost ghost is looking for its home in {}. Will you help?", next), std::nullopt, {},
                 now});
}

}  // namespace

std::vector<QuestEvent> advance(GameSession& session, std::span<const FeedbackEvent> feedback, double now_s) {
  std::vector<QuestEvent> out;
  activate_next(session, now_s, out);
  for (const auto& ev : feedback) {
    if (ev.category != FeedbackCategory::Found) continue;
    Quest* q = session.active_quest();
    if (q == nullptr) {
      session.log.push_back(fmt::format("found '{}' with no active quest, ignored", ev.beacon_id));
      continue;
    }
    if (q->state != QuestState::Active || ev.beacon_id != q->target_beacon_id) continue;
    q->state = QuestState::Found;
    out.push_back({QuestEventKind::QuizPrompt, q->id, q->ghost_id, q->venue, q->quiz.question, std::nullopt,
                   q->quiz.choices, ev.timestamp_s});
  }
  return out;
}

QuestEvent open_quiz(GameSession& session, std::string_view quest_id, double now_s) {
  Quest* q = session.find_quest(quest_id);
  if (q == nullptr) throw CommandRejected(fmt::format("unknown quest '{}'", quest_id));
  if (q->state != QuestState::Found) {
    throw CommandRejected(fmt::format("quest '{}' is {}, not found", quest_id, to_string(q->state)));
  }
  q->state = QuestState::Quiz;
  return {QuestEventKind::QuizPrompt, q->id, q->ghost_id, q->venue, q->quiz.question, std::nullopt, q->quiz.choices,
          now_s};
}

AnswerResult answer_quiz(GameSession& session, const World& world, std::string_view quest_id, int choice_index,
                         double now_s) {
  Quest* q = session.find_quest(quest_id);
  if (q == nullptr) throw CommandRejected(fmt::format("unknown quest '{}'", quest_id));
  if (q->state != QuestState::Quiz) {
    throw CommandRejected(fmt::format("quest '{}' is {}, not in a quiz", quest_id, to_string(q->state)));
  }
  if (choice_index < 0 || choice_index >= static_cast<int>(q->quiz.choices.size())) {
    throw CommandRejected(fmt::format("choice {} out of range", choice_index));
  }
  AnswerResult r;
  if (choice_index != q->quiz.correct_index) {
    ++q->quiz.attempts;
    r.outcome = AnswerOutcome::Retry;
    r.events.push_back({QuestEventKind::QuizResult, q->id, q->ghost_id, q->venue, "Not quite, try again!", false,
                        {}, now_s});
    return r;
  }
  r.outcome = AnswerOutcome::Correct;
  q->state = QuestState::Complete;
  const std::string venue = q->venue;
  r.events.push_back({QuestEventKind::QuizResult, q->id, q->ghost_id, venue, "Correct!", true, {}, now_s});
  r.events.push_back({QuestEventKind::QuestComplete, q->id, q->ghost_id, venue,
                      fmt::format("{} is home again.", q->ghost_id), std::nullopt, {}, now_s});
  if (venue_done(session, venue) && !session.venue_complete[venue]) {
    complete_venue(session, world, venue, now_s, r.events);
  }
  activate_next(session, now_s, r.events);
  return r;
}

std::vector<QuestEvent> handoff(GameSession& session, const World& world, std::string_view to_venue, double now_s) {
  if (session.player.in_transit()) throw CommandRejected("already in transit");
  if (const Quest* q = session.active_quest()) {
    throw CommandRejected(fmt::format("quest '{}' is still {}", q->id, to_string(q->state)));
  }
  const std::string from = session.player.venue;
  session.player = enter_transit(world, session.player, to_venue);
  return {{QuestEventKind::Directions, "", std::string(kGuideGhostId), std::string(to_venue),
           fmt::format("Leave {} and walk over to {}. I can't see anything out there, so head for the {} entrance "
                       "and I'll wake up again.",
                       from, to_venue, to_venue),
           std::nullopt, {}, now_s}};
}

std::vector<QuestEvent> arrive(GameSession& session, const World& world, double now_s) {
  if (!session.player.in_transit()) throw CommandRejected("not in transit");
  session.player = ghostsim::arrive(world, session.player);
  std::vector<QuestEvent> out{{QuestEventKind::Arrived, "", std::string(kGuideGhostId), session.player.venue,
                               fmt::format("Welcome to {}!", session.player.venue), std::nullopt, {}, now_s}};
  activate_next(session, now_s, out);
  return out;
}

std::optional<GuidanceTarget> guidance_target(const GameSession& session) {
  const Quest* q = session.active_quest();
  if (q == nullptr || q->state != QuestState::Active) return std::nullopt;
  return GuidanceTarget{q->target_beacon_id, q->ghost_id};
}

}  // namespace ghostsim

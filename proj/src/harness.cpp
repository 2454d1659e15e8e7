#include "ghostsim/harness.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <sstream>

#include <fmt/format.h>

namespace ghostsim {

namespace {

constexpr std::uint64_t kStartStream = 0x5374617274ull;
constexpr std::uint64_t kWalkerStream = 0x57616c6bull;

double cell_distance(Cell a, Cell b) { return std::hypot(a.x - b.x, a.y - b.y); }

Orientation toward(int dx, int dy) {
  if (dx > 0) return Orientation::East;
  if (dx < 0) return Orientation::West;
  if (dy > 0) return Orientation::South;
  return Orientation::North;
}

// Breadth-first search, directions tried in N E S W order.
std::optional<std::vector<Orientation>> shortest_path(const Floor& f, Cell from, Cell to) {
  if (!f.is_open(from) || !f.is_open(to)) return std::nullopt;
  const auto idx = [&](Cell c) { return static_cast<std::size_t>(c.y) * f.width() + c.x; };
  std::vector<int> prev(static_cast<std::size_t>(f.width()) * f.height(), -1);
  std::deque<Cell> queue{from};
  prev[idx(from)] = 4;
  while (!queue.empty() && prev[idx(to)] < 0) {
    const Cell c = queue.front();
    queue.pop_front();
    for (int d = 0; d < 4; ++d) {
      const Cell v = direction_vector(static_cast<Orientation>(d));
      const Cell n{c.x + v.x, c.y + v.y};
      if (!f.is_open(n) || prev[idx(n)] >= 0) continue;
      prev[idx(n)] = d;
      queue.push_back(n);
    }
  }
  if (prev[idx(to)] < 0) return std::nullopt;
  std::vector<Orientation> steps;
  for (Cell c = to; c != from;) {
    const auto d = static_cast<Orientation>(prev[idx(c)]);
    steps.push_back(d);
    const Cell v = direction_vector(d);
    c = {c.x - v.x, c.y - v.y};
  }
  std::reverse(steps.begin(), steps.end());
  return steps;
}

}  // namespace

std::string_view agent_name(const Agent& agent) {
  struct V {
    std::string_view operator()(const GreedyFollower&) const { return "greedy"; }
    std::string_view operator()(const RandomWalker&) const { return "random"; }
    std::string_view operator()(const ScriptedWalk&) const { return "scripted"; }
    std::string_view operator()(const SeamlessNavigator&) const { return "seamless"; }
  };
  return std::visit(V{}, agent);
}

std::vector<MoveCommand> greedy_policy(std::span<const FeedbackEvent> history, Orientation facing,
                                       bool last_blocked) {
  bool turn = last_blocked;
  if (!history.empty()) {
    const auto c = history.back().category;
    turn = turn || c == FeedbackCategory::Farther || c == FeedbackCategory::Lost;
  }
  if (!turn) return {MoveCommand::step(facing)};
  const Orientation next = turn_right(facing);
  return {MoveCommand::turn(next), MoveCommand::step(next)};
}

std::optional<LocationEstimate> fingerprint_localize(std::span<const RssWindow> windows, const GridSet& grids,
                                                     Orientation facing, double missing_dbm) {
  std::map<std::string_view, double> observed;
  for (const auto& w : windows) {
    if (!w.empty()) observed[w.beacon_id] = *w.mean_dbm;
  }
  if (observed.empty()) return std::nullopt;

  std::map<int, LocationCoord> locations;
  for (const auto& [id, grid] : grids) {
    for (const auto& [loc, coord] : grid.locations()) locations.emplace(loc, coord);
  }
  std::optional<LocationEstimate> best;
  double best_cost = std::numeric_limits<double>::infinity();
  for (const auto& [loc, coord] : locations) {
    double cost = 0.0;
    for (const auto& [id, grid] : grids) {
      auto it = observed.find(id);
      const double obs = it == observed.end() ? missing_dbm : it->second;
      const auto stored = grid.reading(loc, facing);
      const double ref = stored ? stored->rss_mean_dbm : missing_dbm;
      cost += (obs - ref) * (obs - ref);
    }
    if (cost < best_cost) {
      best_cost = cost;
      best = LocationEstimate{loc, coord};
    }
  }
  return best;
}

GridSet fingerprint_survey(const World& world, const PropagationConfig& config, std::string_view venue, int floor) {
  const Floor* f = world.find_floor(venue, floor);
  if (f == nullptr) throw std::invalid_argument(fmt::format("no floor {} in venue '{}'", floor, venue));
  PropagationConfig det = config;
  det.deterministic = true;
  GridSet out;
  for (const auto& b : world.beacons) {
    if (b.venue != venue || b.floor != floor) continue;
    FingerprintGrid grid(b.id);
    for (int y = 0; y < f->height(); ++y) {
      for (int x = 0; x < f->width(); ++x) {
        const Cell c{x, y};
        if (!f->is_open(c)) continue;
        const int loc = y * f->width() + x + 1;
        grid.add_location(loc, {x, y, floor});
        for (auto o : {Orientation::North, Orientation::East, Orientation::South, Orientation::West}) {
          PlayerState p;
          p.venue = std::string(venue);
          p.floor = floor;
          p.cell = c;
          p.facing = o;
          const double m = mean_rss(world, det, b, p);
          if (m >= det.detection_floor_dbm) grid.add_reading(loc, o, {std::min(m, 0.0), 0.0});
        }
      }
    }
    out.emplace(b.id, std::move(grid));
  }
  return out;
}

EpisodeReport run_episode(std::shared_ptr<const World> world, const Agent& agent, const EpisodeConfig& config,
                          std::uint64_t seed) {
  if (config.step_budget <= 0) throw std::invalid_argument("step_budget must be > 0");
  const Beacon* target = world->find_beacon(config.target_beacon);
  if (target == nullptr) throw std::invalid_argument(fmt::format("unknown target beacon '{}'", config.target_beacon));

  EpisodeReport report;
  report.seed = seed;
  PlayerState state = config.start ? *config.start : player_at_entrance(*world, target->venue);
  const double t_begin = state.clock_s;

  SignalEnvironment env(world, config.source, seed);
  FeedbackRenderer renderer(default_message_table(), {}, config.thresholds);
  GuidanceConfig gc{config.scan, config.thresholds, config.strategy, DeliveryMode::Realtime};
  GuidanceTracker tracker(world, gc, std::move(renderer), state.floor);
  tracker.set_target(GuidanceTarget{target->id, std::string(kGuideGhostId)});

  RngStream walker = RngStream::derive(seed, kWalkerStream);
  std::deque<RssSample> recent;
  std::optional<double> prev_eval_distance;
  int agree = 0;
  int judged = 0;
  std::vector<FeedbackEvent> step_events;

  auto run = [&](MoveCommand cmd) {
    const double t0 = state.clock_s;
    const MoveResult r = move_player(*world, state, cmd, config.timing);
    state = r.state;
    if (state.clock_s <= t0) return r.blocked;
    const auto samples = env.tick(state, t0, state.clock_s);
    if (std::holds_alternative<SeamlessNavigator>(agent)) {
      recent.insert(recent.end(), samples.begin(), samples.end());
      while (!recent.empty() && recent.front().timestamp_s <= state.clock_s - config.scan.window_span_s + 1e-9) {
        recent.pop_front();
      }
    }
    GuidanceOutput out = tracker.advance(state, samples, t0, state.clock_s);
    const double d = state.floor == target->floor ? cell_distance(state.cell, target->cell) : 0.0;
    for (const auto& e : out.evaluations) {
      report.categories.push_back(e.category);
      if (e.category == FeedbackCategory::Blackout) ++report.blackout_count;
      if (e.category == FeedbackCategory::Found && !report.found) {
        report.found = true;
        report.time_to_find_s = e.t_s - t_begin;
      }
      if (prev_eval_distance && (e.category == FeedbackCategory::Closer || e.category == FeedbackCategory::Farther)) {
        ++judged;
        const bool ok = e.category == FeedbackCategory::Closer ? d < *prev_eval_distance : d > *prev_eval_distance;
        agree += ok ? 1 : 0;
      }
      prev_eval_distance = d;
      if (std::holds_alternative<ScriptedWalk>(agent)) report.windows.push_back(e.window);
    }
    for (auto& ev : out.events) {
      if (config.keep_events) report.events.push_back(ev);
      step_events.push_back(std::move(ev));
    }
    return r.blocked;
  };

  // Listen for one step before moving so the first decision has feedback.
  if (!std::holds_alternative<ScriptedWalk>(agent)) run(MoveCommand::wait());

  bool blocked = false;
  std::size_t script_pos = 0;
  while (report.steps_taken < config.step_budget) {
    if (report.found && !std::holds_alternative<ScriptedWalk>(agent)) break;
    std::vector<MoveCommand> cmds;
    if (std::holds_alternative<GreedyFollower>(agent)) {
      cmds = greedy_policy(step_events, state.facing, blocked);
    } else if (std::holds_alternative<RandomWalker>(agent)) {
      cmds = {MoveCommand::step(static_cast<Orientation>(walker.below(4)))};
    } else if (const auto* s = std::get_if<ScriptedWalk>(&agent)) {
      if (script_pos >= s->commands.size()) break;
      cmds = {s->commands[script_pos++]};
    } else {
      const auto& nav = std::get<SeamlessNavigator>(agent);
      const std::vector<RssSample> flat(recent.begin(), recent.end());
      std::vector<RssWindow> windows;
      const double t = state.clock_s;
      for (const auto& [id, grid] : nav.survey) {
        const Beacon* b = world->find_beacon(id);
        windows.push_back(window_stats(flat, id, t - config.scan.window_span_s, t, b->adv_rate_hz));
      }
      const auto est = fingerprint_localize(windows, nav.survey, state.facing);
      if (!est) {
        ++report.missing_estimates;
        cmds = {MoveCommand::step(blocked ? turn_right(state.facing) : state.facing)};
      } else {
        report.positioning_errors_m.push_back(cell_distance({est->coord.x, est->coord.y}, state.cell) *
                                              world->cell_size_m);
        const Cell from{est->coord.x, est->coord.y};
        const Floor* f = world->find_floor(state.venue, state.floor);
        if (from == target->cell) {
          cmds = {MoveCommand::wait()};
        } else if (blocked) {
          // the estimate was wrong, sidestep
          cmds = {MoveCommand::step(turn_right(state.facing))};
        } else if (const auto path = shortest_path(*f, from, target->cell)) {
          cmds = {MoveCommand::step(path->front())};
        } else {
          const int dx = target->cell.x - from.x;
          const int dy = target->cell.y - from.y;
          cmds = {MoveCommand::step(std::abs(dx) >= std::abs(dy) ? toward(dx, 0) : toward(0, dy))};
        }
      }
    }
    step_events.clear();
    for (const auto& c : cmds) blocked = run(c);
    ++report.steps_taken;
  }

  report.trend_events = judged;
  report.feedback_truth_agreement = judged == 0 ? 1.0 : static_cast<double>(agree) / judged;
  report.duration_s = state.clock_s - t_begin;
  report.final_state = state;
  return report;
}

AttentionStats attention_replay(std::span<const FeedbackEvent> realtime_trace, std::span<const double> update_times,
                                double ack_delay_s) {
  AttentionStats stats;
  stats.realtime_deliveries = static_cast<int>(realtime_trace.size());
  NotificationQueue queue(DeliveryMode::Popup);
  std::optional<FeedbackCategory> last;
  std::size_t next = 0;
  for (double t : update_times) {
    if (queue.vibration_active() && t - *queue.vibrating_since() >= ack_delay_s - 1e-9) {
      if (queue.acknowledge(t).delivered) ++stats.popup_deliveries;
    }
    for (; next < realtime_trace.size() && realtime_trace[next].timestamp_s <= t + 1e-9; ++next) {
      const auto& ev = realtime_trace[next];
      const bool changed = !last || *last != ev.category || ev.category == FeedbackCategory::FloorSwitched;
      if (ev.category != FeedbackCategory::FloorSwitched) last = ev.category;
      if (!changed) continue;
      queue.notify(ev);
      ++stats.popup_notifications;
    }
  }
  return stats;
}

std::vector<CrowdLevel> default_crowd_levels() {
  CrowdConfig none;
  none.on_probability = 0.0;
  CrowdConfig dense;
  dense.on_probability = 0.1;
  dense.mean_dwell_s = 20.0;
  dense.full_block_probability = 0.5;
  return {{"none", none}, {"default", CrowdConfig{}}, {"dense", dense}};
}

SurveyRoute survey_route(const World& world, std::string_view venue, int floor, const FingerprintGrid& grid) {
  const Floor* f = world.find_floor(venue, floor);
  if (f == nullptr) throw std::invalid_argument(fmt::format("no floor {} in venue '{}'", floor, venue));
  SurveyRoute route;
  std::optional<Cell> at;
  for (const auto& [loc, coord] : grid.locations()) {
    if (coord.floor != floor) continue;
    const Cell goal{coord.x, coord.y};
    if (!f->is_open(goal)) throw std::invalid_argument(fmt::format("location {} is not an open cell", loc));
    if (!at) {
      route.start = goal;
    } else if (*at != goal) {
      const auto steps = shortest_path(*f, *at, goal);
      if (!steps) throw std::invalid_argument(fmt::format("location {} is unreachable", loc));
      for (auto o : *steps) {
        route.commands.push_back(MoveCommand::step(o));
        route.tags.emplace_back(std::nullopt);
      }
    }
    at = goal;
    for (auto o : {Orientation::South, Orientation::East, Orientation::North, Orientation::West}) {
      route.commands.push_back(MoveCommand::turn(o));
      route.commands.push_back(MoveCommand::wait());
      route.tags.emplace_back(std::make_pair(loc, o));
    }
  }
  return route;
}

double median(std::vector<double> values) { return percentile(std::move(values), 0.5); }

double percentile(std::vector<double> values, double p) {
  if (values.empty()) throw std::invalid_argument("percentile of an empty sample");
  std::sort(values.begin(), values.end());
  // Linear interpolation between closest ranks.
  const double pos = p * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

ComparisonReport compare_paradigms(std::shared_ptr<const World> world, const SweepConfig& sweep) {
  if (sweep.noise_sigmas.empty() || sweep.seeds <= 0) throw std::invalid_argument("sweep must be nonempty");
  const auto levels = sweep.crowd_levels.empty() ? default_crowd_levels() : sweep.crowd_levels;
  const Beacon* target = world->find_beacon(sweep.target_beacon);
  if (target == nullptr) throw std::invalid_argument(fmt::format("unknown target beacon '{}'", sweep.target_beacon));
  const Floor* floor = world->find_floor(target->venue, target->floor);

  std::vector<Cell> open;
  for (int y = 0; y < floor->height(); ++y) {
    for (int x = 0; x < floor->width(); ++x) {
      if (floor->is_open({x, y})) open.push_back({x, y});
    }
  }

  ComparisonReport report;
  for (double sigma : sweep.noise_sigmas) {
    for (const auto& level : levels) {
      PropagationConfig prop;
      prop.noise_sigma_db = sigma;
      prop.crowd = level.crowd;
      SeamlessNavigator nav{fingerprint_survey(*world, prop, target->venue, target->floor)};

      ComparisonCell cell;
      cell.noise_sigma_db = sigma;
      cell.crowd_label = level.label;
      std::vector<double> steps;
      std::vector<double> errors;
      int seamful_ok = 0;
      int seamless_ok = 0;
      int estimates = 0;
      int missing = 0;
      double minutes = 0.0;
      int realtime = 0;
      int popup = 0;
      for (int i = 0; i < sweep.seeds; ++i) {
        const std::uint64_t seed = sweep.base_seed + static_cast<std::uint64_t>(i);
        RngStream pick = RngStream::derive(seed, kStartStream);
        PlayerState start;
        start.venue = target->venue;
        start.floor = target->floor;
        start.cell = open[pick.below(open.size())];
        start.facing = static_cast<Orientation>(pick.below(4));

        EpisodeConfig ec;
        ec.source = prop;
        ec.step_budget = sweep.step_budget;
        ec.target_beacon = target->id;
        ec.start = start;

        const EpisodeReport seamful = run_episode(world, GreedyFollower{}, ec, seed);
        const EpisodeReport seamless = run_episode(world, nav, ec, seed);
        ++cell.episodes;
        if (seamful.found) {
          ++seamful_ok;
          steps.push_back(seamful.steps_taken);
        }
        if (seamless.found) ++seamless_ok;
        errors.insert(errors.end(), seamless.positioning_errors_m.begin(), seamless.positioning_errors_m.end());
        estimates += static_cast<int>(seamless.positioning_errors_m.size());
        missing += seamless.missing_estimates;

        std::vector<double> updates;
        for (double t = ec.scan.window_step_s; t <= seamful.duration_s + 1e-9; t += ec.scan.window_step_s) {
          updates.push_back(start.clock_s + t);
        }
        const AttentionStats att = attention_replay(seamful.events, updates, sweep.ack_delay_s);
        realtime += att.realtime_deliveries;
        popup += att.popup_deliveries;
        minutes += seamful.duration_s / 60.0;
        if (!(att.popup_deliveries < att.realtime_deliveries)) cell.popup_below_realtime_every_trace = false;
      }
      cell.seamful_success_rate = static_cast<double>(seamful_ok) / cell.episodes;
      cell.seamless_success_rate = static_cast<double>(seamless_ok) / cell.episodes;
      if (!steps.empty()) cell.seamful_median_steps = median(steps);
      if (!errors.empty()) cell.seamless_median_error_m = median(errors);
      cell.seamless_missing_fraction = estimates + missing == 0 ? 0.0 : static_cast<double>(missing) / (estimates + missing);
      cell.realtime_events_per_min = minutes > 0 ? realtime / minutes : 0.0;
      cell.popup_events_per_min = minutes > 0 ? popup / minutes : 0.0;
      report.cells.push_back(std::move(cell));
    }
  }
  return report;
}

namespace {

std::string opt(const std::optional<double>& v) { return v ? fmt::format("{:.2f}", *v) : "NA"; }

}  // namespace

std::string ComparisonReport::to_csv() const {
  std::ostringstream os;
  os << "noise_sigma_db,crowd,episodes,seamful_success_rate,seamful_median_steps,seamless_success_rate,"
        "seamless_median_error_m,seamless_missing_fraction,realtime_events_per_min,popup_events_per_min,"
        "popup_below_realtime\n";
  for (const auto& c : cells) {
    os << fmt::format("{},{},{},{:.4f},{},{:.4f},{},{:.4f},{:.3f},{:.3f},{}\n", c.noise_sigma_db, c.crowd_label,
                      c.episodes, c.seamful_success_rate, opt(c.seamful_median_steps), c.seamless_success_rate,
                      opt(c.seamless_median_error_m), c.seamless_missing_fraction, c.realtime_events_per_min,
                      c.popup_events_per_min, c.popup_below_realtime_every_trace ? "true" : "false");
  }
  return os.str();
}

std::string ComparisonReport::to_text() const {
  std::ostringstream os;
  os << fmt::format("{:>6} {:<8} {:>5} | {:>8} {:>6} | {:>8} {:>7} {:>7} | {:>8} {:>8}\n", "sigma", "crowd", "n",
                    "seamful", "steps", "seamless", "err_m", "missing", "rt/min", "popup/min");
  for (const auto& c : cells) {
    os << fmt::format("{:>6.1f} {:<8} {:>5} | {:>7.1f}% {:>6} | {:>7.1f}% {:>7} {:>6.1f}% | {:>8.2f} {:>8.2f}\n",
                      c.noise_sigma_db, c.crowd_label, c.episodes, 100.0 * c.seamful_success_rate,
                      opt(c.seamful_median_steps), 100.0 * c.seamless_success_rate, opt(c.seamless_median_error_m),
                      100.0 * c.seamless_missing_fraction, c.realtime_events_per_min, c.popup_events_per_min);
  }
  return os.str();
}

}  // namespace ghostsim

#include <atomic>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "ghostsim/fingerprint.hpp"
#include "ghostsim/harness.hpp"
#include "ghostsim/scanner.hpp"
#include "ghostsim/session.hpp"
#include "ghostsim/transport.hpp"

namespace fs = std::filesystem;
using namespace ghostsim;

namespace {

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

std::string resolve_ref(const std::string& ref, const std::string& ext) {
  if (fs::exists(ref)) return ref;
  fs::path p = fs::path(default_fixture_dir()) / ref;
  if (fs::exists(p)) return p.string();
  if (!ref.ends_with(ext)) p += ext;
  return p.string();
}

std::shared_ptr<const World> load_world_ref(const std::string& ref) {
  return std::make_shared<const World>(load_world_file(resolve_ref(ref, ".json")));
}

std::string default_target(const World& world) {
  for (const auto& a : world.artifacts) {
    if (a.quest) return a.beacon_id;
  }
  if (world.beacons.empty()) throw std::invalid_argument("world has no beacons");
  return world.beacons.front().id;
}

CrowdConfig crowd_level(const std::string& label) {
  for (const auto& l : default_crowd_levels()) {
    if (l.label == label) return l.crowd;
  }
  throw std::invalid_argument(fmt::format("unknown crowd level '{}'", label));
}

// beacon=path pairs
ReplaySource replay_source(const std::vector<std::string>& specs, bool deterministic) {
  ReplaySource src;
  src.deterministic = deterministic;
  for (const auto& s : specs) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw std::invalid_argument(fmt::format("--grid wants beacon=path, got '{}'", s));
    const std::string id = s.substr(0, eq);
    src.grids.emplace(id, load_fingerprint_csv(resolve_ref(s.substr(eq + 1), ".csv"), id));
  }
  return src;
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
  out << text;
}

struct SimulateArgs {
  std::string world;
  std::string agent = "greedy";
  int seeds = 100;
  std::uint64_t base_seed = 1;
  std::string target;
  int budget = 120;
  double noise = 3.2;
  std::string crowd = "default";
  std::string strategy = "opportunistic";
  bool deterministic = false;
  std::vector<std::string> grids;
  std::string report_dir = "reports";
};

int run_simulate(const SimulateArgs& a) {
  const auto world = load_world_ref(a.world);
  EpisodeConfig ec;
  ec.target_beacon = a.target.empty() ? default_target(*world) : a.target;
  ec.step_budget = a.budget;
  ec.keep_events = false;
  const auto strategy = parse_strategy(a.strategy);
  if (!strategy) throw std::invalid_argument(fmt::format("unknown strategy '{}'", a.strategy));
  ec.strategy = *strategy;
  PropagationConfig prop;
  prop.noise_sigma_db = a.noise;
  prop.crowd = crowd_level(a.crowd);
  prop.deterministic = a.deterministic;
  if (a.grids.empty()) {
    ec.source = prop;
  } else {
    ec.source = replay_source(a.grids, a.deterministic);
  }

  Agent agent;
  if (a.agent == "greedy") {
    agent = GreedyFollower{};
  } else if (a.agent == "random") {
    agent = RandomWalker{};
  } else {
    const Beacon* b = world->find_beacon(ec.target_beacon);
    if (b == nullptr) throw std::invalid_argument(fmt::format("unknown target beacon '{}'", ec.target_beacon));
    agent = SeamlessNavigator{fingerprint_survey(*world, prop, b->venue, b->floor)};
  }

  std::string csv = "seed,found,steps_taken,time_to_find_s,feedback_truth_agreement,trend_events,blackout_count,duration_s\n";
  int found = 0;
  std::vector<double> steps;
  for (int i = 0; i < a.seeds; ++i) {
    const std::uint64_t seed = a.base_seed + static_cast<std::uint64_t>(i);
    const EpisodeReport r = run_episode(world, agent, ec, seed);
    csv += fmt::format("{},{},{},{},{:.4f},{},{},{:g}\n", seed, r.found ? 1 : 0, r.steps_taken,
                       r.time_to_find_s ? fmt::format("{:g}", *r.time_to_find_s) : "NA", r.feedback_truth_agreement,
                       r.trend_events, r.blackout_count, r.duration_s);
    if (r.found) {
      ++found;
      steps.push_back(r.steps_taken);
    }
  }
  const std::string summary = fmt::format(
      "agent {} target {} episodes {} found {} ({:.1f}%) median steps {}\n", a.agent, ec.target_beacon, a.seeds,
      found, a.seeds > 0 ? 100.0 * found / a.seeds : 0.0, steps.empty() ? "NA" : fmt::format("{:g}", median(steps)));
  const fs::path dir(a.report_dir);
  write_file(dir / fmt::format("simulate_{}.csv", a.agent), csv);
  write_file(dir / fmt::format("simulate_{}.txt", a.agent), summary);
  std::cout << summary << "report: " << (dir / fmt::format("simulate_{}.csv", a.agent)).string() << "\n";
  return 0;
}

struct ReplayArgs {
  std::string grid = "eastwing_beacon1.csv";
  std::string beacon = "beacon1";
  std::string world = "eastwing";
  int repeats = 1;
  std::uint64_t seed = 1;
  bool deterministic = false;
  std::string report_dir = "reports";
};

int run_replay(const ReplayArgs& a) {
  const auto world = load_world_ref(a.world);
  const Beacon* beacon = world->find_beacon(a.beacon);
  if (beacon == nullptr) throw std::invalid_argument(fmt::format("unknown beacon '{}'", a.beacon));
  ReplaySource src;
  src.deterministic = a.deterministic;
  src.grids.emplace(a.beacon, load_fingerprint_csv(resolve_ref(a.grid, ".csv"), a.beacon));
  const FingerprintGrid& grid = src.grids.begin()->second;
  const int floor = grid.locations().empty() ? 0 : grid.locations().begin()->second.floor;
  const SurveyRoute route = survey_route(*world, beacon->venue, floor, grid);

  EpisodeConfig ec;
  ec.source = src;
  ec.target_beacon = a.beacon;
  ec.step_budget = static_cast<int>(route.commands.size());
  ec.keep_events = false;
  PlayerState start = player_at_entrance(*world, beacon->venue);
  start.floor = floor;
  start.cell = route.start;
  ec.start = start;

  std::map<std::pair<int, Orientation>, std::vector<double>> means;
  std::map<std::pair<int, Orientation>, std::vector<double>> sds;
  for (int i = 0; i < a.repeats; ++i) {
    const EpisodeReport r = run_episode(world, ScriptedWalk{route.commands}, ec, a.seed + static_cast<std::uint64_t>(i));
    if (r.windows.size() != route.tags.size()) {
      throw std::runtime_error(fmt::format("route produced {} windows for {} timed commands", r.windows.size(),
                                           route.tags.size()));
    }
    for (std::size_t k = 0; k < route.tags.size(); ++k) {
      if (!route.tags[k] || r.windows[k].empty()) continue;
      means[*route.tags[k]].push_back(*r.windows[k].mean_dbm);
      sds[*route.tags[k]].push_back(*r.windows[k].sd_db);
    }
  }

  std::string csv = "location_id,orientation,table_mean_dbm,table_sd_db,replay_mean_dbm,replay_sd_db,windows\n";
  double worst = 0.0;
  int rows = 0;
  for (const auto& [key, table] : grid.entries()) {
    const auto it = means.find(key);
    if (it == means.end()) {
      csv += fmt::format("{},{},{:g},{:g},NA,NA,0\n", key.first, to_string(key.second), table.rss_mean_dbm,
                         table.rss_sd_db);
      continue;
    }
    double m = 0.0;
    double s = 0.0;
    for (double v : it->second) m += v;
    for (double v : sds[key]) s += v;
    m /= static_cast<double>(it->second.size());
    s /= static_cast<double>(it->second.size());
    worst = std::max(worst, std::abs(m - table.rss_mean_dbm));
    ++rows;
    csv += fmt::format("{},{},{:g},{:g},{:.3f},{:.3f},{}\n", key.first, to_string(key.second), table.rss_mean_dbm,
                       table.rss_sd_db, m, s, it->second.size());
  }
  const fs::path out = fs::path(a.report_dir) / "replay.csv";
  write_file(out, csv);
  std::cout << fmt::format("replayed {} cells over {} locations, max |mean - table| {:.3f} dB\nreport: {}\n", rows,
                           grid.locations().size(), worst, out.string());
  return 0;
}

int run_validate(const std::string& path, const std::string& beacon) {
  const FingerprintGrid grid = load_fingerprint_csv(path, beacon);
  std::cout << fmt::format("ok: {} orientations × {} locations ({} readings)\n", grid.orientation_count(),
                           grid.locations().size(), grid.entries().size());
  return 0;
}

struct ScanArgs {
  std::string world = "eastwing";
  std::uint64_t seed = 1;
  double seconds = 5.0;
  std::string venue;
  int floor = 0;
  int x = -1;
  int y = -1;
  std::string facing = "N";
  double noise = 3.2;
  std::string crowd = "default";
  bool deterministic = false;
  std::vector<std::string> grids;
  std::string out;
};

int run_scan_dump(const ScanArgs& a) {
  const auto world = load_world_ref(a.world);
  if (world->venues.empty()) throw std::invalid_argument("world has no venues");
  PlayerState p = player_at_entrance(*world, a.venue.empty() ? world->venues.front().id : a.venue);
  p.floor = a.floor;
  if (a.x >= 0) p.cell.x = a.x;
  if (a.y >= 0) p.cell.y = a.y;
  const auto facing = parse_orientation(a.facing);
  if (!facing) throw std::invalid_argument(fmt::format("unknown facing '{}'", a.facing));
  p.facing = *facing;
  const Floor* f = world->find_floor(p.venue, p.floor);
  if (f == nullptr || !f->is_open(p.cell)) {
    throw std::invalid_argument(fmt::format("({},{}) on floor {} is not an open cell", p.cell.x, p.cell.y, p.floor));
  }
  SignalSource source;
  if (a.grids.empty()) {
    PropagationConfig prop;
    prop.noise_sigma_db = a.noise;
    prop.crowd = crowd_level(a.crowd);
    prop.deterministic = a.deterministic;
    source = prop;
  } else {
    source = replay_source(a.grids, a.deterministic);
  }
  SignalEnvironment env(world, source, a.seed);
  const auto samples = env.tick(p, 0.0, a.seconds);
  std::string csv = "timestamp_s,beacon_id,rssi_dbm\n";
  for (const auto& s : samples) csv += fmt::format("{:.3f},{},{:.2f}\n", s.timestamp_s, s.beacon_id, s.rssi_dbm);
  if (a.out.empty()) {
    std::cout << csv;
  } else {
    write_file(a.out, csv);
  }
  return 0;
}

struct CompareArgs {
  std::string world = "eastwing";
  std::string target;
  int seeds = 50;
  std::uint64_t base_seed = 1;
  int budget = 120;
  double ack_delay = 5.0;
  std::string report_dir = "reports";
};

int run_compare(const CompareArgs& a) {
  const auto world = load_world_ref(a.world);
  SweepConfig sweep;
  sweep.seeds = a.seeds;
  sweep.base_seed = a.base_seed;
  sweep.step_budget = a.budget;
  sweep.ack_delay_s = a.ack_delay;
  sweep.target_beacon = a.target.empty() ? default_target(*world) : a.target;
  const ComparisonReport report = compare_paradigms(world, sweep);
  const fs::path dir(a.report_dir);
  write_file(dir / "comparison.csv", report.to_csv());
  write_file(dir / "comparison.txt", report.to_text());
  std::cout << report.to_text() << "report: " << (dir / "comparison.csv").string() << "\n";
  return 0;
}

struct ServeArgs {
  std::string host = "127.0.0.1";
  std::optional<int> http;
  std::optional<int> ndjson;
  bool stdio = false;
  std::string log_dir;
  std::string fixtures;
};

int run_serve(ServeArgs a) {
  ServerOptions opts;
  opts.fixture_dir = a.fixtures.empty() ? default_fixture_dir() : a.fixtures;
  if (!a.log_dir.empty()) opts.log_dir = a.log_dir;
  SessionServer server(opts);
  if (a.stdio) {
    serve_stdio(server, std::cin, std::cout);
    return 0;
  }
  if (!a.http && !a.ndjson) a.http = 8080;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::vector<std::thread> threads;
  std::atomic<int> rc{0};
  if (a.http) {
    threads.emplace_back([&] {
      const int r = serve_http(server, {a.host, *a.http}, g_stop,
                               [&](int port) { std::cerr << fmt::format("http listening on {}:{}\n", a.host, port); });
      if (r != 0) {
        rc = r;
        g_stop = true;
      }
    });
  }
  if (a.ndjson) {
    threads.emplace_back([&] {
      const int r = serve_ndjson(server, {a.host, *a.ndjson}, g_stop, [&](int port) {
        std::cerr << fmt::format("ndjson listening on {}:{}\n", a.host, port);
      });
      if (r != 0) {
        rc = r;
        g_stop = true;
      }
    });
  }
  for (auto& t : threads) t.join();
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ghost Detector simulation engine"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "run seeded episodes and write a report");
  s->add_option("--world", sim.world, "world JSON path or fixture name")->required();
  s->add_option("--agent", sim.agent)->check(CLI::IsMember({"greedy", "random", "seamless"}));
  s->add_option("--seeds", sim.seeds)->check(CLI::PositiveNumber);
  s->add_option("--base-seed", sim.base_seed);
  s->add_option("--target", sim.target, "target beacon id");
  s->add_option("--budget", sim.budget)->check(CLI::PositiveNumber);
  s->add_option("--noise", sim.noise, "noise sigma, dB");
  s->add_option("--crowd", sim.crowd)->check(CLI::IsMember({"none", "default", "dense"}));
  s->add_option("--strategy", sim.strategy);
  s->add_flag("--deterministic", sim.deterministic);
  s->add_option("--grid", sim.grids, "beacon=csv, replays that beacon from a fingerprint grid");
  s->add_option("--report-dir", sim.report_dir);

  ReplayArgs rep;
  auto* r = app.add_subcommand("replay", "walk the survey route over a fingerprint grid");
  r->add_option("--grid", rep.grid);
  r->add_option("--beacon", rep.beacon);
  r->add_option("--world", rep.world);
  r->add_option("--repeats", rep.repeats)->check(CLI::PositiveNumber);
  r->add_option("--seed", rep.seed);
  r->add_flag("--deterministic", rep.deterministic);
  r->add_option("--report-dir", rep.report_dir);

  std::string grid_path;
  std::string grid_beacon = "beacon1";
  auto* v = app.add_subcommand("validate-grid", "check a fingerprint CSV");
  v->add_option("csv", grid_path)->required();
  v->add_option("--beacon", grid_beacon);

  ScanArgs scan;
  auto* d = app.add_subcommand("scan-dump", "print raw samples as CSV");
  d->add_option("--world", scan.world);
  d->add_option("--seed", scan.seed);
  d->add_option("--seconds", scan.seconds)->check(CLI::PositiveNumber);
  d->add_option("--venue", scan.venue);
  d->add_option("--floor", scan.floor);
  d->add_option("--x", scan.x);
  d->add_option("--y", scan.y);
  d->add_option("--facing", scan.facing);
  d->add_option("--noise", scan.noise);
  d->add_option("--crowd", scan.crowd)->check(CLI::IsMember({"none", "default", "dense"}));
  d->add_flag("--deterministic", scan.deterministic);
  d->add_option("--grid", scan.grids);
  d->add_option("--out", scan.out);

  CompareArgs cmp;
  auto* c = app.add_subcommand("compare", "seamful vs seamless sweep over noise and crowd");
  c->add_option("--world", cmp.world);
  c->add_option("--target", cmp.target);
  c->add_option("--seeds", cmp.seeds)->check(CLI::PositiveNumber);
  c->add_option("--base-seed", cmp.base_seed);
  c->add_option("--budget", cmp.budget)->check(CLI::PositiveNumber);
  c->add_option("--ack-delay", cmp.ack_delay);
  c->add_option("--report-dir", cmp.report_dir);

  ServeArgs srv;
  auto* sv = app.add_subcommand("serve", "session server for the play UI");
  sv->add_option("--host", srv.host);
  sv->add_option("--http", srv.http, "HTTP port (default 8080)");
  sv->add_option("--ndjson", srv.ndjson, "NDJSON socket port");
  sv->add_flag("--stdio", srv.stdio, "NDJSON over stdin/stdout");
  sv->add_option("--log-dir", srv.log_dir);
  sv->add_option("--fixtures", srv.fixtures, "fixture directory (default GHOSTSIM_FIXTURES)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n";
    const auto subs = app.get_subcommands();
    std::cerr << (subs.empty() ? app.help() : subs.front()->help());
    return 2;
  }

  try {
    if (s->parsed()) return run_simulate(sim);
    if (r->parsed()) return run_replay(rep);
    if (v->parsed()) return run_validate(grid_path, grid_beacon);
    if (d->parsed()) return run_scan_dump(scan);
    if (c->parsed()) return run_compare(cmp);
    if (sv->parsed()) return run_serve(srv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

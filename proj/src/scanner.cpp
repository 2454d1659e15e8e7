#include "ghostsim/scanner.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <tuple>

namespace ghostsim {

void ScanConfig::validate() const {
  if (window_samples < 2) throw std::invalid_argument("window_samples must be >= 2");
  if (!(window_span_s > 0.0) || !(window_step_s > 0.0)) {
    throw std::invalid_argument("window span and step must be positive");
  }
}

namespace {

// Index of the last advertising event at or before t. The epsilon absorbs
// representation error in t * rate for event-aligned clocks.
std::int64_t last_event(double rate_hz, double t) {
  return static_cast<std::int64_t>(std::floor(t * rate_hz + 1e-9));
}

}  // namespace

int advertising_events(double rate_hz, double t_start_s, double t_end_s) {
  if (t_end_s <= t_start_s) return 0;
  return static_cast<int>(last_event(rate_hz, t_end_s) - last_event(rate_hz, t_start_s));
}

RssWindow window_stats(std::span<const RssSample> samples, std::string_view beacon_id, double t_start_s,
                       double t_end_s, double adv_rate_hz) {
  RssWindow w;
  w.beacon_id = std::string(beacon_id);
  w.t_start_s = t_start_s;
  w.t_end_s = t_end_s;
  w.expected_samples = advertising_events(adv_rate_hz, t_start_s, t_end_s);

  constexpr double eps = 1e-9;
  auto first = std::lower_bound(samples.begin(), samples.end(), t_start_s + eps,
                                [](const RssSample& s, double t) { return s.timestamp_s < t; });
  double sum = 0.0;
  for (auto it = first; it != samples.end() && it->timestamp_s <= t_end_s + eps; ++it) {
    if (it->beacon_id != beacon_id) continue;
    sum += it->rssi_dbm;
    ++w.n;
  }
  if (w.n == 0) return w;

  const double mean = sum / w.n;
  double ss = 0.0;
  for (auto it = first; it != samples.end() && it->timestamp_s <= t_end_s + eps; ++it) {
    if (it->beacon_id != beacon_id) continue;
    const double d = it->rssi_dbm - mean;
    ss += d * d;
  }
  w.mean_dbm = mean;
  w.sd_db = std::sqrt(ss / w.n);
  w.coverage = w.expected_samples > 0 ? std::min(1.0, static_cast<double>(w.n) / w.expected_samples) : 1.0;
  return w;
}

std::optional<std::string> strongest_beacon(std::span<const RssWindow> windows) {
  const RssWindow* best = nullptr;
  for (const auto& w : windows) {
    if (w.empty() || !w.mean_dbm) continue;
    if (best == nullptr || *w.mean_dbm > *best->mean_dbm ||
        (*w.mean_dbm == *best->mean_dbm && w.beacon_id < best->beacon_id)) {
      best = &w;
    }
  }
  if (best == nullptr) return std::nullopt;
  return best->beacon_id;
}

bool is_deterministic(const SignalSource& source) {
  return std::visit([](const auto& s) { return s.deterministic; }, source);
}

SignalEnvironment::SignalEnvironment(std::shared_ptr<const World> world, SignalSource source, std::uint64_t seed)
    : world_(std::move(world)),
      source_(std::move(source)),
      crowd_(std::holds_alternative<PropagationConfig>(source_) ? std::get<PropagationConfig>(source_).crowd
                                                                 : CrowdConfig{},
             RngStream::derive(seed, 0)) {
  if (const auto* cfg = std::get_if<PropagationConfig>(&source_)) cfg->validate();
  beacon_rngs_.reserve(world_->beacons.size());
  for (std::size_t i = 0; i < world_->beacons.size(); ++i) {
    beacon_rngs_.push_back(RngStream::derive(seed, 1 + i));
  }
}

std::vector<RssSample> SignalEnvironment::tick(const PlayerState& player, double t_from, double t_to) {
  std::vector<RssSample> out;
  if (t_to <= t_from) return out;

  struct Event {
    double t;
    std::size_t beacon;
  };
  std::vector<Event> events;
  const auto& beacons = world_->beacons;
  std::size_t expected = 0;
  for (const auto& b : beacons) expected += static_cast<std::size_t>(advertising_events(b.adv_rate_hz, t_from, t_to));
  events.reserve(expected);
  out.reserve(expected);
  for (std::size_t i = 0; i < beacons.size(); ++i) {
    const double rate = beacons[i].adv_rate_hz;
    for (std::int64_t k = last_event(rate, t_from) + 1, end = last_event(rate, t_to); k <= end; ++k) {
      events.push_back({static_cast<double>(k) / rate, i});
    }
  }
  std::sort(events.begin(), events.end(),
            [](const Event& a, const Event& b) { return std::tie(a.t, a.beacon) < std::tie(b.t, b.beacon); });

  PlayerState at = player;
  if (const auto* cfg = std::get_if<PropagationConfig>(&source_)) {
    // The pose is fixed over the tick, so the model mean is too.
    std::vector<std::optional<double>> means(beacons.size());
    for (const auto& e : events) {
      const Beacon& b = beacons[e.beacon];
      const double noise = cfg->deterministic ? 0.0 : beacon_rngs_[e.beacon].gaussian(0.0, cfg->noise_sigma_db);
      const CrowdEffect crowd = cfg->deterministic ? CrowdEffect{} : crowd_attenuation(cfg->crowd, crowd_, e.t);
      if (player.in_transit() || b.venue != player.venue) continue;
      if (!means[e.beacon]) means[e.beacon] = mean_rss(*world_, *cfg, b, player);
      at.clock_s = e.t;
      if (auto s = realize_rss(*cfg, b, at, *means[e.beacon], noise, crowd)) out.push_back(std::move(*s));
    }
  } else {
    const auto& replay = std::get<ReplaySource>(source_);
    for (const auto& e : events) {
      const Beacon& b = beacons[e.beacon];
      auto grid = replay.grids.find(b.id);
      if (grid == replay.grids.end()) continue;
      at.clock_s = e.t;
      auto r = replay_rss(grid->second, at, beacon_rngs_[e.beacon], replay.deterministic);
      if (b.venue != player.venue) continue;
      if (r.uncalibrated) ++uncalibrated_reads_;
      if (r.sample) out.push_back(std::move(*r.sample));
    }
  }
  return out;
}

}  // namespace ghostsim

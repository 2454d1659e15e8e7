#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace ghostsim {

// Seeded random stream with a fixed, platform-independent draw pattern.
// std::normal_distribution is implementation-defined, so gaussians are
// produced here with Box-Muller over the raw 64-bit engine output. Each
// gaussian consumes exactly two engine outputs.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed = 0) : engine_(seed) {}

  // Independent stream for (seed, stream_id); seed_seq mixing is fully
  // specified by the standard. The engine is seeded on first draw, so unused
  // streams are free.
  static RngStream derive(std::uint64_t seed, std::uint64_t stream_id) {
    RngStream out;
    out.pending_ = true;
    out.seed_ = seed;
    out.stream_ = stream_id;
    return out;
  }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine()() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double gaussian(double mean, double sd) {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    return mean + sd * z;
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)); }

  void discard(unsigned long long n) { engine().discard(n); }

  friend bool operator==(const RngStream& a, const RngStream& b) {
    RngStream x = a;
    RngStream y = b;
    return x.engine() == y.engine();
  }

 private:
  std::mt19937_64& engine() {
    if (pending_) {
      std::seed_seq seq{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32),
                        static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32),
                        0x67686f73u};
      engine_.seed(seq);
      pending_ = false;
    }
    return engine_;
  }

  std::mt19937_64 engine_;
  bool pending_ = false;
  std::uint64_t seed_ = 0;
  std::uint64_t stream_ = 0;
};

}  // namespace ghostsim

#pragma once

#include "dpp/core.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace dpp {

/// SplitMix64 finalizer: a bijective avalanche mix of a 64-bit word.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Per-path seed derived from (master seed, path id); independent of worker layout.
constexpr std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t path_id) {
  return mix64(mix64(master_seed) ^ mix64(path_id + 0x632be59bd9b4e019ULL));
}

/// Counter-based uniform draw in [0,1) keyed by (seed, counter), 53-bit resolution.
constexpr double uniform01(std::uint64_t seed, std::uint64_t counter) {
  const std::uint64_t bits = mix64(mix64(seed) ^ counter);
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Replayable i.i.d. event source. The draw for slot t is a pure function of
/// (seed, t), so any slot of any path can be regenerated without history.
class EventStream {
 public:
  EventStream(const ProblemSpec& spec, std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t spec_digest() const { return spec_digest_; }
  std::uint64_t cursor() const { return cursor_; }

  /// Event id for slot t >= 1 by inverse CDF over the spec's event order.
  std::size_t sample(std::uint64_t t) const;

  /// Samples the slot at the cursor and advances it.
  std::size_t next() { return sample(cursor_++); }

 private:
  std::uint64_t spec_digest_;
  std::uint64_t seed_;
  std::uint64_t cursor_ = 1;
  std::vector<double> cdf_;
};

/// The 3-queue/2-server scheduling instance. Events are the 8 Bernoulli
/// arrival triples a in lexicographic order (a1 most significant); each event
/// offers the services (1,1,0), (1,0,1), (0,1,1) at energy 1, 1, 2 with
/// z = a - b. z_max = 2 and B = sqrt(3).
ProblemSpec build_server_scheduling_spec(const std::array<double, 3>& arrival_means, double V);

/// Single-constraint reduction of the same system: queues 2 and 3 are pooled
/// into one virtual queue with z_1 = (a2 + a3) - (b2 + b3). Same events,
/// actions and energies; z_max = 2 and B = 2.
ProblemSpec build_pooled_scheduling_spec(const std::array<double, 3>& arrival_means, double V);

inline constexpr std::array<double, 3> kServerArrivalMeans{0.5, 0.7, 0.4};

}  // namespace dpp

#include "dpp/events.hpp"

#include <algorithm>
#include <cmath>

namespace dpp {

EventStream::EventStream(const ProblemSpec& spec, std::uint64_t seed)
    : spec_digest_(spec.digest()), seed_(seed) {
  cdf_.reserve(spec.num_events());
  double acc = 0.0;
  for (const EventOutcome& e : spec.events()) {
    acc += e.probability;
    cdf_.push_back(acc);
  }
}

std::size_t EventStream::sample(std::uint64_t t) const {
  const double u = uniform01(seed_, t);
  // The last event absorbs any rounding shortfall of the cumulative sum.
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end() - 1, u);
  return static_cast<std::size_t>(it - cdf_.begin());
}

namespace {

constexpr std::array<std::array<int, 3>, 3> kServices{{{1, 1, 0}, {1, 0, 1}, {0, 1, 1}}};
constexpr std::array<double, 3> kEnergy{1.0, 1.0, 2.0};

void check_means(const std::array<double, 3>& means) {
  for (double m : means) {
    if (!(m > 0.0 && m < 1.0)) throw InvalidInput("arrival means must lie in (0,1)");
  }
}

template <typename MakeZ>
std::vector<EventOutcome> scheduling_events(const std::array<double, 3>& means, MakeZ make_z) {
  std::vector<EventOutcome> events;
  events.reserve(8);
  for (int bits = 0; bits < 8; ++bits) {
    const std::array<int, 3> a{(bits >> 2) & 1, (bits >> 1) & 1, bits & 1};
    double p = 1.0;
    for (int i = 0; i < 3; ++i) p *= a[i] ? means[i] : 1.0 - means[i];
    EventOutcome e;
    e.id = static_cast<std::size_t>(bits);
    e.probability = p;
    for (std::size_t k = 0; k < kServices.size(); ++k) {
      e.actions.push_back(ActionVector{kEnergy[k], make_z(a, kServices[k])});
    }
    events.push_back(std::move(e));
  }
  return events;
}

}  // namespace

ProblemSpec build_server_scheduling_spec(const std::array<double, 3>& arrival_means, double V) {
  check_means(arrival_means);
  auto events = scheduling_events(arrival_means, [](const auto& a, const auto& b) {
    Vector z(3);
    for (int i = 0; i < 3; ++i) z[i] = a[i] - b[i];
    return z;
  });
  return ProblemSpec(std::move(events), 3, 2.0, std::sqrt(3.0), V);
}

ProblemSpec build_pooled_scheduling_spec(const std::array<double, 3>& arrival_means, double V) {
  check_means(arrival_means);
  auto events = scheduling_events(arrival_means, [](const auto& a, const auto& b) {
    Vector z(1);
    z[0] = (a[1] + a[2]) - (b[1] + b[2]);
    return z;
  });
  return ProblemSpec(std::move(events), 1, 2.0, 2.0, V);
}

}  // namespace dpp

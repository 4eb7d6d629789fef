#include "oppload/assignment.hpp"

#include <cmath>

namespace oppload::assignment {

double RatingWeights::of(Metric m) const {
  switch (m) {
    case Metric::Cpu: return cpu;
    case Metric::Memory: return memory;
    case Metric::Disk: return disk;
    case Metric::Energy: return energy;
    case Metric::Distance: return distance;
  }
  return 0.0;
}

double& RatingWeights::of(Metric m) {
  switch (m) {
    case Metric::Cpu: return cpu;
    case Metric::Memory: return memory;
    case Metric::Disk: return disk;
    case Metric::Energy: return energy;
    case Metric::Distance: break;
  }
  return distance;
}

bool RatingWeights::valid() const {
  double sum = 0.0;
  for (Metric m : workflow::kAllMetrics) {
    const double w = of(m);
    if (!(w >= 0.0 && w <= 1.0)) return false;
    sum += w;
  }
  return std::abs(sum - 1.0) <= 1e-9;
}

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::Recent: return "recent";
    case Strategy::Random: return "random";
    case Strategy::Best: return "best";
    case Strategy::Spread: return "spread";
  }
  return "?";
}

std::optional<Strategy> strategy_from_string(std::string_view name) {
  for (Strategy s : kAllStrategies)
    if (to_string(s) == name) return s;
  return std::nullopt;
}

double capability(const CapabilityVector& caps, Metric m) {
  switch (m) {
    case Metric::Cpu: return caps.cpu;
    case Metric::Memory: return caps.memory;
    case Metric::Disk: return caps.disk;
    case Metric::Energy: return caps.energy;
    case Metric::Distance: break;
  }
  return 0.0;
}

bool capable(const CapabilityVector& caps, const Requirements& requirements) {
  for (const auto& [m, required] : requirements) {
    if (m == Metric::Distance) continue;
    if (capability(caps, m) < required) return false;
  }
  return true;
}

std::vector<KnownOffer> capability_filter(std::span<const KnownOffer> offers,
                                          const Requirements& requirements) {
  std::vector<KnownOffer> out;
  for (const auto& o : offers)
    if (capable(o.offer.capabilities, requirements)) out.push_back(o);
  return out;
}

double rate(const CapabilityVector& caps, const Requirements& requirements,
            const RatingWeights& weights, const Position& origin) {
  double score = 0.0;
  for (const auto& [m, required] : requirements) {
    if (m == Metric::Distance) {
      const double d = sim::distance(origin, caps.position);
      score += weights.distance / (1.0 + d / required);
    } else {
      score += weights.of(m) * std::min(capability(caps, m) / required, kRatioCap);
    }
  }
  return score;
}

std::vector<WorkerRating> rank(std::span<const KnownOffer> offers, const Requirements& requirements,
                               const RatingWeights& weights, const Position& origin) {
  std::vector<WorkerRating> out;
  out.reserve(offers.size());
  for (const auto& o : offers)
    out.push_back({o.offer.worker, rate(o.offer.capabilities, requirements, weights, origin), o});
  auto key = [](double score) { return std::llround(score * 1e9); };
  std::sort(out.begin(), out.end(), [&](const WorkerRating& a, const WorkerRating& b) {
    const auto ka = key(a.score), kb = key(b.score);
    if (ka != kb) return ka > kb;
    return a.worker < b.worker;
  });
  return out;
}

}  // namespace oppload::assignment

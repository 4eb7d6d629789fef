#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "oppload/announce.hpp"
#include "oppload/workflow.hpp"

namespace oppload::assignment {

using announce::CapabilityVector;
using announce::KnownOffer;
using sim::Position;
using workflow::Metric;
using workflow::Requirements;

/// Per-metric weights; they must sum to 1.
struct RatingWeights {
  double energy = 0.3;
  double distance = 0.3;
  double cpu = 0.2;
  double memory = 0.1;
  double disk = 0.1;

  double of(Metric m) const;
  double& of(Metric m);
  bool valid() const;
};

/// Upper bound on any single capability/requirement ratio.
inline constexpr double kRatioCap = 10.0;

struct WorkerRating {
  NodeAddress worker;
  double score = 0.0;
  KnownOffer offer;
};

enum class Strategy { Recent, Random, Best, Spread };

inline constexpr Strategy kAllStrategies[] = {Strategy::Recent, Strategy::Random, Strategy::Best,
                                              Strategy::Spread};

std::string_view to_string(Strategy s);
std::optional<Strategy> strategy_from_string(std::string_view name);

double capability(const CapabilityVector& caps, Metric m);

/// Every required metric except distance must be met.
bool capable(const CapabilityVector& caps, const Requirements& requirements);

std::vector<KnownOffer> capability_filter(std::span<const KnownOffer> offers,
                                          const Requirements& requirements);

/// Weighted sum of capped capability/requirement ratios over the required
/// resource metrics, plus weights.distance / (1 + d/R) when a distance
/// radius R is required.
double rate(const CapabilityVector& caps, const Requirements& requirements,
            const RatingWeights& weights, const Position& origin);

/// Descending by score; scores equal to 1e-9 fall back to address order.
std::vector<WorkerRating> rank(std::span<const KnownOffer> offers, const Requirements& requirements,
                               const RatingWeights& weights, const Position& origin);

/// Maps a folded standard normal draw |z| to a list index.
inline std::size_t folded_normal_index(std::size_t n, double abs_z) {
  if (n <= 1) return 0;
  const double f = std::floor(std::abs(abs_z));
  return f >= static_cast<double>(n - 1) ? n - 1 : static_cast<std::size_t>(f);
}

template <class Urbg>
std::size_t folded_normal_index(std::size_t n, Urbg& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  return folded_normal_index(n, std::abs(normal(rng)));
}

struct SelectionContext {
  Requirements requirements;
  RatingWeights weights;
  Position origin;
};

/// Chooses one worker among capable candidates. Recent takes the offer that
/// arrived last, Random is uniform, Best takes the top of the ranking and
/// Spread draws a rank from the folded standard normal.
template <class Urbg>
std::optional<WorkerRating> select(std::span<const KnownOffer> candidates, Strategy strategy,
                                   const SelectionContext& ctx, Urbg& rng) {
  auto capable_offers = capability_filter(candidates, ctx.requirements);
  if (capable_offers.empty()) return std::nullopt;
  auto rated = [&](const KnownOffer& o) {
    return WorkerRating{o.offer.worker,
                        rate(o.offer.capabilities, ctx.requirements, ctx.weights, ctx.origin), o};
  };
  switch (strategy) {
    case Strategy::Recent: {
      auto it = std::min_element(capable_offers.begin(), capable_offers.end(),
                                 [](const KnownOffer& a, const KnownOffer& b) {
                                   if (a.received_at != b.received_at)
                                     return a.received_at > b.received_at;
                                   return a.offer.worker < b.offer.worker;
                                 });
      return rated(*it);
    }
    case Strategy::Random: {
      std::sort(capable_offers.begin(), capable_offers.end(),
                [](const KnownOffer& a, const KnownOffer& b) { return a.offer.worker < b.offer.worker; });
      std::uniform_int_distribution<std::size_t> pick(0, capable_offers.size() - 1);
      return rated(capable_offers[pick(rng)]);
    }
    case Strategy::Best:
      return rank(capable_offers, ctx.requirements, ctx.weights, ctx.origin).front();
    case Strategy::Spread: {
      auto ranked = rank(capable_offers, ctx.requirements, ctx.weights, ctx.origin);
      return ranked[folded_normal_index(ranked.size(), rng)];
    }
  }
  return std::nullopt;
}

}  // namespace oppload::assignment

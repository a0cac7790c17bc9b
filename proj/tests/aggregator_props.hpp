#pragma once

#include <cmath>
#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "veracity/aggregator.hpp"

namespace veracity::testing {

/// Violation counts of the aggregation invariants over fuzzed (p, r) vectors.
struct AggregatorFuzzResult {
  std::size_t cases = 0;
  std::size_t hull = 0;
  std::size_t scale = 0;
  std::size_t monotone = 0;
  std::size_t single = 0;
  std::size_t fallback = 0;

  std::size_t total() const { return hull + scale + monotone + single + fallback; }
};

/// Base weights are drawn in [0, 1/7] so every scaled vector stays in [0, 1].
inline AggregatorFuzzResult fuzz_aggregator(std::size_t n_cases, std::uint64_t seed) {
  constexpr double kScales[] = {0.1, 1.0, 7.0};
  constexpr double kTol = 1e-12;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> size_dist(1, 6);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> weight(0.0, 1.0 / 7.0);
  AggregatorFuzzResult res;
  for (std::size_t c = 0; c < n_cases; ++c) {
    ++res.cases;
    const std::size_t m = size_dist(rng);
    std::vector<WeightedOutput> outs(m);
    for (std::size_t i = 0; i < m; ++i) {
      outs[i].model_id = "m" + std::to_string(i);
      outs[i].p = unit(rng);
      // One in ten weights is exactly zero.
      outs[i].r = unit(rng) < 0.1 ? 0.0 : weight(rng);
    }
    auto base = aggregate(outs);

    double lo = 1.0, hi = 0.0, total = 0.0;
    for (const auto& o : outs) {
      total += o.r;
      if (o.r > 0.0) {
        lo = std::min(lo, o.p);
        hi = std::max(hi, o.p);
      }
    }
    if (total > 0.0 && (base.prob < lo || base.prob > hi)) ++res.hull;

    for (double k : kScales) {
      auto scaled = outs;
      for (auto& o : scaled) o.r *= k;
      if (std::abs(aggregate(scaled).prob - base.prob) > kTol) {
        ++res.scale;
        break;
      }
    }

    const std::size_t j = c % m;
    auto raised = outs;
    raised[j].p = std::min(1.0, outs[j].p + unit(rng) * (1.0 - outs[j].p));
    if (aggregate(raised).prob < base.prob - kTol) ++res.monotone;

    std::vector<WeightedOutput> one{outs[j]};
    one[0].r = std::max(one[0].r, 1e-3);
    auto single = aggregate(one);
    if (single.prob != one[0].p || single.contributions.size() != 1 || single.contributions[0].second != 1.0) {
      ++res.single;
    }

    auto zeroed = outs;
    for (auto& o : zeroed) o.r = 0.0;
    auto z = aggregate(zeroed);
    if (z.prob != 0.5 || !z.insufficient_evidence || !z.contributions.empty()) ++res.fallback;
  }
  return res;
}

}  // namespace veracity::testing

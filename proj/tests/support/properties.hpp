#pragma once

#include <cstddef>
#include <random>

namespace cnnabs::testing {

// One random max constraint b = max(a_0..a_{k-1}), k in 2..5, with random
// finite bounds and a random linear objective over (a, b).
struct TightnessTrial {
  std::size_t k = 0;
  double newOptimum = 0.0;
  double sotaOptimum = 0.0;
  // Objective at the best of `samples` exact points (a in the box, b = max a).
  double sampledMaximum = 0.0;
  // Every box vertex with b = max a satisfies both encodings (slack 1e-6).
  bool verticesInside = true;
};
TightnessTrial maxTightnessTrial(std::mt19937_64& rng, std::size_t samples = 1000);

// Random small CNN, random subset V of a random hidden layer, interval
// bounds over a random box. Each of `points` random inputs in the box must
// (a) give V values inside P_B and (b) reproduce the original outputs when the
// abstract network is fed (x, V values). Returns the number of failed checks.
struct ContainmentTrial {
  std::size_t checks = 0;
  std::size_t violations = 0;
  // Pruned nodes reach no output; kept hidden nodes all do.
  bool prunedSetCorrect = true;
};
ContainmentTrial containmentTrial(std::mt19937_64& rng, std::size_t points);

}  // namespace cnnabs::testing

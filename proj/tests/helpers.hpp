#pragma once

// Battery builders and error assertions shared across the test suites.

#include <functional>
#include <string>
#include <vector>

#include "gvu/battery.hpp"
#include "gvu/error.hpp"
#include "gvu/rng.hpp"

namespace testutil {

// True when fn throws a library error carrying exactly this code.
inline bool fails_with(gvu::ErrorCode code, const std::function<void()>& fn) {
  try {
    fn();
  } catch (const gvu::Error& e) {
    return e.code() == code;
  }
  return false;
}

// One coin-flip task: scores {0,1}, strict threshold 0.5.
inline gvu::Battery bernoulli() {
  gvu::TaskSpec t;
  t.prompt_id = "coin";
  t.scores = {0.0, 1.0};
  t.threshold = 0.5;
  return gvu::Battery({t}, {1.0}, {"base"});
}

// One three-output task with evenly spaced scores.
inline gvu::Battery ladder3() {
  gvu::TaskSpec t;
  t.prompt_id = "ladder";
  t.scores = {0.0, 0.5, 1.0};
  t.threshold = 0.75;
  return gvu::Battery({t}, {1.0}, {"base"});
}

// Two tasks, different sizes and families, non-uniform weights.
inline gvu::Battery mixed() {
  gvu::TaskSpec a;
  a.prompt_id = "alpha";
  a.scores = {0.0, 1.0};
  a.threshold = 0.5;
  gvu::TaskSpec b;
  b.prompt_id = "beta";
  b.scores = {0.1, 0.4, 0.9};
  b.threshold = 0.6;
  return gvu::Battery({a, b}, {0.25, 0.75}, {"fam_a", "fam_b"});
}

// Random battery: `tasks` tasks with 2..max_outputs outputs, scores and
// weights drawn from the stream. Useful for property tests.
inline gvu::Battery random_battery(gvu::Stream& rng, int tasks,
                                   int max_outputs) {
  std::vector<gvu::TaskSpec> specs;
  std::vector<double> weights;
  std::vector<std::string> families;
  for (int t = 0; t < tasks; ++t) {
    gvu::TaskSpec ts;
    ts.prompt_id = "rand_" + std::to_string(t);
    int k = 2 + static_cast<int>(rng.next_u64() %
                                 static_cast<std::uint64_t>(max_outputs - 1));
    for (int y = 0; y < k; ++y) ts.scores.push_back(rng.next_unit());
    ts.threshold = rng.next_unit();
    specs.push_back(ts);
    weights.push_back(0.1 + rng.next_unit());
    families.push_back(t % 2 ? "odd" : "even");
  }
  double sum = 0.0;
  for (double w : weights) sum += w;
  for (double& w : weights) w /= sum;
  return gvu::Battery(specs, weights, families);
}

}  // namespace testutil

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gvu/battery.hpp"
#include "gvu/gvu.hpp"

namespace gvu {

// Resource accounting: one unit per sampled interaction. Updater inner
// iterations are free.
struct BudgetLedger {
  std::uint64_t total = 0;
  std::uint64_t consumed = 0;

  bool can_afford(std::uint64_t cost) const { return consumed + cost <= total; }
  void charge(std::uint64_t cost);
};

struct Checkpoint {
  std::uint64_t consumed = 0;
  double capability = 0.0;           // exact
  double strict_rate = 0.0;          // exact
  std::vector<double> family_capability;  // conditional capability per family
  std::string flags;                 // ';'-joined events, empty when clean
  Theta theta;                       // state snapshot for later diagnostics
  double goodhart_c = 1.0;           // verifier alignment at this point
};

struct Trajectory {
  std::vector<std::string> family_labels;
  std::vector<double> family_weight;  // battery mass per family
  std::vector<Checkpoint> checkpoints;
};

// Iterate gvu_step until the next step would exceed the budget. Checkpoints
// are written at step 0, every checkpoint_every steps, and after the final
// step. A NumericalOverflow inside a step ends the run with a flagged final
// checkpoint instead of propagating. step_log, when given, receives every
// step record in order.
Trajectory run_trajectory(const Battery& b, const Theta& theta0,
                          VerifierSpec vspec, const UpdaterSpec& uspec, int n,
                          std::uint64_t budget, int checkpoint_every,
                          Stream& rng, std::vector<StepRecord>* step_log = nullptr);

// (final capability - initial capability) / consumed. Requires at least two
// checkpoints and nonzero consumption.
double kappa_hat(const Trajectory& traj);

struct KappaPoint {
  std::uint64_t consumed = 0;  // window-end consumption
  double kappa = 0.0;          // capability slope over the window
  std::uint64_t span = 0;      // consumption covered by the window
};

// Sliding-window finite differences across checkpoints; window >= 2 and at
// most the checkpoint count. Yields checkpoints - window + 1 points.
std::vector<KappaPoint> kappa_curve(const Trajectory& traj, int window);

}  // namespace gvu

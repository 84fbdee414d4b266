#include "gvu/kappa.hpp"

#include <algorithm>
#include <cmath>

namespace gvu {

void BudgetLedger::charge(std::uint64_t cost) {
  if (!can_afford(cost))
    fail(ErrorCode::ValidationError, "budget ledger: charge exceeds budget");
  consumed += cost;
}

namespace {

Checkpoint make_checkpoint(const Battery& b, const Theta& theta,
                           std::uint64_t consumed,
                           const std::vector<std::string>& labels,
                           const std::vector<double>& label_weight,
                           double goodhart_c, std::string flags) {
  Checkpoint cp{consumed,
                capability_exact(b, theta),
                strict_success_rate(b, theta),
                {},
                std::move(flags),
                theta,
                goodhart_c};
  // Conditional capability per family; weighting the entries by family mass
  // recovers the total exactly.
  std::vector<double> q = per_task_quality(b, theta);
  cp.family_capability.assign(labels.size(), 0.0);
  for (int t = 0; t < b.task_count(); ++t) {
    for (size_t f = 0; f < labels.size(); ++f) {
      if (b.family(t) == labels[f]) {
        cp.family_capability[f] += b.weight(t) * q[static_cast<size_t>(t)];
        break;
      }
    }
  }
  for (size_t f = 0; f < labels.size(); ++f)
    if (label_weight[f] > 0.0) cp.family_capability[f] /= label_weight[f];
  return cp;
}

}  // namespace

Trajectory run_trajectory(const Battery& b, const Theta& theta0,
                          VerifierSpec vspec, const UpdaterSpec& uspec, int n,
                          std::uint64_t budget, int checkpoint_every,
                          Stream& rng, std::vector<StepRecord>* step_log) {
  vspec.validate();
  uspec.validate();
  if (n < 1) fail(ErrorCode::ValidationError, "run_trajectory: n < 1");
  if (checkpoint_every < 1)
    fail(ErrorCode::ValidationError, "run_trajectory: checkpoint_every < 1");

  Trajectory traj;
  traj.family_labels = b.family_labels();
  traj.family_weight.assign(traj.family_labels.size(), 0.0);
  for (int t = 0; t < b.task_count(); ++t)
    for (size_t f = 0; f < traj.family_labels.size(); ++f)
      if (b.family(t) == traj.family_labels[f]) {
        traj.family_weight[f] += b.weight(t);
        break;
      }

  BudgetLedger ledger{budget, 0};
  Theta theta = theta0;
  traj.checkpoints.push_back(make_checkpoint(b, theta, 0, traj.family_labels,
                                             traj.family_weight,
                                             vspec.goodhart_c, ""));

  int step = 0;
  bool overflowed = false;
  std::string overflow_flag;
  while (!overflowed && ledger.can_afford(static_cast<std::uint64_t>(n))) {
    bool nonconv = false;
    try {
      auto [next, rec] = gvu_step(b, theta, n, vspec, uspec, rng);
      ledger.charge(rec.consumed);
      theta = std::move(next);
      nonconv = !rec.converged;
      if (step_log) step_log->push_back(std::move(rec));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NumericalOverflow) throw;
      // A step that left the logit bound ends the run; the sampling cost was
      // already incurred.
      ledger.charge(static_cast<std::uint64_t>(n));
      overflowed = true;
      overflow_flag = "overflow";
    }
    ++step;
    if (overflowed || step % checkpoint_every == 0 ||
        !ledger.can_afford(static_cast<std::uint64_t>(n))) {
      std::string flags = overflowed ? overflow_flag : "";
      if (nonconv) flags = flags.empty() ? "nonconverged" : flags + ";nonconverged";
      traj.checkpoints.push_back(make_checkpoint(
          b, theta, ledger.consumed, traj.family_labels, traj.family_weight,
          vspec.goodhart_c, std::move(flags)));
    }
  }
  return traj;
}

double kappa_hat(const Trajectory& traj) {
  if (traj.checkpoints.size() < 2)
    fail(ErrorCode::EmptyTrajectory, "kappa_hat: fewer than two checkpoints");
  const Checkpoint& first = traj.checkpoints.front();
  const Checkpoint& last = traj.checkpoints.back();
  if (last.consumed == first.consumed)
    fail(ErrorCode::EmptyTrajectory, "kappa_hat: no consumption");
  return (last.capability - first.capability) /
         static_cast<double>(last.consumed - first.consumed);
}

std::vector<KappaPoint> kappa_curve(const Trajectory& traj, int window) {
  if (window < 2)
    fail(ErrorCode::ValidationError, "kappa_curve: window must be >= 2");
  const int c = static_cast<int>(traj.checkpoints.size());
  if (window > c)
    fail(ErrorCode::WindowTooLarge, "kappa_curve: window exceeds checkpoints");
  std::vector<KappaPoint> curve;
  curve.reserve(static_cast<size_t>(c - window + 1));
  for (int i = 0; i + window <= c; ++i) {
    const Checkpoint& a = traj.checkpoints[static_cast<size_t>(i)];
    const Checkpoint& z = traj.checkpoints[static_cast<size_t>(i + window - 1)];
    std::uint64_t span = z.consumed - a.consumed;
    if (span == 0)
      fail(ErrorCode::EmptyTrajectory, "kappa_curve: zero-consumption window");
    curve.push_back({z.consumed,
                     (z.capability - a.capability) / static_cast<double>(span),
                     span});
  }
  return curve;
}

}  // namespace gvu

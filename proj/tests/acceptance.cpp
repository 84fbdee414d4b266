// Acceptance gate: one self-contained check per release criterion, each
// printed as a single [PASS]/[FAIL] line with the measured numbers. Every
// check draws from fixed seeds, so a green run is reproducible bit for bit.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gvu/battery.hpp"
#include "gvu/diagnostics.hpp"
#include "gvu/emit.hpp"
#include "gvu/gvu.hpp"
#include "gvu/kappa.hpp"
#include "gvu/manifold.hpp"
#include "gvu/representation.hpp"
#include "gvu/rng.hpp"
#include "helpers.hpp"

namespace {

using gvu::Battery;
using gvu::PolicyShape;
using gvu::Stream;
using gvu::Tangent;
using gvu::TaskSpec;
using gvu::Theta;
using gvu::UpdaterMode;
using gvu::UpdaterSpec;
using gvu::VerifierKind;
using gvu::VerifierSpec;

struct Crit {
  bool ok = false;
  std::string detail;
};

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

double ols_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    num += (x[i] - mx) * (y[i] - my);
    den += (x[i] - mx) * (x[i] - mx);
  }
  return num / den;
}

struct MeanErr {
  double mean = 0.0;
  double se = 0.0;
};

// Mean exact capability change of one reinforce step, replicated over
// independent child streams of `base`.
MeanErr measure_gain(const Battery& b, const Theta& theta0,
                     const VerifierSpec& vspec, double eta, int n,
                     int replicas, const Stream& base) {
  double f0 = gvu::capability_exact(b, theta0);
  UpdaterSpec u;
  u.mode = UpdaterMode::Reinforce;
  u.eta = eta;
  double sum = 0.0, sum2 = 0.0;
  for (int r = 0; r < replicas; ++r) {
    VerifierSpec vs = vspec;
    Stream s = base.child(static_cast<std::uint64_t>(r));
    auto [th, rec] = gvu::gvu_step(b, theta0, n, vs, u, s);
    double df = gvu::capability_exact(b, th) - f0;
    sum += df;
    sum2 += df * df;
  }
  double m = sum / replicas;
  double var = std::max(0.0, (sum2 - replicas * m * m) / (replicas - 1.0));
  return {m, std::sqrt(var / replicas)};
}

struct StepBound {
  double curvature = 0.0;
  double eta_max = 0.0;
};

// Curvature probed along where one step can actually land: collect unit-step
// displacements, then iterate the probe range and the step bound until they
// agree. The bound uses the decomposition measured at theta0.
StepBound scan_step_bound(const Battery& b, const Theta& theta0,
                          const VerifierSpec& vspec, int n,
                          const gvu::DecompositionReport& dec, Stream& rng) {
  PolicyShape shape = PolicyShape::of(b);
  std::vector<Eigen::VectorXd> disp;
  UpdaterSpec unit;
  unit.mode = UpdaterMode::Reinforce;
  unit.eta = 1.0;
  for (int tries = 0; static_cast<int>(disp.size()) < 8 && tries < 400;
       ++tries) {
    VerifierSpec vs = vspec;
    Stream s = rng.fork();
    auto [th, rec] = gvu::gvu_step(b, theta0, n, vs, unit, s);
    Eigen::VectorXd d = th.coords() - theta0.coords();
    if (d.norm() > 1e-12) disp.push_back(std::move(d));
  }
  double curv = gvu::estimate_curvature(b, theta0, 16, 1e-3, rng);
  double eta_c = 0.5;
  for (int it = 0; it < 3; ++it) {
    for (const auto& d : disp)
      for (double f : {0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875, 1.0}) {
        Eigen::VectorXd x = theta0.coords() + (f * eta_c) * d;
        x = x.cwiseMax(-50.0).cwiseMin(50.0);
        curv = std::max(curv,
                        gvu::estimate_curvature(b, Theta(shape, x), 16, 1e-3,
                                                rng));
      }
    eta_c = std::min(gvu::eta_max(dec.rho, dec.g_star_norm2, dec.sigma_g2,
                                  dec.sigma_v2, curv),
                     100.0);
  }
  return {curv, eta_c};
}

Battery one_task(std::vector<double> scores) {
  TaskSpec t;
  t.prompt_id = "t0";
  t.scores = std::move(scores);
  t.threshold = 0.5;
  return Battery({t}, {1.0}, {"all"});
}

// 01: the policy's own expected score vector is zero and the exact
// capability gradient matches central finite differences.
Crit crit_score_identity() {
  Stream rng(1101);
  double worst_mean = 0.0, worst_grad = 0.0;
  for (int i = 0; i < 1000; ++i) {
    Battery b = testutil::random_battery(rng, 1 + i % 4, 5);
    PolicyShape shape = PolicyShape::of(b);
    Theta theta = Theta::uniform(shape, 1.5, rng);

    Tangent mean = Tangent::zeros(shape);
    for (int t = 0; t < b.task_count(); ++t) {
      Eigen::VectorXd p = gvu::policy_probs(theta, t);
      for (int y = 0; y < p.size(); ++y) {
        Tangent s = gvu::score_function(theta, {t, y});
        mean += (b.weight(t) * p[y]) * s;
      }
    }
    worst_mean = std::max(worst_mean, mean.inf_norm());

    Tangent grad = gvu::grad_capability_exact(b, theta);
    const double h = 1e-5;
    for (int j = 0; j < shape.dim; ++j) {
      Eigen::VectorXd xp = theta.coords(), xm = theta.coords();
      xp[j] += h;
      xm[j] -= h;
      double fd = (gvu::capability_exact(b, Theta(shape, xp)) -
                   gvu::capability_exact(b, Theta(shape, xm))) /
                  (2.0 * h);
      worst_grad = std::max(worst_grad, std::abs(fd - grad.coords()[j]));
    }
  }
  bool ok = worst_mean <= 1e-12 && worst_grad <= 1e-7;
  return {ok, "max |E[s]|=" + fmt(worst_mean) +
                  ", max grad dev=" + fmt(worst_grad) + " over 1000 instances"};
}

// 02: tabulating the implied potential of a tangent and re-taking the
// expected weighted update reproduces the tangent.
Crit crit_representation_roundtrip() {
  Stream rng(1202);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    Battery b = testutil::random_battery(rng, 1 + i % 4, 5);
    PolicyShape shape = PolicyShape::of(b);
    Theta theta = Theta::uniform(shape, 1.0, rng);
    Eigen::VectorXd raw(shape.dim);
    for (int j = 0; j < shape.dim; ++j) raw[j] = rng.next_normal();
    Tangent v(shape, raw / raw.norm());

    gvu::PotentialTable table = gvu::implied_potential(b, theta, v, 0.0);
    Tangent back = gvu::reconstruct_field(b, theta, table);
    worst = std::max(worst, (back - v).norm());
  }
  return {worst <= 1e-10,
          "max roundtrip err=" + fmt(worst) + " over 100 unit fields"};
}

// 03: under a constant potential the mean reinforce update is statistical
// zero at 10^4 replicas.
Crit crit_verifier_necessity() {
  Stream rng(1303);
  double worst_ratio = 0.0;
  for (int i = 0; i < 20; ++i) {
    Battery b = testutil::random_battery(rng, 1 + i % 3, 4);
    Theta theta = Theta::uniform(PolicyShape::of(b), 1.0, rng);
    gvu::NecessityProbe probe =
        gvu::necessity_probe(b, theta, 0.7, 16, 10000, rng);
    if (probe.stderror <= 0.0) return {false, "degenerate stderr"};
    worst_ratio = std::max(worst_ratio, probe.mean_norm / probe.stderror);
  }
  return {worst_ratio <= 4.0,
          "max ||mean||/stderr=" + fmt(worst_ratio) + " over 20 instances"};
}

// 04: averaging independent judges shrinks verifier noise like 1/M.
Crit crit_ensemble_scaling() {
  Battery b = testutil::bernoulli();
  Theta theta0 = Theta::zeros(PolicyShape::of(b));
  std::vector<double> lx, ly;
  for (int m : {1, 2, 4, 8, 16}) {
    VerifierSpec vs;
    vs.kind = VerifierKind::Ensemble;
    vs.tau = 0.5;
    vs.judges = m;
    Stream rng(gvu::derive_seed(1404, static_cast<std::uint64_t>(m)));
    gvu::DecompositionReport dec = gvu::decompose(b, theta0, vs, 16, 1000, rng);
    lx.push_back(std::log(static_cast<double>(m)));
    ly.push_back(std::log(dec.sigma_v2));
  }
  double slope = ols_slope(lx, ly);
  return {std::abs(slope + 1.0) <= 0.1,
          "log-log slope=" + fmt(slope) + " (want -1 +/- 0.1)"};
}

// 05: group-normalized advantages shrink the squared update like 1/G.
// Rewards are synthetic standard normals so every group has spread and the
// advantage vector has exact unit population variance.
Crit crit_group_scaling() {
  Battery b = testutil::bernoulli();
  PolicyShape shape = PolicyShape::of(b);
  Theta theta0 = Theta::zeros(shape);
  std::vector<double> lx, ly;
  for (int g : {2, 4, 8, 16, 32}) {
    Stream gs(gvu::derive_seed(1505, static_cast<std::uint64_t>(g)));
    double acc = 0.0;
    const int replicas = 4000;
    for (int r = 0; r < replicas; ++r) {
      Stream s = gs.child(static_cast<std::uint64_t>(r));
      std::vector<int> outputs(g);
      Eigen::VectorXd rewards(g);
      for (int i = 0; i < g; ++i) {
        outputs[i] = gvu::sample_output(theta0, 0, s);
        rewards[i] = s.next_normal();
      }
      Eigen::VectorXd adv =
          gvu::group_normalize(rewards, std::vector<int>(g, 0), 0.0);
      Tangent ghat = Tangent::zeros(shape);
      for (int i = 0; i < g; ++i)
        ghat += adv[i] * gvu::score_function(theta0, {0, outputs[i]});
      ghat *= 1.0 / g;
      acc += ghat.norm() * ghat.norm();
    }
    lx.push_back(std::log(static_cast<double>(g)));
    ly.push_back(std::log(acc / replicas));
  }
  double slope = ols_slope(lx, ly);
  return {std::abs(slope + 1.0) <= 0.15,
          "log-log slope=" + fmt(slope) + " (want -1 +/- 0.15)"};
}

// 06: on the coin battery with verifier noise matched to generation noise,
// the predicted sign of the one-step gain agrees with measurement at every
// step size where the prediction clears 4 standard errors.
Crit crit_inequality_prediction() {
  Battery b = testutil::bernoulli();
  Theta theta0 = Theta::zeros(PolicyShape::of(b));
  VerifierSpec vs;
  vs.kind = VerifierKind::Noisy;
  vs.tau = 0.5;  // equal verifier and generation noise here
  Stream rng(1606);
  gvu::DecompositionReport dec = gvu::decompose(b, theta0, vs, 16, 4000, rng);
  StepBound bound = scan_step_bound(b, theta0, vs, 16, dec, rng);

  int gated = 0;
  int mismatched = 0;
  for (int i = 1; i <= 12; ++i) {
    double eta = bound.eta_max * i / 12.0;
    gvu::InequalityReport rep =
        gvu::check_inequality(dec.rho, dec.g_star_norm2, dec.sigma_g2,
                              dec.sigma_v2, bound.curvature, eta);
    double predicted = eta * (rep.lhs - rep.rhs);
    MeanErr got = measure_gain(
        b, theta0, vs, eta, 16, 10000,
        Stream(gvu::derive_seed(1607, static_cast<std::uint64_t>(i))));
    if (std::abs(predicted) > 4.0 * got.se) {
      ++gated;
      bool sign_match = (got.mean > 0.0) == rep.holds &&
                        (got.mean > 0.0) == (predicted > 0.0);
      if (!sign_match) ++mismatched;
    }
  }
  bool ok = gated >= 1 && mismatched == 0;
  return {ok, "eta_max=" + fmt(bound.eta_max) + ", gated points=" +
                  std::to_string(gated) + "/12, sign mismatches=" +
                  std::to_string(mismatched)};
}

// 07: with an exact verifier the one-step gain stays positive (>= 4 stderr)
// across a window of step sizes below the predicted bound.
Crit crit_oracle_window() {
  // Sixteen outputs, one carrying all the score: single-draw generation is
  // noisy, yet the exact verifier keeps every sub-threshold step profitable.
  std::vector<double> scores(16, 0.0);
  scores[1] = 1.0;
  Battery b = one_task(scores);
  Theta theta0 = Theta::zeros(PolicyShape::of(b));

  VerifierSpec oracle;
  Stream rng(1707);
  gvu::DecompositionReport dec = gvu::decompose(b, theta0, oracle, 1, 4000, rng);
  StepBound bound = scan_step_bound(b, theta0, oracle, 1, dec, rng);

  std::ostringstream detail;
  detail << "eta_max=" << fmt(bound.eta_max);
  bool ok = true;
  for (double frac : {0.1, 0.25, 0.5}) {
    MeanErr got = measure_gain(
        b, theta0, oracle, frac * bound.eta_max, 1, 10000,
        Stream(gvu::derive_seed(1708, static_cast<std::uint64_t>(100 * frac))));
    bool point_ok = got.mean > 0.0 && got.mean >= 4.0 * got.se;
    ok = ok && point_ok;
    detail << ", gain(" << fmt(frac) << ")=" << fmt(got.mean) << "+/-"
           << fmt(got.se);
  }
  return {ok, detail.str()};
}

// 08: matching the verifier noise to the generation noise collapses the gain
// at a step size where an exact verifier still improves. The battery is a
// graded coin whose scores sit on a large constant offset: the offset carries
// no usable signal but dominates the update variance, so the capability
// gradient is small relative to the noise and the matched-noise penalty term
// genuinely doubles. The step is 0.9x the largest safe step computed as if
// the verifier noise were zero; the exact verifier must clear the oracle
// window test at that same step while the matched-noise run must not gain.
Crit crit_barrier() {
  Battery b = one_task({0.45, 0.55});
  PolicyShape shape = PolicyShape::of(b);
  // Start where the output law bends hardest, so curvature probes along the
  // step ensemble see a homogeneous Hessian scale.
  Eigen::VectorXd x0 =
      Eigen::VectorXd::Constant(shape.dim, std::log(2.0 + std::sqrt(3.0)));
  Theta theta0(shape, x0);
  const int n = 2;

  Stream rng(1808);
  VerifierSpec probe;
  probe.kind = VerifierKind::Noisy;
  probe.tau = 1.0;
  gvu::DecompositionReport d1 = gvu::decompose(b, theta0, probe, n, 16000, rng);
  double tau = std::sqrt(d1.sigma_g2 / d1.sigma_v2);  // sigma_v2 scales as tau^2

  VerifierSpec matched = probe;
  matched.tau = tau;
  gvu::DecompositionReport d2 = gvu::decompose(b, theta0, matched, n, 16000, rng);
  double ratio = d2.sigma_v2 / d2.sigma_g2;
  if (ratio < 0.8 || ratio > 1.25) {
    matched.tau = tau / std::sqrt(ratio);
    d2 = gvu::decompose(b, theta0, matched, n, 16000, rng);
    ratio = d2.sigma_v2 / d2.sigma_g2;
  }
  if (ratio < 0.8 || ratio > 1.25)
    return {false, "noise matching failed, ratio=" + fmt(ratio)};

  // Step bound as if the verifier were exact, from the same measured state.
  gvu::DecompositionReport pretend = d2;
  pretend.sigma_v2 = 0.0;
  StepBound bound = scan_step_bound(b, theta0, matched, n, pretend, rng);
  double eta_star = 0.9 * bound.eta_max;

  VerifierSpec oracle;
  MeanErr ora =
      measure_gain(b, theta0, oracle, eta_star, n, 50000, Stream(1809));
  MeanErr noi =
      measure_gain(b, theta0, matched, eta_star, n, 50000, Stream(1810));
  bool oracle_ok = ora.mean > 0.0 && ora.mean >= 4.0 * ora.se;
  bool noisy_ok = noi.mean <= 2.0 * noi.se;
  std::ostringstream detail;
  detail << "eta*=" << fmt(eta_star) << ", tau=" << fmt(matched.tau)
         << ", noise ratio=" << fmt(ratio) << ", oracle gain=" << fmt(ora.mean)
         << "+/-" << fmt(ora.se) << ", matched gain=" << fmt(noi.mean) << "+/-"
         << fmt(noi.se);
  if (!oracle_ok) detail << " [oracle arm below 4 stderr]";
  return {oracle_ok && noisy_ok, detail.str()};
}

// 09: quartering the verifier's temperature ratio cuts its noise variance
// sixteenfold.
Crit crit_cold_verifier() {
  Battery b = testutil::bernoulli();
  Theta theta0 = Theta::zeros(PolicyShape::of(b));
  VerifierSpec hot;
  hot.kind = VerifierKind::Cold;
  hot.tau = 0.5;
  hot.temp_ratio = 1.0;
  VerifierSpec cold = hot;
  cold.temp_ratio = 0.25;

  // Identical seeds pair the batches and the raw noise draws, so the ratio
  // isolates the temperature factor.
  Stream s1(1909), s2(1909);
  gvu::DecompositionReport dh = gvu::decompose(b, theta0, hot, 16, 2000, s1);
  gvu::DecompositionReport dc = gvu::decompose(b, theta0, cold, 16, 2000, s2);
  double shrink = dh.sigma_v2 / dc.sigma_v2;
  return {std::abs(shrink / 16.0 - 1.0) <= 0.2,
          "variance shrink=" + fmt(shrink) + "x (want 16x +/- 20%)"};
}

// 10: under a proxy potential whose alignment decays with parameter travel,
// the capability slope crosses from positive to non-positive, and the
// measured alignment at the crossing lands within a factor 3 of the
// predicted break-even alignment.
Crit crit_goodhart_crossing() {
  // Four graded coins staggered below the logistic curvature knee. The small
  // score spread over a large constant offset keeps update noise high
  // relative to the capability gradient, which makes the break-even
  // alignment a sizable target instead of a sliver near zero; the staggered
  // starts keep some coin in the bending zone throughout the sweep.
  std::vector<TaskSpec> tasks(4);
  std::vector<double> weights(4, 0.25);
  std::vector<std::string> families(4, "all");
  for (int t = 0; t < 4; ++t) {
    tasks[static_cast<size_t>(t)].prompt_id = "g" + std::to_string(t);
    tasks[static_cast<size_t>(t)].scores = {0.4, 0.6};
    tasks[static_cast<size_t>(t)].threshold = 0.5;
  }
  Battery b(tasks, weights, families);
  PolicyShape shape = PolicyShape::of(b);
  const double stagger[4] = {-1.8, -1.32, -0.9, -0.55};
  Eigen::VectorXd x0(shape.dim);
  for (int t = 0; t < 4; ++t) x0[t] = stagger[t];
  Theta theta0(shape, x0);

  // Junk table whose favorite on every coin is the low-score output, so
  // spent alignment turns the drive actively harmful instead of neutral.
  std::uint64_t junk_seed = 0;
  bool found = false;
  for (std::uint64_t seed = 0; seed < 4000 && !found; ++seed) {
    auto table = gvu::junk_table(b, seed);
    bool anti = true;
    for (int t = 0; t < 4; ++t)
      if (table[static_cast<size_t>(t)][0] - table[static_cast<size_t>(t)][1] <
          0.35)
        anti = false;
    if (anti) {
      junk_seed = seed;
      found = true;
    }
  }
  if (!found) return {false, "no junk table favoring low-score outputs"};

  VerifierSpec vs;
  vs.kind = VerifierKind::Goodhart;
  vs.gamma = 0.001;  // slow decay sweeps the crossing gently
  vs.junk_seed = junk_seed;
  UpdaterSpec u;
  u.mode = UpdaterMode::Reinforce;
  u.eta = 0.75;

  Stream rng(2010);
  gvu::Trajectory traj = gvu::run_trajectory(b, theta0, vs, u, 1, 80000, 8, rng);
  // A wide sliding window keeps slope estimates clear of single-step noise,
  // so the first non-positive point is the real crossing, not a dip.
  std::vector<gvu::KappaPoint> curve = gvu::kappa_curve(traj, 64);
  if (curve.empty() || curve.front().kappa <= 0.0)
    return {false, "slope not positive at the start"};

  int cross = -1;
  for (size_t i = 0; i < curve.size(); ++i)
    if (curve[i].kappa <= 0.0) {
      cross = static_cast<int>(i);
      break;
    }
  if (cross < 0) return {false, "no crossing within budget"};

  const gvu::Checkpoint& cp = traj.checkpoints[static_cast<size_t>(cross)];
  VerifierSpec frozen = vs;
  frozen.goodhart_c = cp.goodhart_c;
  try {
    gvu::DecompositionReport dec =
        gvu::decompose(b, cp.theta, frozen, 1, 20000, rng);
    double curv = gvu::estimate_curvature(b, cp.theta, 16, 1e-3, rng);
    double rc = gvu::rho_crit(u.eta, curv, dec.sigma_g2, dec.sigma_v2,
                              dec.g_star_norm2);
    bool ok = dec.rho > 0.0 && rc > 0.0 && dec.rho >= rc / 3.0 &&
              dec.rho <= rc * 3.0;
    return {ok, "crossing at consumed=" + std::to_string(cp.consumed) +
                    ", c=" + fmt(cp.goodhart_c) + ", rho=" + fmt(dec.rho) +
                    ", rho_crit=" + fmt(rc)};
  } catch (const std::exception& e) {
    return {false, std::string("diagnostics failed at crossing: ") + e.what()};
  }
}

// 11: a potential drawn independently of the score makes the top-alpha /
// bottom-beta overlap factorize to alpha*beta.
Crit crit_slop_calibration() {
  // Many distinct score atoms keep the empirical beta-quantile sharp.
  std::vector<TaskSpec> tasks;
  std::vector<double> weights;
  std::vector<std::string> families;
  const int T = 64, K = 5;
  for (int t = 0; t < T; ++t) {
    TaskSpec ts;
    ts.prompt_id = "q" + std::to_string(t);
    for (int y = 0; y < K; ++y)
      ts.scores.push_back((t * K + y + 0.5) / (T * K));
    ts.threshold = 0.5;
    tasks.push_back(ts);
    weights.push_back(1.0 / T);
    families.push_back("all");
  }
  Battery b(tasks, weights, families);
  Theta theta0 = Theta::zeros(PolicyShape::of(b));

  VerifierSpec vs;
  vs.kind = VerifierKind::Constant;
  vs.const_value = 0.0;
  vs.tau = 1.0;  // potential is pure noise, independent of the score

  const int n = 10000;
  double worst_sigmas = 0.0;
  int i = 0;
  for (double alpha : {0.05, 0.1, 0.2})
    for (double beta : {0.05, 0.1, 0.2}) {
      Stream rng(gvu::derive_seed(2111, static_cast<std::uint64_t>(i++)));
      gvu::SlopReport rep = gvu::slop(b, theta0, vs, alpha, beta, n, rng);
      double want = alpha * beta;
      double sigma = std::sqrt(want * (1.0 - want) / n);
      worst_sigmas =
          std::max(worst_sigmas, std::abs(rep.slop_mass - want) / sigma);
    }
  return {worst_sigmas <= 6.0,
          "max |mass - ab| = " + fmt(worst_sigmas) + " sigma over 9 grids"};
}

// 12: the training loop is bitwise reproducible, and on the coin battery the
// checkpointed capability tracks the closed-form ascent curve; solving
// 2*theta + 2*sinh(theta) = eta * steps inverts the expected flow.
Crit crit_protocol_oracle() {
  Battery b = testutil::bernoulli();
  Theta theta0 = Theta::zeros(PolicyShape::of(b));
  VerifierSpec oracle;
  UpdaterSpec u;
  u.mode = UpdaterMode::Reinforce;
  u.eta = 0.02;
  const int n = 1000;
  const std::uint64_t budget = 1000000;

  Stream r1(2212), r2(2212);
  gvu::Trajectory t1 =
      gvu::run_trajectory(b, theta0, oracle, u, n, budget, 50, r1);
  gvu::Trajectory t2 =
      gvu::run_trajectory(b, theta0, oracle, u, n, budget, 50, r2);
  if (gvu::trajectory_csv(t1) != gvu::trajectory_csv(t2))
    return {false, "same-seed reruns differ"};
  if (!(t1.checkpoints.back().theta.coords() ==
        t2.checkpoints.back().theta.coords()))
    return {false, "same-seed final states differ"};

  auto invert = [](double m) {
    double th = std::asinh(m / 2.0);
    for (int i = 0; i < 60; ++i) {
      double step = (2.0 * th + 2.0 * std::sinh(th) - m) /
                    (2.0 + 2.0 * std::cosh(th));
      th -= step;
      if (std::abs(step) < 1e-13) break;
    }
    return th;
  };

  double worst_rel = 0.0;
  for (const auto& cp : t1.checkpoints) {
    double m = u.eta * static_cast<double>(cp.consumed) / n;
    double predicted = 1.0 / (1.0 + std::exp(-invert(m)));
    worst_rel =
        std::max(worst_rel, std::abs(cp.capability - predicted) / predicted);
  }
  double f_final = t1.checkpoints.back().capability;
  bool ok = f_final >= 0.9 && worst_rel <= 0.05;
  return {ok, "final F=" + fmt(f_final) + ", max checkpoint dev=" +
                  fmt(worst_rel * 100.0) + "% of predicted"};
}

}  // namespace

int main() {
  struct Entry {
    const char* label;
    Crit result;
  };
  std::vector<Entry> entries;

  entries.push_back({"01 zero-mean score and exact gradient vs finite diff",
                     crit_score_identity()});
  entries.push_back(
      {"02 potential table reconstructs its tangent field",
       crit_representation_roundtrip()});
  entries.push_back(
      {"03 constant potential gives a statistically zero update",
       crit_verifier_necessity()});
  entries.push_back(
      {"04 judge averaging shrinks verifier noise like 1/M",
       crit_ensemble_scaling()});
  entries.push_back(
      {"05 group normalization shrinks squared updates like 1/G",
       crit_group_scaling()});
  entries.push_back(
      {"06 predicted gain sign matches measurement across step sizes",
       crit_inequality_prediction()});

  entries.push_back(
      {"07 exact verifier keeps a positive-gain step window",
       crit_oracle_window()});
  entries.push_back(
      {"08 noise-matched verifier collapses the gain where the oracle succeeds",
       crit_barrier()});
  entries.push_back(
      {"09 quartered verifier temperature shrinks noise sixteenfold",
       crit_cold_verifier()});
  entries.push_back(
      {"10 drifting proxy crosses to negative slope near predicted alignment",
       crit_goodhart_crossing()});
  entries.push_back(
      {"11 independent potential factorizes the slop mass",
       crit_slop_calibration()});
  entries.push_back(
      {"12 reproducible trajectories matching the closed-form ascent",
       crit_protocol_oracle()});

  int passed = 0;
  for (const auto& e : entries) {
    std::printf("[%s] %s (%s)\n", e.result.ok ? "PASS" : "FAIL", e.label,
                e.result.detail.c_str());
    if (e.result.ok) ++passed;
  }
  std::printf("acceptance: %d/%d criteria passed\n", passed,
              static_cast<int>(entries.size()));
  return passed == static_cast<int>(entries.size()) ? 0 : 1;
}

#include "gvu/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gvu/parallel.hpp"

namespace gvu {

namespace {

// Infinite signal-to-noise carries no finite variance; reports encode it as
// the largest finite double so serialized fields stay finite.
constexpr double kSnrSentinel = std::numeric_limits<double>::max();

double snr_of(double signal, double noise) {
  return noise > 0.0 ? signal / noise : kSnrSentinel;
}

// Reinforce estimator for one replica batch under the given potentials.
Eigen::VectorXd reinforce_estimate(const Theta& theta, const Batch& batch,
                                   const Eigen::VectorXd& pot) {
  const PolicyShape& s = theta.shape();
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(s.dim);
  for (int i = 0; i < batch.size(); ++i) {
    const Interaction& it = batch.items[static_cast<size_t>(i)];
    Eigen::VectorXd p = policy_probs(theta, it.task);
    int off = s.offset[static_cast<size_t>(it.task)];
    int blk = s.block_size(it.task);
    acc.segment(off, blk) -= pot[i] * p.tail(blk);
    if (it.output >= 1) acc[off + it.output - 1] += pot[i];
  }
  return acc / static_cast<double>(batch.size());
}

}  // namespace

DecompositionReport DecompositionReport::make(double rho, double sigma_g2,
                                              double sigma_v2, double bias_norm,
                                              double g_star_norm2,
                                              double fisher_angle,
                                              int replicas) {
  DecompositionReport r;
  r.rho = rho;
  r.sigma_g2 = sigma_g2;
  r.sigma_v2 = sigma_v2;
  r.bias_norm = bias_norm;
  r.g_star_norm2 = g_star_norm2;
  r.snr_g = snr_of(g_star_norm2, sigma_g2);
  r.snr_v = snr_of(g_star_norm2, sigma_v2);
  r.fisher_angle = fisher_angle;
  r.replicas = replicas;
  if (!(rho >= -1.5 && rho <= 1.5))
    fail(ErrorCode::NumericFailure,
         "decomposition: alignment estimate outside [-1.5, 1.5]");
  return r;
}

DecompositionReport decompose(const Battery& b, const Theta& theta,
                              const VerifierSpec& vspec, int n, int replicas,
                              Stream& rng) {
  vspec.validate();
  if (n < 1) fail(ErrorCode::ValidationError, "decompose: n < 1");
  if (replicas < 2) fail(ErrorCode::ValidationError, "decompose: replicas < 2");

  Tangent gstar = grad_capability_exact(b, theta);
  double gnorm = gstar.norm();
  if (gnorm < 1e-10)
    fail(ErrorCode::DegenerateGradient,
         "decompose: capability gradient below 1e-10");
  double g2 = gnorm * gnorm;

  const PolicyShape& shape = theta.shape();
  Stream base = rng.fork();
  std::vector<Eigen::VectorXd> ghat_v(static_cast<size_t>(replicas));
  std::vector<Eigen::VectorXd> ghat_o(static_cast<size_t>(replicas));

  // Paired scoring: each replica's batch is evaluated with the configured
  // verifier and with the oracle, so the verifier split below uses common
  // random numbers and vanishes identically for the oracle kind.
  replica_for(static_cast<size_t>(replicas), [&](size_t r) {
    Stream local = base.child(static_cast<std::uint64_t>(r));
    Batch batch = generate(b, theta, n, local);
    Eigen::VectorXd pot_v = potential(vspec, b, theta, batch, local);
    Batch oracle_batch = batch;
    Eigen::VectorXd pot_o(batch.size());
    for (int i = 0; i < batch.size(); ++i)
      pot_o[i] = external_score(b, oracle_batch.items[static_cast<size_t>(i)]);
    ghat_v[r] = reinforce_estimate(theta, batch, pot_v);
    ghat_o[r] = reinforce_estimate(theta, batch, pot_o);
  });

  // Serial reduction in replica order keeps results thread-count independent.
  Eigen::VectorXd vbar = Eigen::VectorXd::Zero(shape.dim);
  for (int r = 0; r < replicas; ++r) vbar += ghat_v[static_cast<size_t>(r)];
  vbar /= static_cast<double>(replicas);

  double sg2 = 0.0, sv2 = 0.0;
  for (int r = 0; r < replicas; ++r) {
    sg2 += (ghat_o[static_cast<size_t>(r)] - gstar.coords()).squaredNorm();
    sv2 += (ghat_v[static_cast<size_t>(r)] - ghat_o[static_cast<size_t>(r)])
               .squaredNorm();
  }
  sg2 /= replicas;
  sv2 /= replicas;

  double rho = gstar.coords().dot(vbar) / g2;
  double bias_norm = (vbar - rho * gstar.coords()).norm();

  // Metric angle between the mean update and the exact gradient; a metric-null
  // mean direction carries no angle information and reports pi/2.
  double angle = 1.5707963267948966;
  FisherMatrix g = fisher_exact(b, theta);
  Tangent vbar_t(shape, vbar);
  double vnorm_g = std::sqrt(std::max(0.0, vbar.dot(g.m * vbar)));
  if (vnorm_g >= 1e-12) angle = fisher_angle(g, gstar, vbar_t);

  return DecompositionReport::make(rho, sg2, sv2, bias_norm, g2, angle, replicas);
}

double eta_max(double rho, double g_star_norm2, double sigma_g2,
               double sigma_v2, double curvature) {
  if (!(curvature > 0.0))
    fail(ErrorCode::ValidationError, "eta_max: curvature must be > 0");
  double denom = curvature * (rho * rho * g_star_norm2 + sigma_g2 + sigma_v2);
  if (denom <= 0.0)
    fail(ErrorCode::ValidationError, "eta_max: degenerate denominator");
  return 2.0 * rho * g_star_norm2 / denom;
}

InequalityReport check_inequality(double rho, double g_star_norm2,
                                  double sigma_g2, double sigma_v2,
                                  double curvature, double eta) {
  if (!(eta > 0.0))
    fail(ErrorCode::ValidationError, "check_inequality: eta must be > 0");
  if (!(curvature > 0.0))
    fail(ErrorCode::ValidationError, "check_inequality: curvature must be > 0");
  InequalityReport r;
  r.lhs = rho * g_star_norm2;
  r.rhs = 0.5 * eta * curvature *
          (rho * rho * g_star_norm2 + sigma_g2 + sigma_v2);
  r.holds = r.lhs > r.rhs;
  r.eta_max = eta_max(rho, g_star_norm2, sigma_g2, sigma_v2, curvature);
  r.eta = eta;
  r.curvature = curvature;
  return r;
}

std::optional<double> snr_v_star(double rho0, double snr_g, double curvature,
                                 double eta) {
  if (!(eta > 0.0) || !(curvature > 0.0) || !(rho0 > 0.0))
    fail(ErrorCode::ValidationError, "snr_v_star: eta, curvature, rho0 must be > 0");
  double denom = 2.0 * rho0 / (eta * curvature) - rho0 * rho0 - 1.0 / snr_g;
  if (denom <= 0.0) return std::nullopt;
  return 1.0 / denom;
}

double rho_crit(double eta, double curvature, double sigma_g2, double sigma_v2,
                double g_star_norm2) {
  if (!(g_star_norm2 > 0.0))
    fail(ErrorCode::ValidationError, "rho_crit: ||g*||^2 must be > 0");
  return eta * curvature * (sigma_g2 + sigma_v2) / (2.0 * g_star_norm2);
}

double estimate_curvature(const Battery& b, const Theta& theta, int probes,
                          double radius, Stream& rng) {
  if (probes < 8)
    fail(ErrorCode::ValidationError, "estimate_curvature: probes must be >= 8");
  if (!(radius > 0.0))
    fail(ErrorCode::ValidationError, "estimate_curvature: radius must be > 0");
  const PolicyShape& s = theta.shape();
  double f0 = capability_exact(b, theta);
  double worst = 0.0;
  for (int p = 0; p < probes; ++p) {
    Eigen::VectorXd u(s.dim);
    for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = rng.next_normal();
    double un = u.norm();
    if (un == 0.0) continue;
    u /= un;
    Theta plus(s, theta.coords() + radius * u);
    Theta minus(s, theta.coords() - radius * u);
    double quad = (capability_exact(b, plus) - 2.0 * f0 +
                   capability_exact(b, minus)) /
                  (radius * radius);
    worst = std::max(worst, std::abs(quad));
  }
  return 1.5 * worst;
}

namespace {

// Lower order statistic at 1-based index ceil(q*n), clamped into [1, n]. The
// small slack guards rounding in q*n when the product is integral.
double order_quantile(std::vector<double> values, double q) {
  const auto n = static_cast<double>(values.size());
  int idx = static_cast<int>(std::ceil(q * n - 1e-9));
  idx = std::clamp(idx, 1, static_cast<int>(values.size()));
  std::sort(values.begin(), values.end());
  return values[static_cast<size_t>(idx - 1)];
}

}  // namespace

SlopReport slop(const Battery& b, const Theta& theta, const VerifierSpec& vspec,
                double alpha, double beta_q, int n, Stream& rng) {
  vspec.validate();
  if (!(alpha > 0.0 && alpha <= 1.0))
    fail(ErrorCode::ValidationError, "slop: alpha must be in (0, 1]");
  if (!(beta_q > 0.0 && beta_q <= 1.0))
    fail(ErrorCode::ValidationError, "slop: beta_q must be in (0, 1]");
  if (n < 1) fail(ErrorCode::ValidationError, "slop: n < 1");

  Batch batch = generate(b, theta, n, rng);
  Eigen::VectorXd v = potential(vspec, b, theta, batch, rng);
  std::vector<double> scores(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i)
    scores[static_cast<size_t>(i)] =
        external_score(b, batch.items[static_cast<size_t>(i)]);

  SlopReport r;
  r.alpha = alpha;
  r.beta_q = beta_q;
  r.n = n;
  r.v_hi = order_quantile({v.data(), v.data() + v.size()}, 1.0 - alpha);
  r.s_lo = order_quantile(scores, beta_q);
  int hits = 0;
  for (int i = 0; i < n; ++i)
    if (v[i] >= r.v_hi && scores[static_cast<size_t>(i)] <= r.s_lo) ++hits;
  r.slop_mass = static_cast<double>(hits) / n;
  return r;
}

double goodhart_decay(double c, double gamma, double step_norm) {
  if (!(gamma >= 0.0) || !(step_norm >= 0.0))
    fail(ErrorCode::ValidationError, "goodhart_decay: negative argument");
  return std::max(0.0, c - gamma * step_norm);
}

}  // namespace gvu

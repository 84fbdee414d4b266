#pragma once

#include <optional>

#include "gvu/battery.hpp"
#include "gvu/gvu.hpp"
#include "gvu/manifold.hpp"

namespace gvu {

// Update-direction decomposition measured by paired Monte Carlo: every
// replica scores one batch twice, once with the configured verifier and once
// with the oracle, so the verifier-noise split uses common random numbers.
struct DecompositionReport {
  double rho = 0.0;          // alignment <g*, mean update> / ||g*||^2
  double sigma_g2 = 0.0;     // generator noise: mean ||ghat_oracle - g*||^2
  double sigma_v2 = 0.0;     // verifier excess: mean ||ghat_v - ghat_oracle||^2
  double bias_norm = 0.0;    // residual after removing the g* component
  double g_star_norm2 = 0.0;
  double snr_g = 0.0;
  double snr_v = 0.0;
  double fisher_angle = 0.0; // metric angle between mean update and g*
  int replicas = 0;

  // Builds the report and derives both SNR fields; a zero variance encodes
  // infinite SNR as the largest finite double.
  static DecompositionReport make(double rho, double sigma_g2, double sigma_v2,
                                  double bias_norm, double g_star_norm2,
                                  double fisher_angle, int replicas);
};

// Requires ||g*|| >= 1e-10 and replicas >= 2. The estimated rho must land in
// [-1.5, 1.5]; anything else is reported as a numeric failure.
DecompositionReport decompose(const Battery& b, const Theta& theta,
                              const VerifierSpec& vspec, int n, int replicas,
                              Stream& rng);

// Largest step size whose predicted first-order gain beats the second-order
// noise penalty.
double eta_max(double rho, double g_star_norm2, double sigma_g2,
               double sigma_v2, double curvature);

struct InequalityReport {
  double lhs = 0.0;   // rho * ||g*||^2
  double rhs = 0.0;   // (eta L / 2)(rho^2 ||g*||^2 + sigma_g2 + sigma_v2)
  bool holds = false;
  double eta_max = 0.0;
  double eta = 0.0;
  double curvature = 0.0;
};

InequalityReport check_inequality(double rho, double g_star_norm2,
                                  double sigma_g2, double sigma_v2,
                                  double curvature, double eta);

// Minimal verifier SNR that still admits a positive-gain step at alignment
// rho0; empty when the target is unattainable at these parameters.
std::optional<double> snr_v_star(double rho0, double snr_g, double curvature,
                                 double eta);

// Alignment level below which the predicted gain turns negative.
double rho_crit(double eta, double curvature, double sigma_g2, double sigma_v2,
                double g_star_norm2);

// 1.5 x the largest |u^T H u| seen over `probes` random unit directions,
// via second-order central differences at the given radius. probes >= 8.
double estimate_curvature(const Battery& b, const Theta& theta, int probes,
                          double radius, Stream& rng);

struct SlopReport {
  double v_hi = 0.0;      // empirical (1-alpha) quantile of the potential
  double s_lo = 0.0;      // empirical beta_q quantile of the score
  double slop_mass = 0.0; // fraction with V >= v_hi and S <= s_lo
  double alpha = 0.0;
  double beta_q = 0.0;
  int n = 0;
};

// Empirical quantiles use the lower order statistic at 1-based index
// ceil(q*n), clamped to [1, n].
SlopReport slop(const Battery& b, const Theta& theta, const VerifierSpec& vspec,
                double alpha, double beta_q, int n, Stream& rng);

// Alignment decay applied after each goodhart step: max(0, c - gamma*||dtheta||).
double goodhart_decay(double c, double gamma, double step_norm);

}  // namespace gvu

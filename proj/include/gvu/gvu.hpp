#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "gvu/battery.hpp"
#include "gvu/manifold.hpp"
#include "gvu/rng.hpp"

namespace gvu {

struct Batch {
  std::vector<Interaction> items;
  int size() const noexcept { return static_cast<int>(items.size()); }
};

// Batch plus verifier weights on the simplex (sum 1 within 1e-12).
struct WeightedBatch {
  std::vector<Interaction> items;
  Eigen::VectorXd weights;
};

enum class VerifierKind {
  Oracle,
  Noisy,
  Ensemble,
  Group,
  Discriminator,
  Constant,
  Cold,
  Goodhart,
};

const char* verifier_kind_name(VerifierKind k);
VerifierKind verifier_kind_from_name(const std::string& name);

// Scoring rule the verifier applies to a batch. beta is the inverse
// temperature of the weighting step and is required for every kind.
//
// Parameter use by kind:
//   oracle        - none (external score itself)
//   noisy         - tau: score plus N(0, tau^2)
//   ensemble      - tau, judges: mean of `judges` independent noisy reads
//   group         - eps: per-task sub-batch advantage (r - mean)/(popstd+eps),
//                   singleton groups score 0
//   discriminator - ref_theta: log pi_theta(y|x) - log pi_ref(y|x)
//   constant      - const_value; optional tau > 0 adds independent N(0,tau^2)
//                   noise (used to realize a potential independent of score)
//   cold          - tau, temp_ratio: noisy with std tau*temp_ratio
//   goodhart      - gamma, junk_seed: c*score + (1-c)*junk where junk is a
//                   fixed table drawn once from junk_seed; the alignment c
//                   starts at 1 and decays with update size (see gvu_step)
struct VerifierSpec {
  VerifierKind kind = VerifierKind::Oracle;
  double beta = 0.0;
  double tau = 0.0;
  int judges = 1;
  double eps = 0.0;
  std::optional<Theta> ref_theta;
  double const_value = 0.0;
  double temp_ratio = 1.0;
  double gamma = 0.0;
  std::uint64_t junk_seed = 0;
  double goodhart_c = 1.0;

  void validate() const;
};

enum class UpdaterMode { Argmin, Reinforce };

struct UpdaterSpec {
  UpdaterMode mode = UpdaterMode::Reinforce;
  double eta = 0.0;        // step size, > 0
  double lambda = 0.0;     // proximity weight, >= 0 (argmin objective)
  int inner_steps = 200;   // argmin iteration cap, >= 1
  double inner_tol = 1e-8; // argmin gradient-norm stop, > 0

  void validate() const;
};

// The fixed junk-score table used by the goodhart kind: one value in [0,1]
// per (task, output), task-major, drawn from Stream(junk_seed).
std::vector<std::vector<double>> junk_table(const Battery& b,
                                            std::uint64_t junk_seed);

// Generator: task draws from the battery law, outputs from the policy.
Batch generate(const Battery& b, const Theta& theta, int n, Stream& rng);

// Verifier potentials for a batch. Draws noise from rng only for the kinds
// that declare it (noisy, ensemble, cold, constant-with-tau).
Eigen::VectorXd potential(const VerifierSpec& spec, const Battery& b,
                          const Theta& theta, const Batch& batch, Stream& rng);

// Softmax weighting of potentials at inverse temperature spec.beta
// (max-subtracted; beta = 0 gives uniform weights).
WeightedBatch verify(const VerifierSpec& spec, const Batch& batch,
                     const Eigen::VectorXd& potentials);

struct ArgminResult {
  Theta theta;
  bool converged = false;
};

// Minimize  sum_i w_i (-log pi(y_i|x_i)) + lambda ||theta' - theta||^2  by
// gradient descent with halving backtracking (at most 30 halvings per
// iteration). Stops when the objective gradient norm is <= inner_tol; hitting
// inner_steps first is reported through the flag, not an error. Any iterate
// logit outside [-100, 100] raises NumericalOverflow.
ArgminResult update_argmin(const Battery& b, const Theta& theta,
                           const WeightedBatch& wb, const UpdaterSpec& spec);

struct ReinforceResult {
  Theta theta;
  Tangent ghat;
};

// theta' = theta + eta * (1/N) sum_i V_i * score(theta, x_i, y_i).
// The accumulation order is canonicalized, so the result is invariant under
// batch permutation bit-for-bit.
ReinforceResult update_reinforce(const Theta& theta, const Batch& batch,
                                 const Eigen::VectorXd& potentials,
                                 const UpdaterSpec& spec);

struct StepRecord {
  int n = 0;
  std::uint64_t consumed = 0;  // samples drawn by this step
  UpdaterMode mode = UpdaterMode::Reinforce;
  double update_norm = 0.0;    // ||theta' - theta||
  double pot_mean = 0.0;
  double pot_std = 0.0;
  double pot_min = 0.0;
  double pot_max = 0.0;
  bool converged = true;                       // argmin flag; true for reinforce
  std::optional<Tangent> ghat;                 // reinforce only
  std::optional<Eigen::VectorXd> weights;      // argmin only
};

// One generate -> verify -> update round. Reinforce mode applies potentials
// directly and never forms softmax weights. For the goodhart kind, vspec's
// alignment state decays in place by gamma * ||theta' - theta|| (floored at 0).
std::pair<Theta, StepRecord> gvu_step(const Battery& b, const Theta& theta,
                                      int n, VerifierSpec& vspec,
                                      const UpdaterSpec& uspec, Stream& rng);

// Shared group-advantage kernel: population-std normalization within each
// group; groups of size 1 (and zero-spread groups at eps = 0) map to 0.
Eigen::VectorXd group_normalize(const Eigen::VectorXd& values,
                                const std::vector<int>& group_ids, double eps);

}  // namespace gvu

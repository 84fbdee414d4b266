#include "gvu/gvu.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

namespace gvu {

namespace {

constexpr double kLogitBound = 100.0;

// Canonical batch order: (task, output, payload bits). Summing in this order
// makes the floating-point accumulation independent of the incoming
// permutation, including ties.
std::vector<int> canonical_order(const std::vector<Interaction>& items,
                                 const Eigen::VectorXd& payload) {
  std::vector<int> idx(items.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int a, int bi) {
    if (items[static_cast<size_t>(a)].task != items[static_cast<size_t>(bi)].task)
      return items[static_cast<size_t>(a)].task < items[static_cast<size_t>(bi)].task;
    if (items[static_cast<size_t>(a)].output != items[static_cast<size_t>(bi)].output)
      return items[static_cast<size_t>(a)].output <
             items[static_cast<size_t>(bi)].output;
    return std::bit_cast<std::uint64_t>(payload[a]) <
           std::bit_cast<std::uint64_t>(payload[bi]);
  });
  return idx;
}

void check_finite(const Eigen::VectorXd& v, const char* what) {
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (!std::isfinite(v[i]))
      fail(ErrorCode::NonFiniteScore, std::string(what) + ": non-finite value");
}

}  // namespace

const char* verifier_kind_name(VerifierKind k) {
  switch (k) {
    case VerifierKind::Oracle: return "oracle";
    case VerifierKind::Noisy: return "noisy";
    case VerifierKind::Ensemble: return "ensemble";
    case VerifierKind::Group: return "group";
    case VerifierKind::Discriminator: return "discriminator";
    case VerifierKind::Constant: return "constant";
    case VerifierKind::Cold: return "cold";
    case VerifierKind::Goodhart: return "goodhart";
  }
  return "?";
}

VerifierKind verifier_kind_from_name(const std::string& name) {
  for (VerifierKind k :
       {VerifierKind::Oracle, VerifierKind::Noisy, VerifierKind::Ensemble,
        VerifierKind::Group, VerifierKind::Discriminator, VerifierKind::Constant,
        VerifierKind::Cold, VerifierKind::Goodhart})
    if (name == verifier_kind_name(k)) return k;
  fail(ErrorCode::UnknownKind, "verifier kind '" + name + "'");
}

void VerifierSpec::validate() const {
  if (!(beta >= 0.0) || !std::isfinite(beta))
    fail(ErrorCode::ValidationError, "verifier.beta must be finite and >= 0");
  switch (kind) {
    case VerifierKind::Noisy:
    case VerifierKind::Cold:
    case VerifierKind::Ensemble:
      if (!(tau >= 0.0) || !std::isfinite(tau))
        fail(ErrorCode::ValidationError, "verifier.tau must be finite and >= 0");
      break;
    case VerifierKind::Constant:
      if (!std::isfinite(const_value))
        fail(ErrorCode::ValidationError, "verifier.const_value must be finite");
      if (!(tau >= 0.0) || !std::isfinite(tau))
        fail(ErrorCode::ValidationError, "verifier.tau must be finite and >= 0");
      break;
    default:
      break;
  }
  if (kind == VerifierKind::Ensemble && judges < 1)
    fail(ErrorCode::ValidationError, "verifier.judges must be >= 1");
  if (kind == VerifierKind::Group && (!(eps >= 0.0) || !std::isfinite(eps)))
    fail(ErrorCode::ValidationError, "verifier.eps must be finite and >= 0");
  if (kind == VerifierKind::Discriminator && !ref_theta.has_value())
    fail(ErrorCode::MissingParameter, "verifier.ref_logits required");
  if (kind == VerifierKind::Cold && !(temp_ratio > 0.0))
    fail(ErrorCode::ValidationError, "verifier.temp_ratio must be > 0");
  if (kind == VerifierKind::Goodhart) {
    if (!(gamma >= 0.0) || !std::isfinite(gamma))
      fail(ErrorCode::ValidationError, "verifier.gamma must be finite and >= 0");
    if (!(goodhart_c >= 0.0 && goodhart_c <= 1.0))
      fail(ErrorCode::ValidationError, "verifier alignment must stay in [0,1]");
  }
}

void UpdaterSpec::validate() const {
  if (!(eta > 0.0) || !std::isfinite(eta))
    fail(ErrorCode::ValidationError, "updater.eta must be finite and > 0");
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    fail(ErrorCode::ValidationError, "updater.lambda must be finite and >= 0");
  if (mode == UpdaterMode::Argmin) {
    if (inner_steps < 1)
      fail(ErrorCode::ValidationError, "updater.inner_steps must be >= 1");
    if (!(inner_tol > 0.0))
      fail(ErrorCode::ValidationError, "updater.inner_tol must be > 0");
  }
}

std::vector<std::vector<double>> junk_table(const Battery& b,
                                            std::uint64_t junk_seed) {
  Stream rng(junk_seed);
  std::vector<std::vector<double>> table(static_cast<size_t>(b.task_count()));
  for (int t = 0; t < b.task_count(); ++t) {
    table[static_cast<size_t>(t)].resize(static_cast<size_t>(b.output_count(t)));
    for (double& v : table[static_cast<size_t>(t)]) v = rng.next_unit();
  }
  return table;
}

Batch generate(const Battery& b, const Theta& theta, int n, Stream& rng) {
  if (n < 1) fail(ErrorCode::ValidationError, "generate: n must be >= 1");
  Batch batch;
  batch.items.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    int t = b.sample_task(rng);
    int y = sample_output(theta, t, rng);
    batch.items.push_back({t, y});
  }
  return batch;
}

Eigen::VectorXd group_normalize(const Eigen::VectorXd& values,
                                const std::vector<int>& group_ids, double eps) {
  if (values.size() != static_cast<Eigen::Index>(group_ids.size()))
    fail(ErrorCode::ShapeMismatch, "group_normalize: sizes differ");
  int max_id = -1;
  for (int g : group_ids) {
    if (g < 0) fail(ErrorCode::ValidationError, "group_normalize: negative id");
    max_id = std::max(max_id, g);
  }
  std::vector<double> sum(static_cast<size_t>(max_id + 1), 0.0);
  std::vector<double> count(static_cast<size_t>(max_id + 1), 0.0);
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    sum[static_cast<size_t>(group_ids[static_cast<size_t>(i)])] += values[i];
    count[static_cast<size_t>(group_ids[static_cast<size_t>(i)])] += 1.0;
  }
  std::vector<double> ssq(static_cast<size_t>(max_id + 1), 0.0);
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    size_t g = static_cast<size_t>(group_ids[static_cast<size_t>(i)]);
    double r = values[i] - sum[g] / count[g];
    ssq[g] += r * r;
  }
  Eigen::VectorXd out(values.size());
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    size_t g = static_cast<size_t>(group_ids[static_cast<size_t>(i)]);
    if (count[g] <= 1.0) {
      out[i] = 0.0;  // singleton advantage is defined as 0
      continue;
    }
    double denom = std::sqrt(ssq[g] / count[g]) + eps;
    out[i] = denom > 0.0 ? (values[i] - sum[g] / count[g]) / denom : 0.0;
  }
  return out;
}

Eigen::VectorXd potential(const VerifierSpec& spec, const Battery& b,
                          const Theta& theta, const Batch& batch, Stream& rng) {
  spec.validate();
  const int n = batch.size();
  Eigen::VectorXd v(n);
  switch (spec.kind) {
    case VerifierKind::Oracle:
      for (int i = 0; i < n; ++i)
        v[i] = external_score(b, batch.items[static_cast<size_t>(i)]);
      break;
    case VerifierKind::Noisy:
      for (int i = 0; i < n; ++i)
        v[i] = external_score(b, batch.items[static_cast<size_t>(i)]) +
               spec.tau * rng.next_normal();
      break;
    case VerifierKind::Ensemble:
      for (int i = 0; i < n; ++i) {
        double s = external_score(b, batch.items[static_cast<size_t>(i)]);
        double acc = 0.0;
        for (int m = 0; m < spec.judges; ++m)
          acc += s + spec.tau * rng.next_normal();
        v[i] = acc / spec.judges;
      }
      break;
    case VerifierKind::Group: {
      Eigen::VectorXd r(n);
      std::vector<int> gid(static_cast<size_t>(n));
      for (int i = 0; i < n; ++i) {
        r[i] = external_score(b, batch.items[static_cast<size_t>(i)]);
        gid[static_cast<size_t>(i)] = batch.items[static_cast<size_t>(i)].task;
      }
      v = group_normalize(r, gid, spec.eps);
      break;
    }
    case VerifierKind::Discriminator: {
      const Theta& ref = *spec.ref_theta;
      if (ref.shape() != theta.shape())
        fail(ErrorCode::ShapeMismatch, "discriminator: ref policy shape differs");
      for (int i = 0; i < n; ++i)
        v[i] = log_prob(theta, batch.items[static_cast<size_t>(i)]) -
               log_prob(ref, batch.items[static_cast<size_t>(i)]);
      break;
    }
    case VerifierKind::Constant:
      for (int i = 0; i < n; ++i) {
        v[i] = spec.const_value;
        if (spec.tau > 0.0) v[i] += spec.tau * rng.next_normal();
      }
      break;
    case VerifierKind::Cold:
      for (int i = 0; i < n; ++i)
        v[i] = external_score(b, batch.items[static_cast<size_t>(i)]) +
               spec.tau * spec.temp_ratio * rng.next_normal();
      break;
    case VerifierKind::Goodhart: {
      auto junk = junk_table(b, spec.junk_seed);
      double c = spec.goodhart_c;
      for (int i = 0; i < n; ++i) {
        const Interaction& it = batch.items[static_cast<size_t>(i)];
        v[i] = c * external_score(b, it) +
               (1.0 - c) * junk[static_cast<size_t>(it.task)]
                               [static_cast<size_t>(it.output)];
      }
      break;
    }
  }
  check_finite(v, "potential");
  return v;
}

WeightedBatch verify(const VerifierSpec& spec, const Batch& batch,
                     const Eigen::VectorXd& potentials) {
  spec.validate();
  if (potentials.size() != batch.size())
    fail(ErrorCode::ShapeMismatch, "verify: potentials size != batch size");
  if (batch.size() == 0)
    fail(ErrorCode::ValidationError, "verify: empty batch");
  check_finite(potentials, "verify");
  Eigen::VectorXd z = spec.beta * potentials;
  double m = z.maxCoeff();
  Eigen::VectorXd w = (z.array() - m).exp();
  w /= w.sum();
  return {batch.items, std::move(w)};
}

namespace {

struct ArgminWorkspace {
  // Items in canonical order with their weights, grouped transparently by the
  // sort; objective/gradient sweeps walk this order every iteration.
  std::vector<Interaction> items;
  Eigen::VectorXd w;
};

double argmin_objective(const ArgminWorkspace& ws, const Theta& theta,
                        const Eigen::VectorXd& x0, double lambda,
                        const Eigen::VectorXd& x) {
  Theta cand(theta.shape(), x);
  double nll = 0.0;
  for (size_t i = 0; i < ws.items.size(); ++i)
    nll -= ws.w[static_cast<Eigen::Index>(i)] * log_prob(cand, ws.items[i]);
  return nll + lambda * (x - x0).squaredNorm();
}

Eigen::VectorXd argmin_gradient(const ArgminWorkspace& ws, const Theta& theta,
                                const Eigen::VectorXd& x0, double lambda,
                                const Eigen::VectorXd& x) {
  Theta cand(theta.shape(), x);
  const PolicyShape& s = theta.shape();
  Eigen::VectorXd g = 2.0 * lambda * (x - x0);
  int cached_task = -1;
  Eigen::VectorXd p;
  for (size_t i = 0; i < ws.items.size(); ++i) {
    const Interaction& it = ws.items[i];
    if (it.task != cached_task) {
      p = policy_probs(cand, it.task);
      cached_task = it.task;
    }
    int off = s.offset[static_cast<size_t>(it.task)];
    int blk = s.block_size(it.task);
    double wi = ws.w[static_cast<Eigen::Index>(i)];
    g.segment(off, blk) += wi * p.tail(blk);
    if (it.output >= 1) g[off + it.output - 1] -= wi;
  }
  return g;
}

}  // namespace

ArgminResult update_argmin(const Battery& b, const Theta& theta,
                           const WeightedBatch& wb, const UpdaterSpec& spec) {
  spec.validate();
  if (spec.mode != UpdaterMode::Argmin)
    fail(ErrorCode::ValidationError, "update_argmin: updater mode is not argmin");
  if (wb.weights.size() != static_cast<Eigen::Index>(wb.items.size()) ||
      wb.items.empty())
    fail(ErrorCode::ShapeMismatch, "update_argmin: malformed weighted batch");
  (void)b;

  ArgminWorkspace ws;
  std::vector<int> order = canonical_order(wb.items, wb.weights);
  ws.items.reserve(wb.items.size());
  ws.w.resize(wb.weights.size());
  for (size_t i = 0; i < order.size(); ++i) {
    ws.items.push_back(wb.items[static_cast<size_t>(order[i])]);
    ws.w[static_cast<Eigen::Index>(i)] = wb.weights[order[i]];
  }

  const Eigen::VectorXd x0 = theta.coords();
  Eigen::VectorXd x = x0;
  double fx = argmin_objective(ws, theta, x0, spec.lambda, x);
  bool converged = false;

  for (int iter = 0; iter < spec.inner_steps; ++iter) {
    Eigen::VectorXd g = argmin_gradient(ws, theta, x0, spec.lambda, x);
    if (g.norm() <= spec.inner_tol) {
      converged = true;
      break;
    }
    double step = spec.eta;
    bool accepted = false;
    for (int halvings = 0; halvings <= 30; ++halvings) {
      Eigen::VectorXd cand = x - step * g;
      double fc = argmin_objective(ws, theta, x0, spec.lambda, cand);
      if (fc <= fx) {
        x = std::move(cand);
        fx = fc;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // no descent at the smallest step: report via flag
    if (x.cwiseAbs().maxCoeff() > kLogitBound)
      fail(ErrorCode::NumericalOverflow,
           "update_argmin: iterate left the logit bound");
  }
  if (!converged) {
    Eigen::VectorXd g = argmin_gradient(ws, theta, x0, spec.lambda, x);
    converged = g.norm() <= spec.inner_tol;
  }
  return {Theta(theta.shape(), std::move(x)), converged};
}

ReinforceResult update_reinforce(const Theta& theta, const Batch& batch,
                                 const Eigen::VectorXd& potentials,
                                 const UpdaterSpec& spec) {
  spec.validate();
  if (potentials.size() != batch.size() || batch.size() == 0)
    fail(ErrorCode::ShapeMismatch, "update_reinforce: malformed batch");
  check_finite(potentials, "update_reinforce");
  const PolicyShape& s = theta.shape();
  std::vector<int> order = canonical_order(batch.items, potentials);
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(s.dim);
  int cached_task = -1;
  Eigen::VectorXd p;
  for (int idx : order) {
    const Interaction& it = batch.items[static_cast<size_t>(idx)];
    if (it.task != cached_task) {
      p = policy_probs(theta, it.task);
      cached_task = it.task;
    }
    int off = s.offset[static_cast<size_t>(it.task)];
    int blk = s.block_size(it.task);
    double vi = potentials[idx];
    acc.segment(off, blk) -= vi * p.tail(blk);
    if (it.output >= 1) acc[off + it.output - 1] += vi;
  }
  acc /= static_cast<double>(batch.size());
  Tangent ghat(s, std::move(acc));
  Eigen::VectorXd xnew = theta.coords() + spec.eta * ghat.coords();
  if (xnew.cwiseAbs().maxCoeff() > kLogitBound)
    fail(ErrorCode::NumericalOverflow,
         "update_reinforce: step left the logit bound");
  return {Theta(s, std::move(xnew)), std::move(ghat)};
}

std::pair<Theta, StepRecord> gvu_step(const Battery& b, const Theta& theta,
                                      int n, VerifierSpec& vspec,
                                      const UpdaterSpec& uspec, Stream& rng) {
  vspec.validate();
  uspec.validate();
  Batch batch = generate(b, theta, n, rng);
  Eigen::VectorXd pot = potential(vspec, b, theta, batch, rng);

  StepRecord rec;
  rec.n = n;
  rec.consumed = static_cast<std::uint64_t>(n);
  rec.mode = uspec.mode;
  rec.pot_mean = pot.mean();
  rec.pot_min = pot.minCoeff();
  rec.pot_max = pot.maxCoeff();
  rec.pot_std = n > 1 ? std::sqrt((pot.array() - rec.pot_mean).square().sum() /
                                  (n - 1))
                      : 0.0;

  Theta next = theta;
  if (uspec.mode == UpdaterMode::Reinforce) {
    ReinforceResult rr = update_reinforce(theta, batch, pot, uspec);
    next = std::move(rr.theta);
    rec.ghat = std::move(rr.ghat);
    rec.converged = true;
  } else {
    WeightedBatch wb = verify(vspec, batch, pot);
    rec.weights = wb.weights;
    ArgminResult ar = update_argmin(b, theta, wb, uspec);
    next = std::move(ar.theta);
    rec.converged = ar.converged;
  }
  rec.update_norm = (next.coords() - theta.coords()).norm();
  if (vspec.kind == VerifierKind::Goodhart)
    vspec.goodhart_c =
        std::max(0.0, vspec.goodhart_c - vspec.gamma * rec.update_norm);
  return {std::move(next), std::move(rec)};
}

}  // namespace gvu

#include "gvu/representation.hpp"

#include <cmath>

#include "gvu/gvu.hpp"
#include "gvu/parallel.hpp"

namespace gvu {

nlohmann::json PotentialTable::to_json() const {
  return {{"potential", values}};
}

PotentialTable PotentialTable::from_json(const nlohmann::json& doc,
                                         const Battery& b) {
  if (!doc.is_object() || !doc.contains("potential") ||
      !doc["potential"].is_array())
    fail(ErrorCode::ParseError, "potential table: expected {\"potential\": [..]}");
  size_t expect = 0;
  for (int t = 0; t < b.task_count(); ++t)
    expect += static_cast<size_t>(b.output_count(t));
  PotentialTable table;
  for (const auto& v : doc["potential"]) {
    if (!v.is_number())
      fail(ErrorCode::ParseError, "potential table: entry not a number");
    table.values.push_back(v.get<double>());
  }
  if (table.values.size() != expect)
    fail(ErrorCode::ShapeMismatch, "potential table: wrong entry count");
  return table;
}

PotentialTable implied_potential(const Battery& b, const Theta& theta,
                                 const Tangent& v, double damping) {
  FisherMatrix g = fisher_exact(b, theta);
  Tangent a = natural_gradient(g, v, damping);
  PotentialTable table;
  for (int t = 0; t < b.task_count(); ++t)
    for (int y = 0; y < b.output_count(t); ++y)
      table.values.push_back(a.dot(score_function(theta, {t, y})));
  return table;
}

Tangent reconstruct_field(const Battery& b, const Theta& theta,
                          const PotentialTable& table) {
  const PolicyShape& s = theta.shape();
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(s.dim);
  size_t idx = 0;
  for (int t = 0; t < b.task_count(); ++t) {
    Eigen::VectorXd p = policy_probs(theta, t);
    double w = b.weight(t);
    for (int y = 0; y < p.size(); ++y) {
      if (idx >= table.values.size())
        fail(ErrorCode::ShapeMismatch, "reconstruct_field: table too short");
      double vx = table.values[idx++];
      acc += w * p[y] * vx * score_function(theta, {t, y}).coords();
    }
  }
  if (idx != table.values.size())
    fail(ErrorCode::ShapeMismatch, "reconstruct_field: table too long");
  return Tangent(s, std::move(acc));
}

NecessityProbe necessity_probe(const Battery& b, const Theta& theta,
                               double const_value, int n, int replicas,
                               Stream& rng) {
  if (n < 1 || replicas < 2)
    fail(ErrorCode::ValidationError, "necessity_probe: need n >= 1, replicas >= 2");
  const PolicyShape& s = theta.shape();
  UpdaterSpec uspec;
  uspec.mode = UpdaterMode::Reinforce;
  uspec.eta = 1.0;  // the probe inspects ghat itself; eta only scales it
  VerifierSpec vspec;
  vspec.kind = VerifierKind::Constant;
  vspec.const_value = const_value;

  Stream base = rng.fork();
  std::vector<Eigen::VectorXd> ghat(static_cast<size_t>(replicas));
  replica_for(static_cast<size_t>(replicas), [&](size_t r) {
    Stream local = base.child(static_cast<std::uint64_t>(r));
    Batch batch = generate(b, theta, n, local);
    Eigen::VectorXd pot = potential(vspec, b, theta, batch, local);
    ReinforceResult rr = update_reinforce(theta, batch, pot, uspec);
    ghat[r] = rr.ghat.coords();
  });

  Eigen::VectorXd mean = Eigen::VectorXd::Zero(s.dim);
  for (int r = 0; r < replicas; ++r) mean += ghat[static_cast<size_t>(r)];
  mean /= static_cast<double>(replicas);

  // Bootstrap over replicas: rms deviation of resampled means around the full
  // mean. Scalar by construction, and exactly 0 when every replica is 0.
  constexpr int kResamples = 200;
  Stream boot = rng.fork();
  double ss = 0.0;
  for (int bs = 0; bs < kResamples; ++bs) {
    Eigen::VectorXd m = Eigen::VectorXd::Zero(s.dim);
    for (int r = 0; r < replicas; ++r) {
      auto pick = static_cast<size_t>(boot.next_u64() %
                                      static_cast<std::uint64_t>(replicas));
      m += ghat[pick];
    }
    m /= static_cast<double>(replicas);
    ss += (m - mean).squaredNorm();
  }
  NecessityProbe probe;
  probe.mean_norm = mean.norm();
  probe.stderror = std::sqrt(ss / kResamples);
  probe.replicas = replicas;
  return probe;
}

}  // namespace gvu

#pragma once

#include "gvu/battery.hpp"
#include "gvu/manifold.hpp"

namespace gvu {

// Potential values over every (task, output) pair, task-major output-minor,
// matching the battery's interaction enumeration order.
struct PotentialTable {
  std::vector<double> values;

  nlohmann::json to_json() const;
  static PotentialTable from_json(const nlohmann::json& doc, const Battery& b);
};

// The potential whose exact weighted-score field reproduces v: solve
// (G + damping I) a = v in the policy metric, then tabulate <a, score(x,y)>.
PotentialTable implied_potential(const Battery& b, const Theta& theta,
                                 const Tangent& v, double damping);

// Exact expectation E[V(x,y) * score(x,y)] under the battery law and policy.
Tangent reconstruct_field(const Battery& b, const Theta& theta,
                          const PotentialTable& table);

struct NecessityProbe {
  double mean_norm = 0.0;  // ||mean over replicas of the realized update||
  double stderror = 0.0;   // bootstrap rms deviation of the replica mean
  int replicas = 0;
};

// Reinforce updates under a constant potential: the mean update should be
// statistical zero. The stderr is the root-mean-square deviation of
// bootstrap-resampled replica means from the full mean (200 resamples).
NecessityProbe necessity_probe(const Battery& b, const Theta& theta,
                               double const_value, int n, int replicas,
                               Stream& rng);

}  // namespace gvu

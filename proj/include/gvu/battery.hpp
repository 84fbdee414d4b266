#pragma once

#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gvu/error.hpp"
#include "gvu/rng.hpp"

namespace gvu {

class Theta;  // defined in manifold.hpp

// One prompt: a finite output space with a score per output in [0,1] and a
// strict-success threshold.
struct TaskSpec {
  std::string prompt_id;
  std::vector<double> scores;
  double threshold = 0.0;
};

struct Interaction {
  int task = 0;
  int output = 0;
};

// Finite evaluation battery: tasks, a sampling law over them, and a family
// label per task (families partition capability in trajectory reports).
class Battery {
 public:
  Battery(std::vector<TaskSpec> tasks, std::vector<double> weights,
          std::vector<std::string> families);

  static Battery from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;

  int task_count() const noexcept { return static_cast<int>(tasks_.size()); }
  const TaskSpec& task(int t) const;
  int output_count(int t) const { return static_cast<int>(task(t).scores.size()); }
  double weight(int t) const;
  std::span<const double> weights() const noexcept { return weights_; }
  const std::string& family(int t) const;
  std::span<const double> weight_cum() const noexcept { return cum_; }

  // Unique family labels in first-appearance order.
  std::vector<std::string> family_labels() const;

  int sample_task(Stream& rng) const;

 private:
  std::vector<TaskSpec> tasks_;
  std::vector<double> weights_;
  std::vector<std::string> families_;
  std::vector<double> cum_;
};

std::vector<int> sample_inputs(const Battery& b, int n, Stream& rng);

double external_score(const Battery& b, Interaction it);

struct Estimate {
  double value = 0.0;
  double stderror = 0.0;
};

// Expected score under the battery law and the policy; exact enumeration.
double capability_exact(const Battery& b, const Theta& theta);

// Monte Carlo counterpart; stderr is the sample standard error (0 when every
// sampled score is identical).
Estimate capability_estimate(const Battery& b, const Theta& theta, int n,
                             Stream& rng);

// Probability that the sampled score clears its task threshold; exact.
double strict_success_rate(const Battery& b, const Theta& theta);

// Per-task expected score under the policy, exact. Used for the per-family
// capability split in trajectories.
std::vector<double> per_task_quality(const Battery& b, const Theta& theta);

struct RepresentationSample {
  std::vector<double> quality;  // one entry per task, each in [0,1]
  double cost = 0.0;
};

// One sampled quality profile: a single policy draw per task.
RepresentationSample representation_sample(const Battery& b, const Theta& theta,
                                           Stream& rng);

}  // namespace gvu

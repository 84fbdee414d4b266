#include "gvu/battery.hpp"

#include <cmath>
#include <numeric>
#include <set>

#include "gvu/manifold.hpp"

namespace gvu {

namespace {

constexpr double kWeightSumTol = 1e-9;

void check_task(const TaskSpec& t, size_t idx) {
  if (t.scores.size() < 2)
    fail(ErrorCode::ValidationError,
         "task " + std::to_string(idx) + " needs at least 2 outputs");
  for (double s : t.scores)
    if (!(s >= 0.0 && s <= 1.0))
      fail(ErrorCode::ScoreOutOfRange,
           "task " + std::to_string(idx) + " has score outside [0,1]");
  if (!std::isfinite(t.threshold))
    fail(ErrorCode::ValidationError,
         "task " + std::to_string(idx) + " threshold not finite");
}

}  // namespace

Battery::Battery(std::vector<TaskSpec> tasks, std::vector<double> weights,
                 std::vector<std::string> families)
    : tasks_(std::move(tasks)),
      weights_(std::move(weights)),
      families_(std::move(families)) {
  if (tasks_.empty()) fail(ErrorCode::EmptyTaskSet, "battery has no tasks");
  if (weights_.size() != tasks_.size() || families_.size() != tasks_.size())
    fail(ErrorCode::ShapeMismatch, "weights/families do not match task count");
  for (size_t i = 0; i < tasks_.size(); ++i) check_task(tasks_[i], i);
  double sum = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0))
      fail(ErrorCode::NegativeWeight, "sampling weight below 0");
    sum += w;
  }
  if (std::abs(sum - 1.0) > kWeightSumTol)
    fail(ErrorCode::WeightSumMismatch,
         "sampling weights sum to " + std::to_string(sum));
  for (double& w : weights_) w /= sum;  // renormalize the tolerated slack
  cum_.resize(weights_.size());
  std::partial_sum(weights_.begin(), weights_.end(), cum_.begin());
  cum_.back() = 1.0;
}

const TaskSpec& Battery::task(int t) const {
  if (t < 0 || t >= task_count())
    fail(ErrorCode::IndexOutOfRange, "task index " + std::to_string(t));
  return tasks_[static_cast<size_t>(t)];
}

double Battery::weight(int t) const {
  task(t);
  return weights_[static_cast<size_t>(t)];
}

const std::string& Battery::family(int t) const {
  task(t);
  return families_[static_cast<size_t>(t)];
}

std::vector<std::string> Battery::family_labels() const {
  std::vector<std::string> labels;
  for (const auto& f : families_) {
    bool seen = false;
    for (const auto& l : labels) seen = seen || l == f;
    if (!seen) labels.push_back(f);
  }
  return labels;
}

int Battery::sample_task(Stream& rng) const { return rng.next_categorical(cum_); }

Battery Battery::from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) fail(ErrorCode::ParseError, "battery: not an object");
  for (const auto& [key, _] : doc.items())
    if (key != "tasks" && key != "weights")
      fail(ErrorCode::ParseError, "battery: unknown field '" + key + "'");
  if (!doc.contains("tasks") || !doc["tasks"].is_array())
    fail(ErrorCode::ParseError, "battery: missing 'tasks' array");
  if (!doc.contains("weights") || !doc["weights"].is_array())
    fail(ErrorCode::ParseError, "battery: missing 'weights' array");

  std::vector<TaskSpec> tasks;
  std::vector<std::string> families;
  for (const auto& jt : doc["tasks"]) {
    if (!jt.is_object()) fail(ErrorCode::ParseError, "battery: task not an object");
    for (const auto& [key, _] : jt.items())
      if (key != "prompt_id" && key != "scores" && key != "threshold" &&
          key != "family")
        fail(ErrorCode::ParseError, "battery task: unknown field '" + key + "'");
    TaskSpec t;
    if (!jt.contains("prompt_id") || !jt["prompt_id"].is_string())
      fail(ErrorCode::ParseError, "battery task: missing 'prompt_id'");
    t.prompt_id = jt["prompt_id"].get<std::string>();
    if (!jt.contains("scores") || !jt["scores"].is_array())
      fail(ErrorCode::ParseError, "battery task: missing 'scores'");
    for (const auto& s : jt["scores"]) {
      if (!s.is_number())
        fail(ErrorCode::ParseError, "battery task: score not a number");
      t.scores.push_back(s.get<double>());
    }
    if (!jt.contains("threshold") || !jt["threshold"].is_number())
      fail(ErrorCode::ParseError, "battery task: missing 'threshold'");
    t.threshold = jt["threshold"].get<double>();
    if (!jt.contains("family") || !jt["family"].is_string())
      fail(ErrorCode::ParseError, "battery task: missing 'family'");
    families.push_back(jt["family"].get<std::string>());
    tasks.push_back(std::move(t));
  }
  std::vector<double> weights;
  for (const auto& w : doc["weights"]) {
    if (!w.is_number())
      fail(ErrorCode::ParseError, "battery: weight not a number");
    weights.push_back(w.get<double>());
  }
  return Battery(std::move(tasks), std::move(weights), std::move(families));
}

nlohmann::json Battery::to_json() const {
  nlohmann::json tasks = nlohmann::json::array();
  for (int t = 0; t < task_count(); ++t) {
    tasks.push_back({{"prompt_id", tasks_[static_cast<size_t>(t)].prompt_id},
                     {"scores", tasks_[static_cast<size_t>(t)].scores},
                     {"threshold", tasks_[static_cast<size_t>(t)].threshold},
                     {"family", families_[static_cast<size_t>(t)]}});
  }
  return {{"tasks", tasks}, {"weights", weights_}};
}

std::vector<int> sample_inputs(const Battery& b, int n, Stream& rng) {
  if (n < 0) fail(ErrorCode::ValidationError, "sample_inputs: n < 0");
  std::vector<int> out(static_cast<size_t>(n));
  for (auto& t : out) t = b.sample_task(rng);
  return out;
}

double external_score(const Battery& b, Interaction it) {
  const TaskSpec& t = b.task(it.task);
  if (it.output < 0 || it.output >= static_cast<int>(t.scores.size()))
    fail(ErrorCode::IndexOutOfRange,
         "output index " + std::to_string(it.output) + " for task " +
             std::to_string(it.task));
  return t.scores[static_cast<size_t>(it.output)];
}

double capability_exact(const Battery& b, const Theta& theta) {
  double f = 0.0;
  for (int t = 0; t < b.task_count(); ++t) {
    Eigen::VectorXd p = policy_probs(theta, t);
    const auto& scores = b.task(t).scores;
    double et = 0.0;
    for (int y = 0; y < p.size(); ++y) et += p[y] * scores[static_cast<size_t>(y)];
    f += b.weight(t) * et;
  }
  return f;
}

Estimate capability_estimate(const Battery& b, const Theta& theta, int n,
                             Stream& rng) {
  if (n < 1) fail(ErrorCode::ValidationError, "capability_estimate: n < 1");
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    int t = b.sample_task(rng);
    int y = sample_output(theta, t, rng);
    double s = external_score(b, {t, y});
    sum += s;
    sumsq += s * s;
  }
  double mean = sum / n;
  double var = n > 1 ? std::max(0.0, (sumsq - n * mean * mean) / (n - 1)) : 0.0;
  return {mean, std::sqrt(var / n)};
}

double strict_success_rate(const Battery& b, const Theta& theta) {
  double rate = 0.0;
  for (int t = 0; t < b.task_count(); ++t) {
    Eigen::VectorXd p = policy_probs(theta, t);
    const TaskSpec& spec = b.task(t);
    double pt = 0.0;
    for (int y = 0; y < p.size(); ++y)
      if (spec.scores[static_cast<size_t>(y)] >= spec.threshold) pt += p[y];
    rate += b.weight(t) * pt;
  }
  return rate;
}

std::vector<double> per_task_quality(const Battery& b, const Theta& theta) {
  std::vector<double> q(static_cast<size_t>(b.task_count()));
  for (int t = 0; t < b.task_count(); ++t) {
    Eigen::VectorXd p = policy_probs(theta, t);
    const auto& scores = b.task(t).scores;
    double et = 0.0;
    for (int y = 0; y < p.size(); ++y) et += p[y] * scores[static_cast<size_t>(y)];
    q[static_cast<size_t>(t)] = et;
  }
  return q;
}

RepresentationSample representation_sample(const Battery& b, const Theta& theta,
                                           Stream& rng) {
  RepresentationSample out;
  out.quality.resize(static_cast<size_t>(b.task_count()));
  for (int t = 0; t < b.task_count(); ++t) {
    int y = sample_output(theta, t, rng);
    out.quality[static_cast<size_t>(t)] = external_score(b, {t, y});
  }
  out.cost = static_cast<double>(b.task_count());
  return out;
}

const char* error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyTaskSet: return "EmptyTaskSet";
    case ErrorCode::ScoreOutOfRange: return "ScoreOutOfRange";
    case ErrorCode::NegativeWeight: return "NegativeWeight";
    case ErrorCode::WeightSumMismatch: return "WeightSumMismatch";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::UnknownKind: return "UnknownKind";
    case ErrorCode::MissingParameter: return "MissingParameter";
    case ErrorCode::BadParamPath: return "BadParamPath";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::EmptyTrajectory: return "EmptyTrajectory";
    case ErrorCode::WindowTooLarge: return "WindowTooLarge";
    case ErrorCode::DegenerateVector: return "DegenerateVector";
    case ErrorCode::DegenerateGradient: return "DegenerateGradient";
    case ErrorCode::SingularMetric: return "SingularMetric";
    case ErrorCode::NumericalOverflow: return "NumericalOverflow";
    case ErrorCode::NonFiniteScore: return "NonFiniteScore";
    case ErrorCode::NumericFailure: return "NumericFailure";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace gvu

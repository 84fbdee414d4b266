#pragma once

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "gvu/battery.hpp"
#include "gvu/error.hpp"
#include "gvu/rng.hpp"

namespace gvu {

// Chart layout for the tabular policy family: one logit block per task,
// output 0 pinned to 0, so a task with K outputs contributes K-1 coordinates.
// Blocks are flattened task-major.
struct PolicyShape {
  std::vector<int> outputs;  // K_t per task
  std::vector<int> offset;   // block start per task
  int dim = 0;

  static PolicyShape of(const Battery& b);

  int block_size(int t) const { return outputs[static_cast<size_t>(t)] - 1; }
  // Coordinate of (task, output) for output >= 1.
  int coord(int t, int y) const { return offset[static_cast<size_t>(t)] + y - 1; }
  bool operator==(const PolicyShape& o) const {
    return outputs == o.outputs;
  }
  bool operator!=(const PolicyShape& o) const { return !(*this == o); }
};

class Theta {
 public:
  Theta(PolicyShape shape, Eigen::VectorXd coords);
  static Theta zeros(const PolicyShape& shape);
  // Entries i.i.d. uniform on [-scale, scale].
  static Theta uniform(const PolicyShape& shape, double scale, Stream& rng);

  static Theta from_json(const nlohmann::json& doc, const PolicyShape& shape);
  nlohmann::json to_json() const;

  const PolicyShape& shape() const noexcept { return shape_; }
  const Eigen::VectorXd& coords() const noexcept { return x_; }
  Eigen::VectorXd::ConstSegmentReturnType block(int t) const {
    return x_.segment(shape_.offset[static_cast<size_t>(t)], shape_.block_size(t));
  }

 private:
  PolicyShape shape_;
  Eigen::VectorXd x_;
};

// Tangent vector in the same chart as Theta.
class Tangent {
 public:
  Tangent(PolicyShape shape, Eigen::VectorXd v);
  static Tangent zeros(const PolicyShape& shape);

  const PolicyShape& shape() const noexcept { return shape_; }
  const Eigen::VectorXd& coords() const noexcept { return v_; }
  Eigen::VectorXd& coords() noexcept { return v_; }

  double dot(const Tangent& o) const;
  double norm() const { return v_.norm(); }
  double inf_norm() const { return v_.size() ? v_.cwiseAbs().maxCoeff() : 0.0; }

  Tangent& operator+=(const Tangent& o);
  Tangent& operator*=(double s) {
    v_ *= s;
    return *this;
  }

 private:
  PolicyShape shape_;
  Eigen::VectorXd v_;
};

Tangent operator+(Tangent a, const Tangent& b);
Tangent operator-(const Tangent& a, const Tangent& b);
Tangent operator*(double s, Tangent a);

// Dense symmetric metric in the chart; entries are exact or Monte Carlo
// expectations of the score outer product.
struct FisherMatrix {
  PolicyShape shape;
  Eigen::MatrixXd m;

  FisherMatrix(PolicyShape s, Eigen::MatrixXd mat);
};

// Full output law of one task (length K_t), softmax with max subtraction.
Eigen::VectorXd policy_probs(const Theta& theta, int task);

double log_prob(const Theta& theta, Interaction it);

int sample_output(const Theta& theta, int task, Stream& rng);

// Gradient of log pi_theta at one interaction: within the task block the
// coordinate for output k is 1{y=k} - pi(k); other blocks are zero.
Tangent score_function(const Theta& theta, Interaction it);

FisherMatrix fisher_exact(const Battery& b, const Theta& theta);

// Requires n >= dim.
FisherMatrix fisher_mc(const Battery& b, const Theta& theta, int n, Stream& rng);

// Exact gradient of capability_exact in this chart.
Tangent grad_capability_exact(const Battery& b, const Theta& theta);

// Angle between tangents in the metric g; both arguments must have metric
// norm >= 1e-12.
double fisher_angle(const FisherMatrix& g, const Tangent& u, const Tangent& v);

// Solve (g + damping I) a = v. The damped matrix must have smallest
// eigenvalue >= 1e-12.
Tangent natural_gradient(const FisherMatrix& g, const Tangent& v, double damping);

// lambda_max / lambda_min; requires positive definite g.
double fisher_condition_number(const FisherMatrix& g);

}  // namespace gvu

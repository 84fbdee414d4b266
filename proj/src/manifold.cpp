#include "gvu/manifold.hpp"

#include <cmath>

namespace gvu {

PolicyShape PolicyShape::of(const Battery& b) {
  PolicyShape s;
  s.outputs.reserve(static_cast<size_t>(b.task_count()));
  s.offset.reserve(static_cast<size_t>(b.task_count()));
  int off = 0;
  for (int t = 0; t < b.task_count(); ++t) {
    int k = b.output_count(t);
    s.outputs.push_back(k);
    s.offset.push_back(off);
    off += k - 1;
  }
  s.dim = off;
  return s;
}

Theta::Theta(PolicyShape shape, Eigen::VectorXd coords)
    : shape_(std::move(shape)), x_(std::move(coords)) {
  if (x_.size() != shape_.dim)
    fail(ErrorCode::ShapeMismatch, "theta coordinate count != chart dimension");
  for (Eigen::Index i = 0; i < x_.size(); ++i)
    if (!std::isfinite(x_[i]))
      fail(ErrorCode::NumericalOverflow, "theta has non-finite coordinate");
}

Theta Theta::zeros(const PolicyShape& shape) {
  return Theta(shape, Eigen::VectorXd::Zero(shape.dim));
}

Theta Theta::uniform(const PolicyShape& shape, double scale, Stream& rng) {
  Eigen::VectorXd x(shape.dim);
  for (Eigen::Index i = 0; i < x.size(); ++i)
    x[i] = (2.0 * rng.next_unit() - 1.0) * scale;
  return Theta(shape, std::move(x));
}

Theta Theta::from_json(const nlohmann::json& doc, const PolicyShape& shape) {
  if (!doc.is_object() || !doc.contains("logits") || !doc["logits"].is_array())
    fail(ErrorCode::ParseError, "theta: expected {\"logits\": [[..],..]}");
  for (const auto& [key, _] : doc.items())
    if (key != "logits")
      fail(ErrorCode::ParseError, "theta: unknown field '" + key + "'");
  const auto& blocks = doc["logits"];
  if (static_cast<int>(blocks.size()) != static_cast<int>(shape.outputs.size()))
    fail(ErrorCode::ShapeMismatch, "theta: block count != task count");
  Eigen::VectorXd x(shape.dim);
  for (size_t t = 0; t < blocks.size(); ++t) {
    if (!blocks[t].is_array() ||
        static_cast<int>(blocks[t].size()) != shape.outputs[t] - 1)
      fail(ErrorCode::ShapeMismatch,
           "theta: block " + std::to_string(t) + " has wrong length");
    for (size_t j = 0; j < blocks[t].size(); ++j) {
      if (!blocks[t][j].is_number())
        fail(ErrorCode::ParseError, "theta: logit not a number");
      x[shape.offset[t] + static_cast<int>(j)] = blocks[t][j].get<double>();
    }
  }
  return Theta(shape, std::move(x));
}

nlohmann::json Theta::to_json() const {
  nlohmann::json blocks = nlohmann::json::array();
  for (size_t t = 0; t < shape_.outputs.size(); ++t) {
    nlohmann::json blk = nlohmann::json::array();
    for (int j = 0; j < shape_.outputs[t] - 1; ++j)
      blk.push_back(x_[shape_.offset[t] + j]);
    blocks.push_back(std::move(blk));
  }
  return {{"logits", blocks}};
}

Tangent::Tangent(PolicyShape shape, Eigen::VectorXd v)
    : shape_(std::move(shape)), v_(std::move(v)) {
  if (v_.size() != shape_.dim)
    fail(ErrorCode::ShapeMismatch, "tangent coordinate count != chart dimension");
}

Tangent Tangent::zeros(const PolicyShape& shape) {
  return Tangent(shape, Eigen::VectorXd::Zero(shape.dim));
}

double Tangent::dot(const Tangent& o) const {
  if (shape_ != o.shape_) fail(ErrorCode::ShapeMismatch, "tangent dot: shapes differ");
  return v_.dot(o.v_);
}

Tangent& Tangent::operator+=(const Tangent& o) {
  if (shape_ != o.shape_) fail(ErrorCode::ShapeMismatch, "tangent add: shapes differ");
  v_ += o.v_;
  return *this;
}

Tangent operator+(Tangent a, const Tangent& b) {
  a += b;
  return a;
}

Tangent operator-(const Tangent& a, const Tangent& b) {
  if (a.shape() != b.shape())
    fail(ErrorCode::ShapeMismatch, "tangent sub: shapes differ");
  return Tangent(a.shape(), a.coords() - b.coords());
}

Tangent operator*(double s, Tangent a) {
  a *= s;
  return a;
}

FisherMatrix::FisherMatrix(PolicyShape s, Eigen::MatrixXd mat)
    : shape(std::move(s)), m(std::move(mat)) {
  if (m.rows() != shape.dim || m.cols() != shape.dim)
    fail(ErrorCode::ShapeMismatch, "metric dimension != chart dimension");
  double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (!(asym <= 1e-10))
    fail(ErrorCode::NumericFailure, "metric asymmetric beyond 1e-10");
  m = 0.5 * (m + m.transpose().eval());
}

Eigen::VectorXd policy_probs(const Theta& theta, int task) {
  const PolicyShape& s = theta.shape();
  if (task < 0 || task >= static_cast<int>(s.outputs.size()))
    fail(ErrorCode::IndexOutOfRange, "policy_probs: task " + std::to_string(task));
  int k = s.outputs[static_cast<size_t>(task)];
  Eigen::VectorXd logits(k);
  logits[0] = 0.0;
  logits.tail(k - 1) = theta.block(task);
  double m = logits.maxCoeff();
  Eigen::VectorXd p = (logits.array() - m).exp();
  p /= p.sum();
  return p;
}

double log_prob(const Theta& theta, Interaction it) {
  const PolicyShape& s = theta.shape();
  if (it.task < 0 || it.task >= static_cast<int>(s.outputs.size()))
    fail(ErrorCode::IndexOutOfRange, "log_prob: task " + std::to_string(it.task));
  int k = s.outputs[static_cast<size_t>(it.task)];
  if (it.output < 0 || it.output >= k)
    fail(ErrorCode::IndexOutOfRange, "log_prob: output " + std::to_string(it.output));
  Eigen::VectorXd logits(k);
  logits[0] = 0.0;
  logits.tail(k - 1) = theta.block(it.task);
  double m = logits.maxCoeff();
  double lse = std::log((logits.array() - m).exp().sum()) + m;
  return logits[it.output] - lse;
}

int sample_output(const Theta& theta, int task, Stream& rng) {
  Eigen::VectorXd p = policy_probs(theta, task);
  double u = rng.next_unit();
  double acc = 0.0;
  for (int y = 0; y < p.size(); ++y) {
    acc += p[y];
    if (u < acc) return y;
  }
  return static_cast<int>(p.size()) - 1;
}

Tangent score_function(const Theta& theta, Interaction it) {
  Eigen::VectorXd p = policy_probs(theta, it.task);
  if (it.output < 0 || it.output >= p.size())
    fail(ErrorCode::IndexOutOfRange, "score_function: output index");
  const PolicyShape& s = theta.shape();
  Eigen::VectorXd v = Eigen::VectorXd::Zero(s.dim);
  int off = s.offset[static_cast<size_t>(it.task)];
  int blk = s.block_size(it.task);
  v.segment(off, blk) = -p.tail(blk);
  if (it.output >= 1) v[off + it.output - 1] += 1.0;
  return Tangent(s, std::move(v));
}

FisherMatrix fisher_exact(const Battery& b, const Theta& theta) {
  const PolicyShape& s = theta.shape();
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(s.dim, s.dim);
  for (int t = 0; t < b.task_count(); ++t) {
    // Block expectation of s s^T under pi(.|t) is diag(p) - p p^T on the
    // reduced coordinates; computed by direct enumeration.
    Eigen::VectorXd p = policy_probs(theta, t);
    int off = s.offset[static_cast<size_t>(t)];
    int blk = s.block_size(t);
    double w = b.weight(t);
    for (int y = 0; y < p.size(); ++y) {
      Eigen::VectorXd sc = -p.tail(blk);
      if (y >= 1) sc[y - 1] += 1.0;
      g.block(off, off, blk, blk) += w * p[y] * (sc * sc.transpose());
    }
  }
  return FisherMatrix(s, std::move(g));
}

FisherMatrix fisher_mc(const Battery& b, const Theta& theta, int n, Stream& rng) {
  const PolicyShape& s = theta.shape();
  if (n < s.dim)
    fail(ErrorCode::ValidationError, "fisher_mc: n must be >= chart dimension");
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(s.dim, s.dim);
  for (int i = 0; i < n; ++i) {
    int t = b.sample_task(rng);
    int y = sample_output(theta, t, rng);
    Tangent sc = score_function(theta, {t, y});
    g.noalias() += sc.coords() * sc.coords().transpose();
  }
  g /= static_cast<double>(n);
  return FisherMatrix(s, std::move(g));
}

Tangent grad_capability_exact(const Battery& b, const Theta& theta) {
  const PolicyShape& s = theta.shape();
  Eigen::VectorXd v = Eigen::VectorXd::Zero(s.dim);
  for (int t = 0; t < b.task_count(); ++t) {
    Eigen::VectorXd p = policy_probs(theta, t);
    const auto& scores = b.task(t).scores;
    int off = s.offset[static_cast<size_t>(t)];
    double et = 0.0;
    for (int y = 0; y < p.size(); ++y) et += p[y] * scores[static_cast<size_t>(y)];
    // d/dtheta_k E[S] = p_k (S_k - E[S]) for reduced coordinate k.
    for (int k = 1; k < p.size(); ++k)
      v[off + k - 1] += b.weight(t) * p[k] * (scores[static_cast<size_t>(k)] - et);
  }
  return Tangent(s, std::move(v));
}

double fisher_angle(const FisherMatrix& g, const Tangent& u, const Tangent& v) {
  if (u.shape() != g.shape || v.shape() != g.shape)
    fail(ErrorCode::ShapeMismatch, "fisher_angle: shape mismatch");
  double uu = u.coords().dot(g.m * u.coords());
  double vv = v.coords().dot(g.m * v.coords());
  double nu = std::sqrt(std::max(0.0, uu));
  double nv = std::sqrt(std::max(0.0, vv));
  if (nu < 1e-12 || nv < 1e-12)
    fail(ErrorCode::DegenerateVector, "fisher_angle: metric norm below 1e-12");
  double c = u.coords().dot(g.m * v.coords()) / (nu * nv);
  c = std::clamp(c, -1.0, 1.0);
  return std::acos(c);
}

Tangent natural_gradient(const FisherMatrix& g, const Tangent& v, double damping) {
  if (v.shape() != g.shape)
    fail(ErrorCode::ShapeMismatch, "natural_gradient: shape mismatch");
  if (damping < 0.0)
    fail(ErrorCode::ValidationError, "natural_gradient: damping < 0");
  Eigen::MatrixXd a = g.m;
  a.diagonal().array() += damping;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  if (es.info() != Eigen::Success)
    fail(ErrorCode::NumericFailure, "natural_gradient: eigensolver failed");
  if (es.eigenvalues().minCoeff() < 1e-12)
    fail(ErrorCode::SingularMetric,
         "natural_gradient: damped metric eigenvalue below 1e-12");
  Eigen::VectorXd y = es.eigenvectors().transpose() * v.coords();
  y.array() /= es.eigenvalues().array();
  return Tangent(g.shape, es.eigenvectors() * y);
}

double fisher_condition_number(const FisherMatrix& g) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g.m,
                                                    Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    fail(ErrorCode::NumericFailure, "fisher_condition_number: eigensolver failed");
  double lo = es.eigenvalues().minCoeff();
  double hi = es.eigenvalues().maxCoeff();
  if (lo <= 0.0)
    fail(ErrorCode::SingularMetric, "fisher_condition_number: metric not PD");
  return hi / lo;
}

}  // namespace gvu

#include "gvu/experiments.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>

#include "gvu/diagnostics.hpp"
#include "gvu/emit.hpp"
#include "gvu/kappa.hpp"
#include "gvu/parallel.hpp"
#include "gvu/representation.hpp"

namespace gvu {

namespace {

namespace fs = std::filesystem;

std::string utc_now() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::IoError, "cannot create '" + dir + "': " + ec.message());
}

std::string join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

std::string json_number_array(const std::vector<double>& v) {
  std::string out = "[";
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += format_double(v[i]);
  }
  out += "]";
  return out;
}

struct Emitted {
  std::vector<std::string> files;
  // Aggregate payload for sweeps: parallel header/value columns.
  std::vector<std::string> agg_header;
  std::vector<std::string> agg_row;
};

void put(Emitted& e, const std::string& out_dir, const std::string& name,
         const std::string& content) {
  write_text_file(join(out_dir, name), content);
  e.files.push_back(name);
}

void agg(Emitted& e, const std::string& col, const std::string& value) {
  e.agg_header.push_back(col);
  e.agg_row.push_back(value);
}

// Curvature bound used by the step-size window: probes at theta0 and along a
// handful of realized candidate steps, since the second-order argument needs
// the Hessian on the whole segment the update may traverse.
double curvature_along_steps(const Battery& b, const Theta& theta0,
                             const VerifierSpec& vspec, const UpdaterSpec& uspec,
                             int n, Stream& rng) {
  Stream probe_rng = rng.fork();
  double curv = estimate_curvature(b, theta0, 16, 1e-3, probe_rng);
  constexpr int kCandidates = 8;
  for (int k = 0; k < kCandidates; ++k) {
    Stream step_rng = rng.fork();
    VerifierSpec vcopy = vspec;
    auto [next, rec] = gvu_step(b, theta0, n, vcopy, uspec, step_rng);
    Eigen::VectorXd delta = next.coords() - theta0.coords();
    for (double s : {0.25, 0.5, 0.75, 1.0}) {
      Theta probe(theta0.shape(), theta0.coords() + s * delta);
      curv = std::max(curv, estimate_curvature(b, probe, 16, 1e-3, probe_rng));
    }
  }
  return curv;
}

struct DeltaF {
  double mean = 0.0;
  double stderror = 0.0;
};

// Mean one-step capability change over replicas, each from its own stream.
DeltaF measure_delta_f(const Battery& b, const Theta& theta0,
                       const VerifierSpec& vspec, const UpdaterSpec& uspec,
                       int n, int replicas, Stream& rng) {
  double f0 = capability_exact(b, theta0);
  Stream base = rng.fork();
  std::vector<double> df(static_cast<size_t>(replicas), 0.0);
  replica_for(static_cast<size_t>(replicas), [&](size_t r) {
    Stream local = base.child(static_cast<std::uint64_t>(r));
    VerifierSpec vcopy = vspec;
    auto [next, rec] = gvu_step(b, theta0, n, vcopy, uspec, local);
    df[r] = capability_exact(b, next) - f0;
  });
  double sum = 0.0;
  for (double v : df) sum += v;
  double mean = sum / replicas;
  double ss = 0.0;
  for (double v : df) ss += (v - mean) * (v - mean);
  double var = replicas > 1 ? ss / (replicas - 1) : 0.0;
  return {mean, std::sqrt(var / replicas)};
}

Emitted run_kind_run(const ExperimentConfig& cfg, const std::string& out_dir,
                     Stream& main) {
  Emitted e;
  Theta theta0 = make_theta0(cfg);
  std::vector<StepRecord> steps;
  Trajectory traj = run_trajectory(cfg.battery, theta0, cfg.verifier,
                                   cfg.updater, cfg.experiment.n,
                                   cfg.experiment.budget,
                                   cfg.experiment.checkpoint_every, main, &steps);
  put(e, out_dir, "trajectory.csv", trajectory_csv(traj));
  put(e, out_dir, "steps.csv", step_records_csv(steps));
  const Checkpoint& first = traj.checkpoints.front();
  const Checkpoint& last = traj.checkpoints.back();
  std::string summary = "{";
  summary += "\"consumed\":" + std::to_string(last.consumed);
  summary += ",\"f_final\":" + format_double(last.capability);
  summary += ",\"f_initial\":" + format_double(first.capability);
  summary += ",\"steps\":" + std::to_string(steps.size());
  summary += ",\"strict_final\":" + format_double(last.strict_rate);
  summary += ",\"strict_initial\":" + format_double(first.strict_rate);
  summary += "}\n";
  put(e, out_dir, "summary.json", summary);
  agg(e, "f_final", format_double(last.capability));
  agg(e, "strict_final", format_double(last.strict_rate));
  agg(e, "consumed", std::to_string(last.consumed));
  return e;
}

Emitted run_kind_kappa(const ExperimentConfig& cfg, const std::string& out_dir,
                       Stream& main) {
  Emitted e;
  Theta theta0 = make_theta0(cfg);
  Trajectory traj = run_trajectory(cfg.battery, theta0, cfg.verifier,
                                   cfg.updater, cfg.experiment.n,
                                   cfg.experiment.budget,
                                   cfg.experiment.checkpoint_every, main);
  put(e, out_dir, "trajectory.csv", trajectory_csv(traj));
  double k = kappa_hat(traj);
  auto curve = kappa_curve(traj, cfg.experiment.window);
  put(e, out_dir, "kappa_curve.csv", kappa_curve_csv(curve));
  const Checkpoint& first = traj.checkpoints.front();
  const Checkpoint& last = traj.checkpoints.back();
  std::string summary = "{";
  summary += "\"consumed\":" + std::to_string(last.consumed);
  summary += ",\"f_final\":" + format_double(last.capability);
  summary += ",\"f_initial\":" + format_double(first.capability);
  summary += ",\"kappa_hat\":" + format_double(k);
  summary += ",\"window\":" + std::to_string(cfg.experiment.window);
  summary += "}\n";
  put(e, out_dir, "kappa.json", summary);
  agg(e, "kappa_hat", format_double(k));
  agg(e, "f_final", format_double(last.capability));
  agg(e, "consumed", std::to_string(last.consumed));
  return e;
}

Emitted run_kind_decompose(const ExperimentConfig& cfg,
                           const std::string& out_dir, Stream& main) {
  Emitted e;
  Theta theta0 = make_theta0(cfg);
  DecompositionReport rep =
      decompose(cfg.battery, theta0, cfg.verifier, cfg.experiment.n,
                cfg.experiment.replicas, main);
  put(e, out_dir, "decomposition.csv", decomposition_csv(rep));
  put(e, out_dir, "decomposition.json", decomposition_json(rep));
  agg(e, "rho", format_double(rep.rho));
  agg(e, "sigma_g2", format_double(rep.sigma_g2));
  agg(e, "sigma_v2", format_double(rep.sigma_v2));
  agg(e, "bias_norm", format_double(rep.bias_norm));
  agg(e, "g_star_norm2", format_double(rep.g_star_norm2));
  agg(e, "snr_g", format_double(rep.snr_g));
  agg(e, "snr_v", format_double(rep.snr_v));
  agg(e, "fisher_angle", format_double(rep.fisher_angle));
  return e;
}

Emitted run_kind_inequality(const ExperimentConfig& cfg,
                            const std::string& out_dir, Stream& main) {
  Emitted e;
  Theta theta0 = make_theta0(cfg);
  DecompositionReport dec =
      decompose(cfg.battery, theta0, cfg.verifier, cfg.experiment.n,
                cfg.experiment.replicas, main);
  double curv = curvature_along_steps(cfg.battery, theta0, cfg.verifier,
                                      cfg.updater, cfg.experiment.n, main);
  InequalityReport rep =
      check_inequality(dec.rho, dec.g_star_norm2, dec.sigma_g2, dec.sigma_v2,
                       curv, cfg.updater.eta);
  DeltaF df = measure_delta_f(cfg.battery, theta0, cfg.verifier, cfg.updater,
                              cfg.experiment.n, cfg.experiment.replicas, main);
  put(e, out_dir, "inequality.csv", inequality_csv(rep));
  put(e, out_dir, "decomposition.csv", decomposition_csv(dec));
  std::string summary = "{";
  summary += "\"curvature\":" + format_double(rep.curvature);
  summary += ",\"df_mean\":" + format_double(df.mean);
  summary += ",\"df_stderr\":" + format_double(df.stderror);
  summary += ",\"eta\":" + format_double(rep.eta);
  summary += ",\"eta_max\":" + format_double(rep.eta_max);
  summary += std::string(",\"holds\":") + (rep.holds ? "true" : "false");
  summary += ",\"lhs\":" + format_double(rep.lhs);
  summary += ",\"rhs\":" + format_double(rep.rhs);
  auto target = snr_v_star(std::max(dec.rho, 1e-12), dec.snr_g, rep.curvature,
                           rep.eta);
  if (target.has_value())
    summary += ",\"snr_v_star\":" + format_double(*target);
  else
    summary += ",\"snr_v_star\":\"unattainable\"";
  summary += "}\n";
  put(e, out_dir, "inequality.json", summary);
  agg(e, "eta", format_double(rep.eta));
  agg(e, "curvature", format_double(rep.curvature));
  agg(e, "lhs", format_double(rep.lhs));
  agg(e, "rhs", format_double(rep.rhs));
  agg(e, "holds", rep.holds ? "1" : "0");
  agg(e, "eta_max", format_double(rep.eta_max));
  agg(e, "rho", format_double(dec.rho));
  agg(e, "sigma_g2", format_double(dec.sigma_g2));
  agg(e, "sigma_v2", format_double(dec.sigma_v2));
  agg(e, "df_mean", format_double(df.mean));
  agg(e, "df_stderr", format_double(df.stderror));
  return e;
}

Emitted run_kind_slop(const ExperimentConfig& cfg, const std::string& out_dir,
                      Stream& main) {
  Emitted e;
  Theta theta0 = make_theta0(cfg);
  SlopReport rep = slop(cfg.battery, theta0, cfg.verifier, cfg.experiment.alpha,
                        cfg.experiment.beta_q, cfg.experiment.n, main);
  put(e, out_dir, "slop.csv", slop_csv(rep));
  put(e, out_dir, "slop.json", slop_json(rep));
  agg(e, "alpha", format_double(rep.alpha));
  agg(e, "beta_q", format_double(rep.beta_q));
  agg(e, "v_hi", format_double(rep.v_hi));
  agg(e, "s_lo", format_double(rep.s_lo));
  agg(e, "slop_mass", format_double(rep.slop_mass));
  return e;
}

Emitted run_kind_representation(const ExperimentConfig& cfg,
                                const std::string& out_dir, Stream& main) {
  Emitted e;
  Theta theta0 = make_theta0(cfg);
  Tangent v = grad_capability_exact(cfg.battery, theta0);
  PotentialTable table =
      implied_potential(cfg.battery, theta0, v, cfg.experiment.damping);
  Tangent back = reconstruct_field(cfg.battery, theta0, table);
  double err = (back - v).norm();
  put(e, out_dir, "potential.json",
      "{\"potential\":" + json_number_array(table.values) + "}\n");
  std::string summary = "{";
  summary += "\"damping\":" + format_double(cfg.experiment.damping);
  bool with_probe = cfg.verifier.kind == VerifierKind::Constant;
  if (with_probe) {
    NecessityProbe probe =
        necessity_probe(cfg.battery, theta0, cfg.verifier.const_value,
                        cfg.experiment.n, cfg.experiment.replicas, main);
    summary += ",\"necessity_mean_norm\":" + format_double(probe.mean_norm);
    summary += ",\"necessity_stderr\":" + format_double(probe.stderror);
    agg(e, "necessity_mean_norm", format_double(probe.mean_norm));
    agg(e, "necessity_stderr", format_double(probe.stderror));
  }
  summary += ",\"roundtrip_error\":" + format_double(err);
  summary += ",\"table_entries\":" + std::to_string(table.values.size());
  summary += "}\n";
  put(e, out_dir, "represent.json", summary);
  agg(e, "roundtrip_error", format_double(err));
  return e;
}

Emitted dispatch(const ExperimentConfig& cfg, ExperimentKind kind,
                 const std::string& out_dir, Stream& main) {
  switch (kind) {
    case ExperimentKind::Run: return run_kind_run(cfg, out_dir, main);
    case ExperimentKind::Kappa: return run_kind_kappa(cfg, out_dir, main);
    case ExperimentKind::Decompose: return run_kind_decompose(cfg, out_dir, main);
    case ExperimentKind::Inequality:
      return run_kind_inequality(cfg, out_dir, main);
    case ExperimentKind::Slop: return run_kind_slop(cfg, out_dir, main);
    case ExperimentKind::Representation:
      return run_kind_representation(cfg, out_dir, main);
    case ExperimentKind::Sweep:
      fail(ErrorCode::ValidationError, "sweep has no direct pipeline");
  }
  fail(ErrorCode::ValidationError, "unhandled experiment kind");
}

RunManifest finish_manifest(const ExperimentConfig& cfg,
                            const std::string& out_dir, RunManifest m,
                            std::vector<std::string> files) {
  m.config_hash = config_hash(cfg.canonical);
  m.tool_version = kToolVersion;
  m.seed = cfg.experiment.seed;
  m.outputs = std::move(files);
  m.finished = utc_now();
  nlohmann::json doc = {{"config_hash", m.config_hash},
                        {"finished", m.finished},
                        {"outputs", m.outputs},
                        {"seed", m.seed},
                        {"started", m.started},
                        {"tool_version", m.tool_version}};
  write_text_file(join(out_dir, "manifest.json"), doc.dump(2) + "\n");
  return m;
}

}  // namespace

RunManifest run_experiment(const ExperimentConfig& cfg,
                           const std::string& out_dir) {
  if (cfg.experiment.kind == ExperimentKind::Sweep)
    return run_sweep(cfg, out_dir);
  ensure_dir(out_dir);
  RunManifest m;
  m.started = utc_now();
  Stream main = Stream(cfg.experiment.seed).child(kStreamMain);
  Emitted e = dispatch(cfg, cfg.experiment.kind, out_dir, main);
  return finish_manifest(cfg, out_dir, std::move(m), std::move(e.files));
}

RunManifest run_sweep(const ExperimentConfig& cfg, const std::string& out_dir) {
  if (cfg.experiment.kind != ExperimentKind::Sweep)
    fail(ErrorCode::ValidationError, "run_sweep: experiment kind is not sweep");
  ensure_dir(out_dir);
  RunManifest m;
  m.started = utc_now();

  std::vector<std::string> files;
  std::string aggregate;
  for (size_t i = 0; i < cfg.experiment.sweep_values.size(); ++i) {
    double value = cfg.experiment.sweep_values[i];
    nlohmann::json sub_doc =
        set_config_value(cfg.canonical, cfg.experiment.sweep_param, value);
    // Sub-run seed: splitmix-style derivation, masked to the positive int64
    // range so it survives the JSON round trip.
    std::uint64_t sub_seed =
        derive_seed(cfg.experiment.seed, static_cast<std::uint64_t>(i)) &
        0x7FFFFFFFFFFFFFFFull;
    sub_doc["experiment"]["seed"] = sub_seed;
    sub_doc["experiment"]["kind"] =
        experiment_kind_name(cfg.experiment.base_kind);
    sub_doc["experiment"].erase("base_kind");
    sub_doc["experiment"].erase("sweep_param");
    sub_doc["experiment"].erase("sweep_values");
    ExperimentConfig sub_cfg = parse_config_json(sub_doc, "");

    std::string sub_name = "point_" + std::to_string(i);
    std::string sub_dir = join(out_dir, sub_name);
    ensure_dir(sub_dir);
    Stream main = Stream(sub_cfg.experiment.seed).child(kStreamMain);
    Emitted e = dispatch(sub_cfg, sub_cfg.experiment.kind, sub_dir, main);
    RunManifest sub_m;
    sub_m.started = m.started;
    finish_manifest(sub_cfg, sub_dir, std::move(sub_m), e.files);
    for (const auto& f : e.files) files.push_back(sub_name + "/" + f);
    files.push_back(sub_name + "/manifest.json");

    if (i == 0) {
      aggregate = "index,value,seed";
      for (const auto& col : e.agg_header) aggregate += "," + col;
      aggregate += "\n";
    }
    aggregate += std::to_string(i) + "," + format_double(value) + "," +
                 std::to_string(sub_seed);
    for (const auto& cell : e.agg_row) aggregate += "," + cell;
    aggregate += "\n";
  }
  write_text_file(join(out_dir, "aggregate.csv"), aggregate);
  files.push_back("aggregate.csv");
  return finish_manifest(cfg, out_dir, std::move(m), std::move(files));
}

}  // namespace gvu

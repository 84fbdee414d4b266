#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gvu/battery.hpp"
#include "gvu/gvu.hpp"
#include "gvu/manifold.hpp"

namespace gvu {

enum class ExperimentKind {
  Run,
  Sweep,
  Decompose,
  Inequality,
  Slop,
  Representation,
  Kappa,
};

const char* experiment_kind_name(ExperimentKind k);
ExperimentKind experiment_kind_from_name(const std::string& name);

struct ThetaInit {
  enum class Kind { Zeros, Explicit, Uniform } kind = Kind::Zeros;
  nlohmann::json logits;  // explicit
  double scale = 0.0;     // uniform
};

struct ExperimentParams {
  ExperimentKind kind = ExperimentKind::Run;
  int n = 0;
  int replicas = 0;
  std::uint64_t budget = 0;
  int checkpoint_every = 1;
  std::uint64_t seed = 0;
  double alpha = 0.0;            // slop
  double beta_q = 0.0;           // slop
  int window = 2;                // kappa curve
  double damping = 1e-10;        // representation solve
  ExperimentKind base_kind = ExperimentKind::Run;  // sweep payload
  std::string sweep_param;
  std::vector<double> sweep_values;
};

struct ExperimentConfig {
  Battery battery;
  ThetaInit theta0;
  VerifierSpec verifier;
  UpdaterSpec updater;
  ExperimentParams experiment;
  nlohmann::json canonical;  // the validated document, for hashing and sweeps
};

// Strict parse: unknown fields are rejected, required fields must be present
// (no implicit seed, eta, beta, or batch size), and every module-level
// validation runs eagerly. Battery may be inline or a path relative to the
// config file.
ExperimentConfig parse_config_file(const std::string& path);
ExperimentConfig parse_config_json(const nlohmann::json& doc,
                                   const std::string& base_dir);

// Materialize the initial policy (uniform init draws from the seed's
// dedicated child stream).
Theta make_theta0(const ExperimentConfig& cfg);

// Replace the numeric field addressed by a dot path ("updater.eta",
// "verifier.judges", "experiment.n") in a config document. Integer-valued
// fields require integral values.
nlohmann::json set_config_value(const nlohmann::json& doc,
                                const std::string& dot_path, double value);

// 16-hex digest of the canonical (sorted-key) document; stable across runs.
std::string config_hash(const nlohmann::json& doc);

}  // namespace gvu

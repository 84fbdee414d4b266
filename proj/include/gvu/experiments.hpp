#pragma once

#include <string>
#include <vector>

#include "gvu/config.hpp"

namespace gvu {

inline constexpr const char* kToolVersion = "gvu-lab 0.1.0";

struct RunManifest {
  std::string config_hash;
  std::string tool_version;
  std::uint64_t seed = 0;
  std::vector<std::string> outputs;  // paths relative to the out dir
  std::string started;
  std::string finished;
};

// Execute the configured experiment, writing its artifacts plus
// manifest.json under out_dir (created if missing). Sweeps are dispatched
// to run_sweep.
RunManifest run_experiment(const ExperimentConfig& cfg,
                           const std::string& out_dir);

// Point sweeps re-run the base experiment once per value with sub-seeds
// derive_seed(seed, index); sub-run artifacts land in point_<idx>/ and the
// aggregate CSV carries one row per value.
RunManifest run_sweep(const ExperimentConfig& cfg, const std::string& out_dir);

}  // namespace gvu

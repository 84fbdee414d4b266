// Command-line front end: one subcommand per experiment kind, each taking a
// JSON config and an output directory. Exit codes: 0 success, 2 bad
// config/arguments, 3 numeric failure, 4 io failure.
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "gvu/emit.hpp"
#include "gvu/error.hpp"
#include "gvu/experiments.hpp"
#include "gvu/parallel.hpp"

namespace {

struct Args {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  int threads = 0;
};

void add_common(CLI::App* cmd, Args& args) {
  cmd->add_option("--config", args.config_path, "experiment config (json)")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--out", args.out_dir, "output directory")->required();
  cmd->add_option("--seed", args.seed, "override the config seed");
  cmd->add_option("--threads", args.threads,
                  "worker thread cap (0 = hardware default)")
      ->check(CLI::NonNegativeNumber);
}

int run_verb(const Args& args, gvu::ExperimentKind verb_kind) {
  gvu::set_thread_cap(args.threads);
  gvu::ExperimentConfig cfg = gvu::parse_config_file(args.config_path);
  if (cfg.experiment.kind != verb_kind) {
    std::cerr << "gvu_lab: config kind '"
              << gvu::experiment_kind_name(cfg.experiment.kind)
              << "' does not match this subcommand\n";
    return 2;
  }
  if (args.seed.has_value()) {
    cfg.experiment.seed = *args.seed;
    cfg.canonical["experiment"]["seed"] = *args.seed;
  }
  gvu::RunManifest m = gvu::run_experiment(cfg, args.out_dir);
  std::cout << "wrote " << args.out_dir << " (" << m.outputs.size()
            << " files, config " << m.config_hash << ")\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"numerical laboratory for generate-verify-update training loops"};
  app.require_subcommand(1);

  struct Verb {
    const char* name;
    const char* help;
    gvu::ExperimentKind kind;
  };
  const Verb verbs[] = {
      {"run", "step the training loop and log the trajectory",
       gvu::ExperimentKind::Run},
      {"sweep", "repeat a base experiment over a parameter grid",
       gvu::ExperimentKind::Sweep},
      {"decompose", "split the mean update into signal, noise, and bias",
       gvu::ExperimentKind::Decompose},
      {"inequality", "test the step-size gain condition against measured gain",
       gvu::ExperimentKind::Inequality},
      {"slop", "measure high-potential low-score mass",
       gvu::ExperimentKind::Slop},
      {"represent", "fit and invert the scalar potential for a target field",
       gvu::ExperimentKind::Representation},
      {"kappa", "capability gained per sample consumed",
       gvu::ExperimentKind::Kappa},
  };

  Args args;
  for (const Verb& v : verbs) add_common(app.add_subcommand(v.name, v.help), args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  const CLI::App* active = app.get_subcommands().front();
  gvu::ExperimentKind kind = gvu::ExperimentKind::Run;
  for (const Verb& v : verbs)
    if (active->get_name() == v.name) kind = v.kind;

  try {
    return run_verb(args, kind);
  } catch (const gvu::Error& e) {
    std::cerr << "gvu_lab: " << e.what() << "\n";
    return gvu::Error::exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "gvu_lab: " << e.what() << "\n";
    return 2;
  }
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "gvu/config.hpp"
#include "helpers.hpp"

using gvu::ErrorCode;
using gvu::ExperimentConfig;
using gvu::ExperimentKind;
using nlohmann::json;
using testutil::fails_with;

namespace {

json battery_doc() {
  return json{{"tasks",
               {{{"prompt_id", "a"},
                 {"scores", {0.0, 1.0}},
                 {"threshold", 0.5},
                 {"family", "fa"}},
                {{"prompt_id", "b"},
                 {"scores", {0.1, 0.4, 0.9}},
                 {"threshold", 0.6},
                 {"family", "fb"}}}},
              {"weights", {0.25, 0.75}}};
}

json base_config() {
  return json{{"battery", battery_doc()},
              {"theta0", {{"kind", "zeros"}}},
              {"verifier", {{"kind", "oracle"}, {"beta", 0.0}}},
              {"updater", {{"mode", "reinforce"}, {"eta", 0.5}}},
              {"experiment",
               {{"kind", "run"},
                {"n", 16},
                {"budget", 160},
                {"checkpoint_every", 1},
                {"seed", 7}}}};
}

}  // namespace

TEST_CASE("the happy path parses and resolves every block") {
  ExperimentConfig cfg = gvu::parse_config_json(base_config(), "");
  CHECK(cfg.battery.task_count() == 2);
  CHECK(cfg.experiment.kind == ExperimentKind::Run);
  CHECK(cfg.experiment.n == 16);
  CHECK(cfg.experiment.seed == 7);
  CHECK(cfg.updater.eta == 0.5);
  CHECK(cfg.canonical.contains("battery"));
  CHECK(cfg.canonical["battery"].is_object());  // inlined even when given inline
}

TEST_CASE("unknown and missing fields are rejected at every level") {
  json bad = base_config();
  bad["surprise"] = 1;
  CHECK(fails_with(ErrorCode::ValidationError,
                   [&] { gvu::parse_config_json(bad, ""); }));

  json bad2 = base_config();
  bad2["verifier"]["tau"] = 0.1;  // oracle takes no tau
  CHECK(fails_with(ErrorCode::ValidationError,
                   [&] { gvu::parse_config_json(bad2, ""); }));

  json bad3 = base_config();
  bad3["experiment"].erase("seed");  // no implicit seed, ever
  CHECK(fails_with(ErrorCode::MissingParameter,
                   [&] { gvu::parse_config_json(bad3, ""); }));

  json bad4 = base_config();
  bad4["experiment"].erase("n");
  CHECK(fails_with(ErrorCode::MissingParameter,
                   [&] { gvu::parse_config_json(bad4, ""); }));

  json bad5 = base_config();
  bad5["updater"].erase("eta");
  CHECK(fails_with(ErrorCode::MissingParameter,
                   [&] { gvu::parse_config_json(bad5, ""); }));

  json bad6 = base_config();
  bad6["experiment"]["replicas"] = 8;  // run takes no replicas
  CHECK(fails_with(ErrorCode::ValidationError,
                   [&] { gvu::parse_config_json(bad6, ""); }));
}

TEST_CASE("per-kind requirements are enforced") {
  json dec = base_config();
  dec["experiment"] = {{"kind", "decompose"}, {"n", 32}, {"seed", 1}};
  CHECK(fails_with(ErrorCode::MissingParameter,
                   [&] { gvu::parse_config_json(dec, ""); }));
  dec["experiment"]["replicas"] = 1;  // too few
  CHECK(fails_with(ErrorCode::ValidationError,
                   [&] { gvu::parse_config_json(dec, ""); }));
  dec["experiment"]["replicas"] = 2;
  CHECK(gvu::parse_config_json(dec, "").experiment.replicas == 2);

  json slop = base_config();
  slop["experiment"] = {
      {"kind", "slop"}, {"n", 100}, {"alpha", 0.1}, {"beta_q", 0.2}, {"seed", 1}};
  CHECK(gvu::parse_config_json(slop, "").experiment.alpha == 0.1);

  json negseed = base_config();
  negseed["experiment"]["seed"] = -3;
  CHECK(fails_with(ErrorCode::ValidationError,
                   [&] { gvu::parse_config_json(negseed, ""); }));
}

TEST_CASE("sweep configs carry a base kind and a value grid") {
  json sw = base_config();
  sw["experiment"] = {{"kind", "sweep"},     {"base_kind", "run"},
                      {"sweep_param", "updater.eta"},
                      {"sweep_values", {0.1, 0.2}},
                      {"n", 8},              {"budget", 64},
                      {"checkpoint_every", 1}, {"seed", 5}};
  ExperimentConfig cfg = gvu::parse_config_json(sw, "");
  CHECK(cfg.experiment.kind == ExperimentKind::Sweep);
  CHECK(cfg.experiment.base_kind == ExperimentKind::Run);
  CHECK(cfg.experiment.sweep_values.size() == 2u);

  json nested = sw;
  nested["experiment"]["base_kind"] = "sweep";
  CHECK(fails_with(ErrorCode::ValidationError,
                   [&] { gvu::parse_config_json(nested, ""); }));

  json empty = sw;
  empty["experiment"]["sweep_values"] = json::array();
  CHECK(fails_with(ErrorCode::ValidationError,
                   [&] { gvu::parse_config_json(empty, ""); }));
}

TEST_CASE("explicit theta0 is validated against the battery shape") {
  json cfg = base_config();
  cfg["theta0"] = {{"kind", "explicit"}, {"logits", {{0.5}, {0.1, -0.2}}}};
  ExperimentConfig parsed = gvu::parse_config_json(cfg, "");
  gvu::Theta theta = gvu::make_theta0(parsed);
  CHECK(theta.coords()[0] == 0.5);
  CHECK(theta.coords()[2] == -0.2);

  json wrong = base_config();
  wrong["theta0"] = {{"kind", "explicit"}, {"logits", {{0.5}}}};
  CHECK(fails_with(ErrorCode::ShapeMismatch,
                   [&] { gvu::parse_config_json(wrong, ""); }));
}

TEST_CASE("uniform theta0 derives from the seed and stays inside the scale") {
  json cfg = base_config();
  cfg["theta0"] = {{"kind", "uniform"}, {"scale", 0.3}};
  ExperimentConfig a = gvu::parse_config_json(cfg, "");
  gvu::Theta t1 = gvu::make_theta0(a);
  gvu::Theta t2 = gvu::make_theta0(a);
  CHECK(t1.coords() == t2.coords());  // same seed, same init
  CHECK(t1.coords().cwiseAbs().maxCoeff() <= 0.3);

  cfg["experiment"]["seed"] = 8;
  ExperimentConfig b = gvu::parse_config_json(cfg, "");
  CHECK(gvu::make_theta0(b).coords() != t1.coords());
}

TEST_CASE("set_config_value navigates dot paths and keeps integer slots") {
  json doc = base_config();
  json out = gvu::set_config_value(doc, "updater.eta", 0.125);
  CHECK(out["updater"]["eta"] == 0.125);
  CHECK(doc["updater"]["eta"] == 0.5);  // input untouched

  json out2 = gvu::set_config_value(doc, "experiment.n", 32.0);
  CHECK(out2["experiment"]["n"] == 32);
  CHECK(out2["experiment"]["n"].is_number_integer());

  CHECK(fails_with(ErrorCode::ValidationError, [&] {
    gvu::set_config_value(doc, "experiment.n", 32.5);
  }));
  CHECK(fails_with(ErrorCode::BadParamPath, [&] {
    gvu::set_config_value(doc, "updater.rho", 1.0);
  }));
  CHECK(fails_with(ErrorCode::BadParamPath, [&] {
    gvu::set_config_value(doc, "updater.mode", 1.0);
  }));
  CHECK(fails_with(ErrorCode::BadParamPath, [&] {
    gvu::set_config_value(doc, "updater..eta", 1.0);
  }));
}

TEST_CASE("config hash is stable and sensitive") {
  json doc = base_config();
  std::string h1 = gvu::config_hash(doc);
  std::string h2 = gvu::config_hash(doc);
  CHECK(h1 == h2);
  CHECK(h1.size() == 16u);

  json other = gvu::set_config_value(doc, "updater.eta", 0.25);
  CHECK(gvu::config_hash(other) != h1);
}

TEST_CASE("battery paths resolve relative to the config file") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "gvu_cfg_test";
  fs::create_directories(dir);
  {
    std::ofstream bf(dir / "bat.json");
    bf << battery_doc().dump();
    json cfg = base_config();
    cfg["battery"] = "bat.json";
    std::ofstream cf(dir / "cfg.json");
    cf << cfg.dump();
  }
  ExperimentConfig cfg = gvu::parse_config_file((dir / "cfg.json").string());
  CHECK(cfg.battery.task_count() == 2);
  CHECK(cfg.canonical["battery"].is_object());  // path replaced by content

  CHECK(fails_with(ErrorCode::IoError, [&] {
    gvu::parse_config_file((dir / "missing.json").string());
  }));
  fs::remove_all(dir);
}

#include "gvu/config.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace gvu {

namespace {

using nlohmann::json;

const json& need(const json& obj, const char* field, const std::string& where) {
  if (!obj.contains(field))
    fail(ErrorCode::MissingParameter, where + ": missing '" + field + "'");
  return obj[field];
}

double need_number(const json& obj, const char* field, const std::string& where) {
  const json& v = need(obj, field, where);
  if (!v.is_number())
    fail(ErrorCode::ValidationError, where + "." + field + ": expected a number");
  return v.get<double>();
}

std::int64_t need_integer(const json& obj, const char* field,
                          const std::string& where) {
  const json& v = need(obj, field, where);
  if (!v.is_number_integer())
    fail(ErrorCode::ValidationError, where + "." + field + ": expected an integer");
  return v.get<std::int64_t>();
}

std::string need_string(const json& obj, const char* field,
                        const std::string& where) {
  const json& v = need(obj, field, where);
  if (!v.is_string())
    fail(ErrorCode::ValidationError, where + "." + field + ": expected a string");
  return v.get<std::string>();
}

void reject_unknown(const json& obj, const std::set<std::string>& allowed,
                    const std::string& where) {
  for (const auto& [key, _] : obj.items())
    if (!allowed.count(key))
      fail(ErrorCode::ValidationError, where + ": unknown field '" + key + "'");
}

VerifierSpec parse_verifier(const json& doc, const Battery& b) {
  if (!doc.is_object())
    fail(ErrorCode::ValidationError, "verifier: expected an object");
  VerifierSpec spec;
  spec.kind = verifier_kind_from_name(need_string(doc, "kind", "verifier"));
  spec.beta = need_number(doc, "beta", "verifier");

  std::set<std::string> allowed = {"kind", "beta"};
  switch (spec.kind) {
    case VerifierKind::Oracle:
      break;
    case VerifierKind::Noisy:
      allowed.insert("tau");
      spec.tau = need_number(doc, "tau", "verifier");
      break;
    case VerifierKind::Ensemble:
      allowed.insert("tau");
      allowed.insert("judges");
      spec.tau = need_number(doc, "tau", "verifier");
      spec.judges = static_cast<int>(need_integer(doc, "judges", "verifier"));
      break;
    case VerifierKind::Group:
      allowed.insert("eps");
      spec.eps = need_number(doc, "eps", "verifier");
      break;
    case VerifierKind::Discriminator: {
      allowed.insert("ref_logits");
      const json& ref = need(doc, "ref_logits", "verifier");
      spec.ref_theta =
          Theta::from_json(json{{"logits", ref}}, PolicyShape::of(b));
      break;
    }
    case VerifierKind::Constant:
      allowed.insert("const_value");
      allowed.insert("tau");
      spec.const_value = need_number(doc, "const_value", "verifier");
      if (doc.contains("tau")) spec.tau = need_number(doc, "tau", "verifier");
      break;
    case VerifierKind::Cold:
      allowed.insert("tau");
      allowed.insert("temp_ratio");
      spec.tau = need_number(doc, "tau", "verifier");
      spec.temp_ratio = need_number(doc, "temp_ratio", "verifier");
      break;
    case VerifierKind::Goodhart:
      allowed.insert("gamma");
      allowed.insert("junk_seed");
      spec.gamma = need_number(doc, "gamma", "verifier");
      spec.junk_seed =
          static_cast<std::uint64_t>(need_integer(doc, "junk_seed", "verifier"));
      break;
  }
  reject_unknown(doc, allowed, "verifier");
  spec.validate();
  return spec;
}

UpdaterSpec parse_updater(const json& doc) {
  if (!doc.is_object())
    fail(ErrorCode::ValidationError, "updater: expected an object");
  UpdaterSpec spec;
  std::string mode = need_string(doc, "mode", "updater");
  if (mode == "argmin")
    spec.mode = UpdaterMode::Argmin;
  else if (mode == "reinforce")
    spec.mode = UpdaterMode::Reinforce;
  else
    fail(ErrorCode::UnknownKind, "updater.mode '" + mode + "'");
  spec.eta = need_number(doc, "eta", "updater");
  std::set<std::string> allowed = {"mode", "eta", "lambda"};
  if (doc.contains("lambda")) spec.lambda = need_number(doc, "lambda", "updater");
  if (spec.mode == UpdaterMode::Argmin) {
    allowed.insert("inner_steps");
    allowed.insert("inner_tol");
    spec.inner_steps =
        static_cast<int>(need_integer(doc, "inner_steps", "updater"));
    spec.inner_tol = need_number(doc, "inner_tol", "updater");
  }
  reject_unknown(doc, allowed, "updater");
  spec.validate();
  return spec;
}

ThetaInit parse_theta0(const json& doc) {
  if (!doc.is_object())
    fail(ErrorCode::ValidationError, "theta0: expected an object");
  ThetaInit init;
  std::string kind = need_string(doc, "kind", "theta0");
  if (kind == "zeros") {
    reject_unknown(doc, {"kind"}, "theta0");
    init.kind = ThetaInit::Kind::Zeros;
  } else if (kind == "explicit") {
    reject_unknown(doc, {"kind", "logits"}, "theta0");
    init.kind = ThetaInit::Kind::Explicit;
    init.logits = need(doc, "logits", "theta0");
  } else if (kind == "uniform") {
    reject_unknown(doc, {"kind", "scale"}, "theta0");
    init.kind = ThetaInit::Kind::Uniform;
    init.scale = need_number(doc, "scale", "theta0");
    if (!(init.scale >= 0.0))
      fail(ErrorCode::ValidationError, "theta0.scale must be >= 0");
  } else {
    fail(ErrorCode::UnknownKind, "theta0.kind '" + kind + "'");
  }
  return init;
}

ExperimentParams parse_experiment(const json& doc) {
  if (!doc.is_object())
    fail(ErrorCode::ValidationError, "experiment: expected an object");
  ExperimentParams p;
  p.kind = experiment_kind_from_name(need_string(doc, "kind", "experiment"));

  std::set<std::string> allowed = {"kind", "seed"};
  std::int64_t seed = need_integer(doc, "seed", "experiment");
  if (seed < 0) fail(ErrorCode::ValidationError, "experiment.seed must be >= 0");
  p.seed = static_cast<std::uint64_t>(seed);

  auto want_n = [&] {
    allowed.insert("n");
    p.n = static_cast<int>(need_integer(doc, "n", "experiment"));
    if (p.n < 1) fail(ErrorCode::ValidationError, "experiment.n must be >= 1");
  };
  auto want_replicas = [&] {
    allowed.insert("replicas");
    p.replicas = static_cast<int>(need_integer(doc, "replicas", "experiment"));
    if (p.replicas < 2)
      fail(ErrorCode::ValidationError, "experiment.replicas must be >= 2");
  };
  auto want_budget = [&] {
    allowed.insert("budget");
    allowed.insert("checkpoint_every");
    std::int64_t budget = need_integer(doc, "budget", "experiment");
    if (budget < 0)
      fail(ErrorCode::ValidationError, "experiment.budget must be >= 0");
    p.budget = static_cast<std::uint64_t>(budget);
    p.checkpoint_every =
        static_cast<int>(need_integer(doc, "checkpoint_every", "experiment"));
    if (p.checkpoint_every < 1)
      fail(ErrorCode::ValidationError, "experiment.checkpoint_every must be >= 1");
  };

  ExperimentKind effective = p.kind;
  if (p.kind == ExperimentKind::Sweep) {
    allowed.insert("base_kind");
    allowed.insert("sweep_param");
    allowed.insert("sweep_values");
    p.base_kind =
        experiment_kind_from_name(need_string(doc, "base_kind", "experiment"));
    if (p.base_kind == ExperimentKind::Sweep)
      fail(ErrorCode::ValidationError, "experiment.base_kind cannot be sweep");
    p.sweep_param = need_string(doc, "sweep_param", "experiment");
    const json& values = need(doc, "sweep_values", "experiment");
    if (!values.is_array() || values.empty())
      fail(ErrorCode::ValidationError,
           "experiment.sweep_values must be a non-empty array");
    for (const auto& v : values) {
      if (!v.is_number())
        fail(ErrorCode::ValidationError, "experiment.sweep_values: not a number");
      p.sweep_values.push_back(v.get<double>());
    }
    effective = p.base_kind;
  }

  switch (effective) {
    case ExperimentKind::Run:
    case ExperimentKind::Kappa:
      want_n();
      want_budget();
      if (doc.contains("window")) {
        allowed.insert("window");
        p.window = static_cast<int>(need_integer(doc, "window", "experiment"));
        if (p.window < 2)
          fail(ErrorCode::ValidationError, "experiment.window must be >= 2");
      }
      break;
    case ExperimentKind::Decompose:
    case ExperimentKind::Inequality:
      want_n();
      want_replicas();
      break;
    case ExperimentKind::Slop:
      want_n();
      allowed.insert("alpha");
      allowed.insert("beta_q");
      p.alpha = need_number(doc, "alpha", "experiment");
      p.beta_q = need_number(doc, "beta_q", "experiment");
      break;
    case ExperimentKind::Representation:
      want_n();
      want_replicas();
      if (doc.contains("damping")) {
        allowed.insert("damping");
        p.damping = need_number(doc, "damping", "experiment");
        if (!(p.damping >= 0.0))
          fail(ErrorCode::ValidationError, "experiment.damping must be >= 0");
      }
      break;
    case ExperimentKind::Sweep:
      break;  // unreachable: base_kind is never sweep
  }
  reject_unknown(doc, allowed, "experiment");
  return p;
}

}  // namespace

const char* experiment_kind_name(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::Run: return "run";
    case ExperimentKind::Sweep: return "sweep";
    case ExperimentKind::Decompose: return "decompose";
    case ExperimentKind::Inequality: return "inequality";
    case ExperimentKind::Slop: return "slop";
    case ExperimentKind::Representation: return "representation";
    case ExperimentKind::Kappa: return "kappa";
  }
  return "?";
}

ExperimentKind experiment_kind_from_name(const std::string& name) {
  for (ExperimentKind k :
       {ExperimentKind::Run, ExperimentKind::Sweep, ExperimentKind::Decompose,
        ExperimentKind::Inequality, ExperimentKind::Slop,
        ExperimentKind::Representation, ExperimentKind::Kappa})
    if (name == experiment_kind_name(k)) return k;
  fail(ErrorCode::UnknownKind, "experiment kind '" + name + "'");
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open config '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::ParseError, std::string("config: ") + e.what());
  }
  return parse_config_json(doc,
                           std::filesystem::path(path).parent_path().string());
}

ExperimentConfig parse_config_json(const json& doc, const std::string& base_dir) {
  if (!doc.is_object()) fail(ErrorCode::ParseError, "config: not an object");
  reject_unknown(doc, {"battery", "theta0", "verifier", "updater", "experiment"},
                 "config");

  const json& jb = need(doc, "battery", "config");
  json battery_doc;
  if (jb.is_string()) {
    std::filesystem::path p(jb.get<std::string>());
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    std::ifstream in(p);
    if (!in) fail(ErrorCode::IoError, "cannot open battery '" + p.string() + "'");
    try {
      battery_doc = json::parse(in);
    } catch (const json::parse_error& e) {
      fail(ErrorCode::ParseError, std::string("battery: ") + e.what());
    }
  } else {
    battery_doc = jb;
  }

  ExperimentConfig cfg{Battery::from_json(battery_doc),
                       parse_theta0(need(doc, "theta0", "config")),
                       VerifierSpec{},
                       UpdaterSpec{},
                       ExperimentParams{},
                       json{}};
  cfg.verifier = parse_verifier(need(doc, "verifier", "config"), cfg.battery);
  cfg.updater = parse_updater(need(doc, "updater", "config"));
  cfg.experiment = parse_experiment(need(doc, "experiment", "config"));

  PolicyShape shape = PolicyShape::of(cfg.battery);
  if (shape.dim > 512)
    fail(ErrorCode::ValidationError,
         "policy dimension " + std::to_string(shape.dim) + " exceeds 512");
  if (cfg.theta0.kind == ThetaInit::Kind::Explicit)
    (void)Theta::from_json(json{{"logits", cfg.theta0.logits}}, shape);

  // Canonical document: the battery inlined, everything else as given.
  json canonical = doc;
  canonical["battery"] = cfg.battery.to_json();
  cfg.canonical = std::move(canonical);
  return cfg;
}

Theta make_theta0(const ExperimentConfig& cfg) {
  PolicyShape shape = PolicyShape::of(cfg.battery);
  switch (cfg.theta0.kind) {
    case ThetaInit::Kind::Zeros:
      return Theta::zeros(shape);
    case ThetaInit::Kind::Explicit:
      return Theta::from_json(nlohmann::json{{"logits", cfg.theta0.logits}},
                              shape);
    case ThetaInit::Kind::Uniform: {
      Stream rng = Stream(cfg.experiment.seed).child(kStreamTheta0);
      return Theta::uniform(shape, cfg.theta0.scale, rng);
    }
  }
  fail(ErrorCode::ValidationError, "theta0: unhandled kind");
}

nlohmann::json set_config_value(const json& doc, const std::string& dot_path,
                                double value) {
  std::vector<std::string> parts;
  std::stringstream ss(dot_path);
  std::string part;
  while (std::getline(ss, part, '.')) {
    if (part.empty())
      fail(ErrorCode::BadParamPath, "empty segment in '" + dot_path + "'");
    parts.push_back(part);
  }
  if (parts.empty()) fail(ErrorCode::BadParamPath, "empty parameter path");

  json out = doc;
  json* cur = &out;
  for (size_t i = 0; i + 1 < parts.size(); ++i) {
    if (!cur->is_object() || !cur->contains(parts[i]))
      fail(ErrorCode::BadParamPath, "no field '" + parts[i] + "' in '" +
                                        dot_path + "'");
    cur = &(*cur)[parts[i]];
  }
  const std::string& leaf = parts.back();
  if (!cur->is_object() || !cur->contains(leaf))
    fail(ErrorCode::BadParamPath, "no field '" + leaf + "' in '" + dot_path + "'");
  json& slot = (*cur)[leaf];
  if (!slot.is_number())
    fail(ErrorCode::BadParamPath, "'" + dot_path + "' is not numeric");
  if (slot.is_number_integer()) {
    auto rounded = static_cast<std::int64_t>(std::llround(value));
    if (std::abs(value - static_cast<double>(rounded)) > 1e-9)
      fail(ErrorCode::ValidationError,
           "'" + dot_path + "' is integral; got " + std::to_string(value));
    slot = rounded;
  } else {
    slot = value;
  }
  return out;
}

std::string config_hash(const json& doc) {
  // FNV-1a 64 over the canonical dump; nlohmann objects iterate sorted keys.
  std::string text = doc.dump();
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace gvu

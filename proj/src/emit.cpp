#include "gvu/emit.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace gvu {

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  for (const auto& l : split(text, '\n'))
    if (!l.empty()) out.push_back(l);
  return out;
}

double parse_double(const std::string& s, const char* what) {
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0')
    fail(ErrorCode::ParseError, std::string(what) + ": bad number '" + s + "'");
  return v;
}

long long parse_int(const std::string& s, const char* what) {
  char* end = nullptr;
  long long v = std::strtoll(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0')
    fail(ErrorCode::ParseError, std::string(what) + ": bad integer '" + s + "'");
  return v;
}

void expect_header(const std::string& got, const std::string& want,
                   const char* what) {
  if (got != want)
    fail(ErrorCode::ParseError, std::string(what) + ": unexpected header");
}

const char* kDecompositionHeader =
    "rho,sigma_g2,sigma_v2,bias_norm,g_star_norm2,snr_g,snr_v,fisher_angle,"
    "replicas";
const char* kInequalityHeader = "eta,curvature,lhs,rhs,holds,eta_max";
const char* kSlopHeader = "alpha,beta_q,n,v_hi,s_lo,slop_mass";
const char* kStepHeader =
    "step,n,consumed,mode,update_norm,pot_mean,pot_std,pot_min,pot_max,"
    "converged";

}  // namespace

std::string format_double(double v) {
  if (!std::isfinite(v)) fail(ErrorCode::IoError, "emit: non-finite value");
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string decomposition_csv(const DecompositionReport& r) {
  std::string out = kDecompositionHeader;
  out += '\n';
  out += format_double(r.rho) + "," + format_double(r.sigma_g2) + "," +
         format_double(r.sigma_v2) + "," + format_double(r.bias_norm) + "," +
         format_double(r.g_star_norm2) + "," + format_double(r.snr_g) + "," +
         format_double(r.snr_v) + "," + format_double(r.fisher_angle) + "," +
         std::to_string(r.replicas) + "\n";
  return out;
}

DecompositionReport decomposition_from_csv(const std::string& text) {
  auto rows = lines_of(text);
  if (rows.size() != 2)
    fail(ErrorCode::ParseError, "decomposition csv: expected header plus one row");
  expect_header(rows[0], kDecompositionHeader, "decomposition csv");
  auto f = split(rows[1], ',');
  if (f.size() != 9)
    fail(ErrorCode::ParseError, "decomposition csv: expected 9 fields");
  DecompositionReport r;
  r.rho = parse_double(f[0], "rho");
  r.sigma_g2 = parse_double(f[1], "sigma_g2");
  r.sigma_v2 = parse_double(f[2], "sigma_v2");
  r.bias_norm = parse_double(f[3], "bias_norm");
  r.g_star_norm2 = parse_double(f[4], "g_star_norm2");
  r.snr_g = parse_double(f[5], "snr_g");
  r.snr_v = parse_double(f[6], "snr_v");
  r.fisher_angle = parse_double(f[7], "fisher_angle");
  r.replicas = static_cast<int>(parse_int(f[8], "replicas"));
  return r;
}

std::string decomposition_json(const DecompositionReport& r) {
  std::string out = "{";
  out += "\"rho\":" + format_double(r.rho);
  out += ",\"sigma_g2\":" + format_double(r.sigma_g2);
  out += ",\"sigma_v2\":" + format_double(r.sigma_v2);
  out += ",\"bias_norm\":" + format_double(r.bias_norm);
  out += ",\"g_star_norm2\":" + format_double(r.g_star_norm2);
  out += ",\"snr_g\":" + format_double(r.snr_g);
  out += ",\"snr_v\":" + format_double(r.snr_v);
  out += ",\"fisher_angle\":" + format_double(r.fisher_angle);
  out += ",\"replicas\":" + std::to_string(r.replicas);
  out += "}\n";
  return out;
}

std::string inequality_csv(const InequalityReport& r) {
  std::string out = kInequalityHeader;
  out += '\n';
  out += format_double(r.eta) + "," + format_double(r.curvature) + "," +
         format_double(r.lhs) + "," + format_double(r.rhs) + "," +
         (r.holds ? "1" : "0") + "," + format_double(r.eta_max) + "\n";
  return out;
}

InequalityReport inequality_from_csv(const std::string& text) {
  auto rows = lines_of(text);
  if (rows.size() != 2)
    fail(ErrorCode::ParseError, "inequality csv: expected header plus one row");
  expect_header(rows[0], kInequalityHeader, "inequality csv");
  auto f = split(rows[1], ',');
  if (f.size() != 6)
    fail(ErrorCode::ParseError, "inequality csv: expected 6 fields");
  InequalityReport r;
  r.eta = parse_double(f[0], "eta");
  r.curvature = parse_double(f[1], "curvature");
  r.lhs = parse_double(f[2], "lhs");
  r.rhs = parse_double(f[3], "rhs");
  r.holds = parse_int(f[4], "holds") != 0;
  r.eta_max = parse_double(f[5], "eta_max");
  return r;
}

std::string inequality_json(const InequalityReport& r) {
  std::string out = "{";
  out += "\"eta\":" + format_double(r.eta);
  out += ",\"curvature\":" + format_double(r.curvature);
  out += ",\"lhs\":" + format_double(r.lhs);
  out += ",\"rhs\":" + format_double(r.rhs);
  out += std::string(",\"holds\":") + (r.holds ? "true" : "false");
  out += ",\"eta_max\":" + format_double(r.eta_max);
  out += "}\n";
  return out;
}

std::string slop_csv(const SlopReport& r) {
  std::string out = kSlopHeader;
  out += '\n';
  out += format_double(r.alpha) + "," + format_double(r.beta_q) + "," +
         std::to_string(r.n) + "," + format_double(r.v_hi) + "," +
         format_double(r.s_lo) + "," + format_double(r.slop_mass) + "\n";
  return out;
}

SlopReport slop_from_csv(const std::string& text) {
  auto rows = lines_of(text);
  if (rows.size() != 2)
    fail(ErrorCode::ParseError, "slop csv: expected header plus one row");
  expect_header(rows[0], kSlopHeader, "slop csv");
  auto f = split(rows[1], ',');
  if (f.size() != 6) fail(ErrorCode::ParseError, "slop csv: expected 6 fields");
  SlopReport r;
  r.alpha = parse_double(f[0], "alpha");
  r.beta_q = parse_double(f[1], "beta_q");
  r.n = static_cast<int>(parse_int(f[2], "n"));
  r.v_hi = parse_double(f[3], "v_hi");
  r.s_lo = parse_double(f[4], "s_lo");
  r.slop_mass = parse_double(f[5], "slop_mass");
  return r;
}

std::string slop_json(const SlopReport& r) {
  std::string out = "{";
  out += "\"alpha\":" + format_double(r.alpha);
  out += ",\"beta_q\":" + format_double(r.beta_q);
  out += ",\"n\":" + std::to_string(r.n);
  out += ",\"v_hi\":" + format_double(r.v_hi);
  out += ",\"s_lo\":" + format_double(r.s_lo);
  out += ",\"slop_mass\":" + format_double(r.slop_mass);
  out += "}\n";
  return out;
}

std::string step_records_csv(const std::vector<StepRecord>& records) {
  std::string out = kStepHeader;
  out += '\n';
  for (size_t i = 0; i < records.size(); ++i) {
    const StepRecord& r = records[i];
    out += std::to_string(i) + "," + std::to_string(r.n) + "," +
           std::to_string(r.consumed) + "," +
           (r.mode == UpdaterMode::Reinforce ? "reinforce" : "argmin") + "," +
           format_double(r.update_norm) + "," + format_double(r.pot_mean) +
           "," + format_double(r.pot_std) + "," + format_double(r.pot_min) +
           "," + format_double(r.pot_max) + "," + (r.converged ? "1" : "0") +
           "\n";
  }
  return out;
}

std::vector<StepRecord> step_records_from_csv(const std::string& text) {
  auto rows = lines_of(text);
  if (rows.empty()) fail(ErrorCode::ParseError, "step csv: empty");
  expect_header(rows[0], kStepHeader, "step csv");
  std::vector<StepRecord> out;
  for (size_t i = 1; i < rows.size(); ++i) {
    auto f = split(rows[i], ',');
    if (f.size() != 10) fail(ErrorCode::ParseError, "step csv: expected 10 fields");
    StepRecord r;
    r.n = static_cast<int>(parse_int(f[1], "n"));
    r.consumed = static_cast<std::uint64_t>(parse_int(f[2], "consumed"));
    if (f[3] == "reinforce")
      r.mode = UpdaterMode::Reinforce;
    else if (f[3] == "argmin")
      r.mode = UpdaterMode::Argmin;
    else
      fail(ErrorCode::ParseError, "step csv: bad mode '" + f[3] + "'");
    r.update_norm = parse_double(f[4], "update_norm");
    r.pot_mean = parse_double(f[5], "pot_mean");
    r.pot_std = parse_double(f[6], "pot_std");
    r.pot_min = parse_double(f[7], "pot_min");
    r.pot_max = parse_double(f[8], "pot_max");
    r.converged = parse_int(f[9], "converged") != 0;
    out.push_back(std::move(r));
  }
  return out;
}

std::string trajectory_csv(const Trajectory& t) {
  std::string out = "consumed,F,strict_rate";
  for (const auto& label : t.family_labels) {
    if (label.find(',') != std::string::npos ||
        label.find('\n') != std::string::npos)
      fail(ErrorCode::IoError, "trajectory csv: family label contains separator");
    out += ",family:" + label;
  }
  out += ",flags\n";
  for (const auto& cp : t.checkpoints) {
    out += std::to_string(cp.consumed) + "," + format_double(cp.capability) +
           "," + format_double(cp.strict_rate);
    for (double f : cp.family_capability) out += "," + format_double(f);
    if (cp.flags.find(',') != std::string::npos)
      fail(ErrorCode::IoError, "trajectory csv: flags contain separator");
    out += "," + cp.flags + "\n";
  }
  return out;
}

std::string kappa_curve_csv(const std::vector<KappaPoint>& curve) {
  std::string out = "consumed,kappa,span\n";
  for (const auto& pt : curve)
    out += std::to_string(pt.consumed) + "," + format_double(pt.kappa) + "," +
           std::to_string(pt.span) + "\n";
  return out;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot open '" + path + "' for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) fail(ErrorCode::IoError, "write failed for '" + path + "'");
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace gvu

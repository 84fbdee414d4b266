#pragma once

#include <string>
#include <vector>

#include "gvu/diagnostics.hpp"
#include "gvu/gvu.hpp"
#include "gvu/kappa.hpp"
#include "gvu/representation.hpp"

namespace gvu {

// All emission goes through these writers: fixed field order, floats at 17
// significant digits, newline-terminated, and any non-finite value is
// refused as an io error. CSV bodies are byte-stable for equal inputs.

std::string format_double(double v);  // %.17g, finite only

std::string decomposition_csv(const DecompositionReport& r);
DecompositionReport decomposition_from_csv(const std::string& text);
std::string decomposition_json(const DecompositionReport& r);

std::string inequality_csv(const InequalityReport& r);
InequalityReport inequality_from_csv(const std::string& text);
std::string inequality_json(const InequalityReport& r);

std::string slop_csv(const SlopReport& r);
SlopReport slop_from_csv(const std::string& text);
std::string slop_json(const SlopReport& r);

// Per-step log: one row per gvu_step.
std::string step_records_csv(const std::vector<StepRecord>& records);
std::vector<StepRecord> step_records_from_csv(const std::string& text);

// Trajectory: consumed, capability, strict rate, one family:<label> column
// per family, flags.
std::string trajectory_csv(const Trajectory& t);
std::string kappa_curve_csv(const std::vector<KappaPoint>& curve);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace gvu

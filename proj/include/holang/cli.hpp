#pragma once

// Batch front-end: `holang simulate|check|report`.
// Exit codes: 0 pass, 1 check failure, 2 usage/config error.

#include <iosfwd>
#include <optional>
#include <string>

#include "holang/checks.hpp"
#include "holang/model.hpp"

namespace holang::cli {

inline constexpr int kExitPass = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitUsage = 2;

// Deterministic CSV of correlation estimates for the configured process.
int cmd_simulate(const model::RunConfig& cfg, std::ostream& out);

// One verification suite; JSON report. `which` is one of
// susy, det, ward, whiteness, equivalence, ashift.
int cmd_check(const std::string& which, const checks::SuiteOptions& opts,
              const std::optional<model::RunConfig>& cfg, double inject_ar1,
              bool boundary_demo, std::ostream& out);

// Full acceptance suite; one pass/fail line per criterion plus a JSON
// aggregate.
int cmd_report(const checks::SuiteOptions& opts, std::ostream& json_out,
               std::ostream& line_out);

// argv entry point used by the binary.
int run(int argc, char** argv);

}  // namespace holang::cli

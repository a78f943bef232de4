#pragma once

// High-level verification suites. Each suite returns one result per
// sub-check with machine-readable details; the acceptance runner maps the
// suites onto the ten numbered criteria used by `holang report` and the
// acceptance tests.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "holang/model.hpp"

namespace holang::checks {

using json = nlohmann::ordered_json;

struct CheckResult {
  std::string name;
  json details;
  bool pass = false;
};

struct SuiteOptions {
  std::uint64_t seed = 20260810;
  bool quick = false;  // smaller ensembles, statistical threshold 6
  int threads = 0;

  double z_stat() const { return quick ? 6.0 : 3.0; }
  long scale(long K) const { return quick ? std::max<long>(K / 10, 500) : K; }
};

// Reference processes used across the suites.
model::ProcessSpec ou_linear();          // N=1, F = x
model::ProcessSpec ou_cubic();           // N=1, F = x + 0.3 x^3
model::ProcessSpec kramers_unit();       // N=2, gamma = 1, F = x
model::ProcessSpec kramers_cubic();      // N=2, gamma = 1, F = x + 0.3 x^3
model::ProcessSpec xfriction_cubic();    // N=2, gamma(x) = 1 + 3 x^2, F = x

std::vector<CheckResult> check_whiteness(const SuiteOptions& opts, double inject_ar1 = 0.0);
std::vector<CheckResult> check_equivalence(const SuiteOptions& opts);
std::vector<CheckResult> check_determinant(const SuiteOptions& opts, bool boundary_demo = false);
std::vector<CheckResult> check_susy(const SuiteOptions& opts);
std::vector<CheckResult> check_ward(const SuiteOptions& opts);
std::vector<CheckResult> check_ashift(const SuiteOptions& opts);

struct CriterionResult {
  int index = 0;
  std::string description;
  bool pass = false;
  json details;
};

// The ten acceptance criteria, in order.
std::vector<CriterionResult> run_acceptance(const SuiteOptions& opts);

bool all_pass(const std::vector<CheckResult>& results);

}  // namespace holang::checks

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "frackap/kernels.hpp"

namespace frackap {

enum class CheckStatus { Pass, Fail, Inconclusive };
std::string to_string(CheckStatus s);

struct CheckReport {
  std::string check_id;
  // Identity or inequality the check probes.
  std::string anchor;
  // Parameter tuple, e.g. "gamma=0.5;a=[1]".
  std::string params;
  CheckStatus status = CheckStatus::Inconclusive;
  // Residual for identities, estimated constant for inequalities.
  double value = 0.0;
  double tolerance = 0.0;
  // Worst-case input or diagnostic.
  std::string witness;
};

struct HarnessConfig {
  // Check ids to run; empty runs nothing.
  std::vector<std::string> checks;
  // Multiplies every kernel table value (fault injection).
  std::optional<double> table_scale;
  // Seeds the random (r, t) samples of the scaling check.
  std::uint64_t seed = 1;
  // Tolerance of the multiplier integrability check.
  double integrability_tol = 1e-3;

  // Every identity, inequality and integrability check.
  static HarnessConfig full();
};

std::vector<std::string> identity_check_ids();
std::vector<std::string> inequality_check_ids();

// One report per identity per parameter tuple, for the identity ids in cfg.
std::vector<CheckReport> run_identity_suite(const HarnessConfig& cfg);

struct InequalityConfig {
  // Exponents for intermediate_derivative and product_bound.
  std::vector<double> gammas{0.5, 1.5};
  // Allowed relative change of the constant under one grid refinement.
  double stability_tol = 0.10;
};

// Empirical supremum of the defining ratio on the fixed fixture family, on a
// grid and on its refinement. Pass iff finite and stable.
CheckReport estimate_inequality_constant(const std::string& check_id, const InequalityConfig& cfg = {});

struct IntegrabilityConfig {
  // Largest allowed share of the cumulative integral in one [R, 2R] block.
  double tol = 1e-3;
  double max_radius = 64.0;
};

// Weighted L^1 plateau of the inverse transform of (1 - j_alpha(u)) / u^2,
// computed for the multiplier damped by exp(-eps u^2) at two values of eps.
// The reported value is R0, the block start from which every block stays
// below tol; inconclusive when no such R0 is found or the two totals differ
// by tol or more.
CheckReport check_multiplier_integrability(double alpha, const IntegrabilityConfig& cfg = {});

// Runs every selected check (identity, inequality or "multiplier_integrability"),
// sorted by check_id.
std::vector<CheckReport> run_checks(const HarnessConfig& cfg);

// |S| int P(r, t) r^{d-1} dr from the table, tail included.
double kernel_mass(const KernelTable& table, double t);

void write_csv(std::ostream& os, const std::vector<CheckReport>& reports);
void write_text(std::ostream& os, const std::vector<CheckReport>& reports);

}  // namespace frackap

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "moelever/laws.hpp"

namespace moelever {

/// One training run. C must equal M*D within 1e-6 relative; loss positive.
struct RunRecord {
  std::string arch_id;
  double M = 0;
  double D = 0;
  double C = 0;
  double loss = 0;
  std::optional<double> lr;
  std::optional<double> batch_tokens;
  double A = 0;
  double G = 0;
  double S = 0;
};

/// Efficiency leverage measured at one MoE budget against a dense loss curve.
struct ELObservation {
  double A = 0;
  double G = 0;
  double C_moe = 0;
  double EL = 0;
};

struct FitReport {
  std::vector<double> parameters;
  double objective = 0;
  bool converged = false;
  int train_count = 0;
  int validation_count = 0;
  double validation_relative_error = 0;  // max |pred - obs| / obs over validation
  double train_relative_error = 0;       // max over training points
  std::vector<std::string> notes;
};

struct FitOptions {
  double huber_delta = 1e-3;   // robust threshold on log-space residuals
  double grad_tol = 1e-8;
  int max_iterations = 500;    // per start
  double log_base_C = 10.0;    // bases used when fitting the joint EL law
  double log_base_G = 2.0;
};

struct PowerLawFit {
  PowerLaw law;
  FitReport report;
};

struct LogPolyFit {
  LogPolyLaw law;
  FitReport report;
};

struct ELJointFit {
  ELCoefficients coefficients;
  FitReport report;
};

/// Robust power-law fit of y = k*x^p: Huber loss on log-residuals minimized by
/// BFGS from a fixed set of starts (closed-form least-squares solution first,
/// then a coarse exponent grid); best final objective wins, ties broken by
/// start order. Deterministic for identical inputs.
PowerLawFit fit_power_law(std::span<const std::pair<double, double>> points,
                          const FitOptions& options = {});

/// Robust fit of log EL = a_G + b_G*(log2 G*(log2 G + c_G)) over (G, EL) pairs.
LogPolyFit fit_log_polynomial(std::span<const std::pair<double, double>> points,
                              const FitOptions& options = {});

/// Joint EL-law fit. Observations with EL < train_max_el train the model; the
/// rest form a held-out validation set whose relative error the report carries.
/// A_start and A_max are optimized in log space, A_max bounded below by 1.
ELJointFit fit_el_joint(std::span<const ELObservation> observations,
                        double train_max_el = 6.0, const FitOptions& options = {});

/// Per compute budget (exact equality on C), keeps runs whose loss is within
/// the given relative tolerance of the group minimum. The minimum itself is
/// always kept; output preserves input order and is idempotent.
std::vector<RunRecord> near_optimal_filter(const std::vector<RunRecord>& runs,
                                           double tolerance = 0.0025);

/// Inverts a fitted dense loss curve (p < 0) at each MoE run's loss to find the
/// dense compute reaching it, and reports EL = C_dense / C_moe. Records whose
/// loss has no positive preimage are skipped with a warning.
std::vector<ELObservation> el_from_loss_curves(const std::vector<RunRecord>& moe_runs,
                                               const PowerLaw& dense_loss_law,
                                               std::vector<std::string>* warnings = nullptr);

/// Discrete alternative for raw curves: pairs each MoE run with the dense run
/// of nearest loss and accepts the pair when |loss difference| <= epsilon.
std::vector<ELObservation> el_from_matched_runs(const std::vector<RunRecord>& moe_runs,
                                                const std::vector<RunRecord>& dense_runs,
                                                double epsilon,
                                                std::vector<std::string>* warnings = nullptr);

/// Deterministic synthetic runs: log-uniform x grid over [x_min, x_max],
/// y = law(x)*exp(eps) with eps ~ Normal(0, noise_sigma) from a seeded
/// generator (identical seed, identical output). x maps to C; the noised law
/// value is stored as both M and loss, with D = C/M.
std::vector<RunRecord> synth_runs(const PowerLaw& law, int n, double noise_sigma,
                                  std::uint64_t seed, double x_min = 1e18,
                                  double x_max = 1e21);

}  // namespace moelever

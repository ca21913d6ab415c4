// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace moelever {

/// y = k * x^p.
struct PowerLaw {
  double k = 1.0;
  double p = 0.0;

  double operator()(double x) const { return k * std::pow(x, p); }
};

/// Joint efficiency-leverage law parameters:
///   EL(A, G, C) = A_hat ^ (alpha + gamma*log(G)^2 + beta*log(G)),
///   alpha = a + d*log(C),
/// with A_hat the saturating transform of the activation ratio. Log bases are
/// part of the coefficient set; defaults are base 10 for C and base 2 for G,
/// the combination that reproduces the published optimum near G = 11.3 and the
/// headline leverage above 7 at 1e22 FLOPs.
struct ELCoefficients {
  double a = 1.23;
  double d = -7.61e-2;
  double gamma = 1.67e-2;
  double beta = -1.17e-1;
  double A_start = 1.63e-2;
  double A_max = 5.28e16;
  double log_base_C = 10.0;
  double log_base_G = 2.0;
};

/// Fitted defaults shipped with the library (see ELCoefficients initializers).
ELCoefficients default_el_coefficients();

/// log EL = a_G + b_G * (log2(G) * (log2(G) + c_G)). Interior maximum at
/// log2(G) = -c_G / 2 when b_G < 0.
struct LogPolyLaw {
  double a_G = 0.0;
  double b_G = 0.0;
  double c_G = 0.0;
};

struct HyperParams {
  double learning_rate = 0.0;
  double batch_tokens = 0.0;  // batch size in tokens
};

enum class ModelFamily { dense, moe };

struct Allocation {
  double M_opt = 0.0;  // FLOPs per token
  double D_opt = 0.0;  // tokens
};

/// Default single-variable laws: optimal learning rate / batch size vs C, and
/// compute-optimal (M, D) allocation vs C per family.
PowerLaw default_lr_law();            // 1.1576 * C^-0.1529
PowerLaw default_batch_law();         // 0.0694 * C^0.3644
PowerLaw default_alloc_M(ModelFamily family);
PowerLaw default_alloc_D(ModelFamily family);

HyperParams hyperparams_for_budget(double C);
HyperParams hyperparams_for_budget(double C, const PowerLaw& lr_law, const PowerLaw& batch_law);

Allocation allocation_for_budget(double C, ModelFamily family);

/// Saturating transform of the activation ratio:
///   1/A_hat = 1/(A + (1/A_start - 1/A_max)^-1) + 1/A_max.
double saturate_activation(double A, const ELCoefficients& coeffs = ELCoefficients{});

/// Exponent of the joint law: a + d*logC + gamma*logG^2 + beta*logG.
double el_exponent(double G, double C, const ELCoefficients& coeffs = ELCoefficients{});

/// Joint efficiency leverage.
double el_joint(double A, double G, double C, const ELCoefficients& coeffs = ELCoefficients{});

double el_separable_A(double A_hat, double a_A);
double el_separable_G(double G, const LogPolyLaw& law);
double el_separable_C(double C, double a_C, double c_C);

/// Interior EL-maximizing granularity, base_G^(-beta/(2*gamma)); empty when
/// gamma <= 0 (no interior optimum).
std::optional<double> optimal_granularity(const ELCoefficients& coeffs = ELCoefficients{});

/// Dense model scale reaching the MoE's loss at equal data: EL * M_moe.
double dense_equivalent(double M_moe, double el);

/// Soft domain guard. The laws were fitted on C in [3e17, 6e20] and are used
/// extrapolated to ~1e22; far outside [1e16, 1e26] a warning is flagged, never
/// an error.
std::vector<std::string> el_domain_warnings(double A, double G, double C);

/// log(x) in the given base; bases 10, 2 and e use the exact libm routines.
double log_in_base(double x, double base);

}  // namespace moelever

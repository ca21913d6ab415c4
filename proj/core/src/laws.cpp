// SPDX-License-Identifier: Apache-2.0

#include "moelever/laws.hpp"

#include "moelever/errors.hpp"

namespace moelever {

ELCoefficients default_el_coefficients() { return ELCoefficients{}; }

PowerLaw default_lr_law() { return {1.1576, -0.1529}; }
PowerLaw default_batch_law() { return {0.0694, 0.3644}; }

PowerLaw default_alloc_M(ModelFamily family) {
  return family == ModelFamily::dense ? PowerLaw{0.0655, 0.5422} : PowerLaw{0.1915, 0.5095};
}

PowerLaw default_alloc_D(ModelFamily family) {
  return family == ModelFamily::dense ? PowerLaw{15.2582, 0.4578} : PowerLaw{5.2232, 0.4905};
}

HyperParams hyperparams_for_budget(double C) {
  return hyperparams_for_budget(C, default_lr_law(), default_batch_law());
}

HyperParams hyperparams_for_budget(double C, const PowerLaw& lr_law, const PowerLaw& batch_law) {
  if (!(C > 0)) throw ValidationError("hyperparams_for_budget: C must be positive");
  return {lr_law(C), batch_law(C)};
}

Allocation allocation_for_budget(double C, ModelFamily family) {
  if (!(C > 0)) throw ValidationError("allocation_for_budget: C must be positive");
  return {default_alloc_M(family)(C), default_alloc_D(family)(C)};
}

double log_in_base(double x, double base) {
  if (base == 10.0) return std::log10(x);
  if (base == 2.0) return std::log2(x);
  return std::log(x) / std::log(base);
}

double saturate_activation(double A, const ELCoefficients& c) {
  if (!(A > 0)) throw ValidationError("saturate_activation: A must be positive");
  const double pivot = 1.0 / (1.0 / c.A_start - 1.0 / c.A_max);
  return 1.0 / (1.0 / (A + pivot) + 1.0 / c.A_max);
}

double el_exponent(double G, double C, const ELCoefficients& c) {
  if (!(G > 0)) throw ValidationError("el_exponent: G must be positive");
  if (!(C > 0)) throw ValidationError("el_exponent: C must be positive");
  const double alpha = c.a + c.d * log_in_base(C, c.log_base_C);
  const double g = log_in_base(G, c.log_base_G);
  return alpha + c.gamma * (g * g) + c.beta * g;
}

double el_joint(double A, double G, double C, const ELCoefficients& c) {
  if (!(A > 0) || A > 1.0) throw ValidationError("el_joint: A must be in (0, 1]");
  return std::pow(saturate_activation(A, c), el_exponent(G, C, c));
}

double el_separable_A(double A_hat, double a_A) {
  if (!(A_hat > 0)) throw ValidationError("el_separable_A: A_hat must be positive");
  return std::pow(A_hat, a_A);
}

double el_separable_G(double G, const LogPolyLaw& law) {
  if (!(G > 0)) throw ValidationError("el_separable_G: G must be positive");
  const double g = std::log2(G);
  return std::exp(law.a_G + law.b_G * (g * (g + law.c_G)));
}

double el_separable_C(double C, double a_C, double c_C) {
  if (!(C > 0)) throw ValidationError("el_separable_C: C must be positive");
  return std::exp(c_C) * std::pow(C, a_C);
}

std::optional<double> optimal_granularity(const ELCoefficients& c) {
  if (!(c.gamma > 0)) return std::nullopt;
  return std::pow(c.log_base_G, -c.beta / (2.0 * c.gamma));
}

double dense_equivalent(double M_moe, double el) {
  if (!(M_moe > 0) || !(el > 0))
    throw ValidationError("dense_equivalent: inputs must be positive");
  return el * M_moe;
}

std::vector<std::string> el_domain_warnings(double A, double G, double C) {
  std::vector<std::string> w;
  if (C < 1e16 || C > 1e26)
    w.push_back("compute budget far outside the supported range [1e16, 1e26]; "
                "fitted on [3e17, 6e20], extrapolated to ~1e22");
  if (A < 0.008) w.push_back("activation ratio below the tested span (A >= 0.008)");
  if (G > 16.0) w.push_back("granularity above the tested span (G <= 16)");
  return w;
}

}  // namespace moelever

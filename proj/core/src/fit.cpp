// SPDX-License-Identifier: Apache-2.0

#include "moelever/fit.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include "moelever/errors.hpp"
#include "minimize.hpp"

namespace moelever {

namespace {

constexpr double kPi = 3.14159265358979323846;

double huber(double r, double delta) {
  const double a = std::abs(r);
  return a <= delta ? 0.5 * r * r : delta * (a - 0.5 * delta);
}

double huber_slope(double r, double delta) { return std::clamp(r, -delta, delta); }

// Picks the best start by final objective; ties keep the earliest start.
// Throws when no start converged.
detail::MinimizeResult run_starts(const detail::ValueGrad& fg,
                                  const std::vector<std::vector<double>>& starts,
                                  const FitOptions& opt) {
  detail::MinimizeResult best;
  bool any_converged = false;
  bool have_best = false;
  for (const auto& x0 : starts) {
    auto r = detail::bfgs_minimize(fg, x0, opt.grad_tol, opt.max_iterations);
    any_converged = any_converged || r.converged;
    if (!have_best || r.f < best.f) {
      best = r;
      have_best = true;
    }
  }
  if (!any_converged)
    throw FitError(FitError::Kind::non_convergence, "no optimizer start converged");
  return best;
}

// Least-squares solve of a small dense normal system via Gaussian elimination
// with partial pivoting. Returns false when singular.
bool solve_dense(std::vector<double> a, std::vector<double> b, std::vector<double>& x) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a[r * n + col]) > std::abs(a[pivot * n + col])) pivot = r;
    if (std::abs(a[pivot * n + col]) < 1e-300) return false;
    if (pivot != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(a[col * n + c], a[pivot * n + c]);
      std::swap(b[col], b[pivot]);
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      const double factor = a[r * n + col] / a[col * n + col];
      for (std::size_t c = col; c < n; ++c) a[r * n + c] -= factor * a[col * n + c];
      b[r] -= factor * b[col];
    }
  }
  x.assign(n, 0.0);
  for (std::size_t r = n; r-- > 0;) {
    double v = b[r];
    for (std::size_t c = r + 1; c < n; ++c) v -= a[r * n + c] * x[c];
    x[r] = v / a[r * n + r];
  }
  return true;
}

}  // namespace

PowerLawFit fit_power_law(std::span<const std::pair<double, double>> points,
                          const FitOptions& opt) {
  if (points.size() < 3)
    throw FitError(FitError::Kind::insufficient_data, "fit_power_law needs at least 3 points");
  std::vector<double> lx(points.size()), ly(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!(points[i].first > 0) || !(points[i].second > 0))
      throw ValidationError("fit_power_law: points must be positive");
    lx[i] = std::log(points[i].first);
    ly[i] = std::log(points[i].second);
  }

  // theta = (log k, p)
  const auto fg = [&](const std::vector<double>& t, std::vector<double>* g) {
    double f = 0;
    if (g) g->assign(2, 0.0);
    for (std::size_t i = 0; i < lx.size(); ++i) {
      const double r = ly[i] - (t[0] + t[1] * lx[i]);
      f += huber(r, opt.huber_delta);
      if (g) {
        const double h = huber_slope(r, opt.huber_delta);
        (*g)[0] -= h;
        (*g)[1] -= h * lx[i];
      }
    }
    return f;
  };

  // ordinary least squares in log space as the primary start
  const double n = static_cast<double>(lx.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sx += lx[i];
    sy += ly[i];
    sxx += lx[i] * lx[i];
    sxy += lx[i] * ly[i];
  }
  const double denom = n * sxx - sx * sx;
  std::vector<std::vector<double>> starts;
  if (std::abs(denom) > 1e-300) {
    const double p0 = (n * sxy - sx * sy) / denom;
    starts.push_back({(sy - p0 * sx) / n, p0});
  }
  for (double p0 : {-1.0, -0.5, 0.0, 0.5, 1.0}) starts.push_back({sy / n, p0});

  const auto best = run_starts(fg, starts, opt);
  PowerLawFit out;
  out.law = {std::exp(best.x[0]), best.x[1]};
  out.report.parameters = {out.law.k, out.law.p};
  out.report.objective = best.f;
  out.report.converged = best.converged;
  out.report.train_count = static_cast<int>(points.size());
  return out;
}

LogPolyFit fit_log_polynomial(std::span<const std::pair<double, double>> points,
                              const FitOptions& opt) {
  if (points.size() < 4)
    throw FitError(FitError::Kind::insufficient_data,
                   "fit_log_polynomial needs at least 4 points");
  std::vector<double> g2(points.size()), ly(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!(points[i].first > 0) || !(points[i].second > 0))
      throw ValidationError("fit_log_polynomial: points must be positive");
    g2[i] = log_in_base(points[i].first, opt.log_base_G);
    ly[i] = std::log(points[i].second);
  }

  // theta = (a_G, b_G, c_G); model ly = a + b*(g^2 + c*g)
  const auto fg = [&](const std::vector<double>& t, std::vector<double>* g) {
    double f = 0;
    if (g) g->assign(3, 0.0);
    for (std::size_t i = 0; i < g2.size(); ++i) {
      const double gi = g2[i];
      const double r = ly[i] - (t[0] + t[1] * (gi * gi + t[2] * gi));
      f += huber(r, opt.huber_delta);
      if (g) {
        const double h = huber_slope(r, opt.huber_delta);
        (*g)[0] -= h;
        (*g)[1] -= h * (gi * gi + t[2] * gi);
        (*g)[2] -= h * t[1] * gi;
      }
    }
    return f;
  };

  // linearized least squares (a, b, b*c) seeds the search
  std::vector<std::vector<double>> starts;
  {
    std::vector<double> ata(9, 0.0), atb(3, 0.0), sol;
    for (std::size_t i = 0; i < g2.size(); ++i) {
      const double phi[3] = {1.0, g2[i] * g2[i], g2[i]};
      for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) ata[r * 3 + c] += phi[r] * phi[c];
        atb[r] += phi[r] * ly[i];
      }
    }
    if (solve_dense(ata, atb, sol) && std::abs(sol[1]) > 1e-12)
      starts.push_back({sol[0], sol[1], sol[2] / sol[1]});
  }
  double mean_ly = 0;
  for (double v : ly) mean_ly += v;
  mean_ly /= static_cast<double>(ly.size());
  starts.push_back({mean_ly, -0.05, -7.0});
  starts.push_back({mean_ly, 0.05, -7.0});
  starts.push_back({mean_ly, -0.01, 0.0});

  const auto best = run_starts(fg, starts, opt);
  LogPolyFit out;
  out.law = {best.x[0], best.x[1], best.x[2]};
  out.report.parameters = {out.law.a_G, out.law.b_G, out.law.c_G};
  out.report.objective = best.f;
  out.report.converged = best.converged;
  out.report.train_count = static_cast<int>(points.size());

  double g_lo = g2[0], g_hi = g2[0];
  for (double v : g2) {
    g_lo = std::min(g_lo, v);
    g_hi = std::max(g_hi, v);
  }
  if (out.law.b_G >= 0) {
    out.report.notes.push_back("no interior optimum in data span (b_G >= 0)");
  } else {
    const double g_star = -out.law.c_G / 2.0;
    if (g_star < g_lo || g_star > g_hi)
      out.report.notes.push_back("no interior optimum in data span (vertex outside data)");
  }
  return out;
}

namespace {

struct JointData {
  std::vector<double> lnel;  // ln EL
  std::vector<double> lc;    // log_base_C C
  std::vector<double> g;     // log_base_G G
  std::vector<double> A;
};

// theta = (a, d, gamma, beta, ln A_start, ln(A_max - 1))
double joint_objective(const JointData& data, const std::vector<double>& t,
                       std::vector<double>* grad, double delta) {
  const double A_start = std::exp(t[4]);
  const double A_max = 1.0 + std::exp(t[5]);
  const double inv_diff = 1.0 / A_start - 1.0 / A_max;
  if (grad) grad->assign(6, 0.0);
  if (!(inv_diff > 0) || !std::isfinite(inv_diff)) return 1e100;
  const double P = 1.0 / inv_diff;

  double f = 0;
  for (std::size_t i = 0; i < data.lnel.size(); ++i) {
    const double Q = data.A[i] + P;
    if (!(Q > 0)) return 1e100;
    const double L = std::log(Q) + std::log(A_max) - std::log(A_max + Q);  // ln A_hat
    const double gi = data.g[i];
    const double X = t[0] + t[1] * data.lc[i] + t[2] * gi * gi + t[3] * gi;
    const double r = data.lnel[i] - X * L;
    f += huber(r, delta);
    if (grad) {
      const double h = huber_slope(r, delta);
      (*grad)[0] -= h * L;
      (*grad)[1] -= h * data.lc[i] * L;
      (*grad)[2] -= h * gi * gi * L;
      (*grad)[3] -= h * gi * L;
      const double dL_dQ = 1.0 / Q - 1.0 / (A_max + Q);
      const double dL_ds = dL_dQ * (P * P / A_start);  // chain through A_start = e^t4
      const double dL_dAmax = dL_dQ * (-P * P / (A_max * A_max)) +
                              (1.0 / A_max - 1.0 / (A_max + Q));
      const double dL_dm = dL_dAmax * (A_max - 1.0);   // chain through A_max = 1 + e^t5
      (*grad)[4] -= h * X * dL_ds;
      (*grad)[5] -= h * X * dL_dm;
    }
  }
  return f;
}

// Exponent coefficients are linear given the saturation parameters; solving
// them in closed form seeds the search ahead of the fixed grid.
bool profile_linear_start(const JointData& data, double A_start, double A_max,
                          std::vector<double>& start) {
  const double inv_diff = 1.0 / A_start - 1.0 / A_max;
  if (!(inv_diff > 0)) return false;
  const double P = 1.0 / inv_diff;
  std::vector<double> ata(16, 0.0), atb(4, 0.0), sol;
  for (std::size_t i = 0; i < data.lnel.size(); ++i) {
    const double Q = data.A[i] + P;
    if (!(Q > 0)) return false;
    const double L = std::log(Q) + std::log(A_max) - std::log(A_max + Q);
    const double gi = data.g[i];
    const double phi[4] = {L, data.lc[i] * L, gi * gi * L, gi * L};
    for (int r = 0; r < 4; ++r) {
      for (int c = 0; c < 4; ++c) ata[r * 4 + c] += phi[r] * phi[c];
      atb[r] += phi[r] * data.lnel[i];
    }
  }
  if (!solve_dense(ata, atb, sol)) return false;
  start = {sol[0], sol[1], sol[2], sol[3], std::log(A_start), std::log(A_max - 1.0)};
  return true;
}

}  // namespace

ELJointFit fit_el_joint(std::span<const ELObservation> observations, double train_max_el,
                        const FitOptions& opt) {
  JointData train;
  std::vector<ELObservation> train_obs;
  std::vector<ELObservation> validation;
  for (const auto& obs : observations) {
    if (!(obs.EL > 0) || !(obs.A > 0) || obs.A > 1.0 || !(obs.G > 0) || !(obs.C_moe > 0))
      throw ValidationError("fit_el_joint: observations must have positive EL, C, G and A in (0, 1]");
    if (obs.EL < train_max_el) {
      train.lnel.push_back(std::log(obs.EL));
      train.lc.push_back(log_in_base(obs.C_moe, opt.log_base_C));
      train.g.push_back(log_in_base(obs.G, opt.log_base_G));
      train.A.push_back(obs.A);
      train_obs.push_back(obs);
    } else {
      validation.push_back(obs);
    }
  }
  if (train.lnel.empty() || validation.empty())
    throw FitError(FitError::Kind::bad_split,
                   "fit_el_joint: train/validation split left an empty set (threshold EL < " +
                       std::to_string(train_max_el) + ")");
  if (train.lnel.size() < 6)
    throw FitError(FitError::Kind::insufficient_data,
                   "fit_el_joint needs at least 6 training observations");

  const auto fg = [&](const std::vector<double>& t, std::vector<double>* g) {
    return joint_objective(train, t, g, opt.huber_delta);
  };

  std::vector<std::vector<double>> starts;
  for (double As : {0.005, 0.02, 0.05}) {
    std::vector<double> s;
    if (profile_linear_start(train, As, 1e16, s)) starts.push_back(std::move(s));
  }
  const double m0 = std::log(1e16 - 1.0);
  for (double a0 : {0.5, 1.0, 1.5})
    for (double d0 : {-0.15, -0.075, 0.0})
      for (double gam0 : {0.005, 0.02})
        for (double bet0 : {-0.2, -0.05})
          for (double As0 : {0.005, 0.02, 0.05})
            starts.push_back({a0, d0, gam0, bet0, std::log(As0), m0});

  const auto best = run_starts(fg, starts, opt);

  ELJointFit out;
  out.coefficients.a = best.x[0];
  out.coefficients.d = best.x[1];
  out.coefficients.gamma = best.x[2];
  out.coefficients.beta = best.x[3];
  out.coefficients.A_start = std::exp(best.x[4]);
  out.coefficients.A_max = 1.0 + std::exp(best.x[5]);
  out.coefficients.log_base_C = opt.log_base_C;
  out.coefficients.log_base_G = opt.log_base_G;

  out.report.parameters = {out.coefficients.a,    out.coefficients.d,
                           out.coefficients.gamma, out.coefficients.beta,
                           out.coefficients.A_start, out.coefficients.A_max};
  out.report.objective = best.f;
  out.report.converged = best.converged;
  out.report.train_count = static_cast<int>(train.lnel.size());
  out.report.validation_count = static_cast<int>(validation.size());
  if (!best.converged) out.report.notes.push_back("parameters unusable: optimizer did not converge");

  double max_val_err = 0;
  for (const auto& obs : validation) {
    const double pred = el_joint(obs.A, obs.G, obs.C_moe, out.coefficients);
    max_val_err = std::max(max_val_err, std::abs(pred - obs.EL) / obs.EL);
  }
  out.report.validation_relative_error = max_val_err;
  double max_train_err = 0;
  for (const auto& obs : train_obs) {
    const double pred = el_joint(obs.A, obs.G, obs.C_moe, out.coefficients);
    max_train_err = std::max(max_train_err, std::abs(pred - obs.EL) / obs.EL);
  }
  out.report.train_relative_error = max_train_err;
  return out;
}

std::vector<RunRecord> near_optimal_filter(const std::vector<RunRecord>& runs, double tolerance) {
  std::map<double, double> group_min;
  for (const auto& r : runs) {
    auto [it, inserted] = group_min.emplace(r.C, r.loss);
    if (!inserted) it->second = std::min(it->second, r.loss);
  }
  std::vector<RunRecord> kept;
  for (const auto& r : runs) {
    if (r.loss <= group_min.at(r.C) * (1.0 + tolerance)) kept.push_back(r);
  }
  return kept;
}

std::vector<ELObservation> el_from_loss_curves(const std::vector<RunRecord>& moe_runs,
                                               const PowerLaw& dense_loss_law,
                                               std::vector<std::string>* warnings) {
  if (!(dense_loss_law.p < 0))
    throw ValidationError("el_from_loss_curves: dense loss law must decay (p < 0)");
  if (!(dense_loss_law.k > 0))
    throw ValidationError("el_from_loss_curves: dense loss law must be positive");

  std::vector<ELObservation> out;
  for (std::size_t i = 0; i < moe_runs.size(); ++i) {
    const auto& run = moe_runs[i];
    const double c_dense =
        run.loss > 0 ? std::pow(run.loss / dense_loss_law.k, 1.0 / dense_loss_law.p) : -1.0;
    if (!(c_dense > 0) || !std::isfinite(c_dense) || !(run.C > 0)) {
      if (warnings) {
        std::ostringstream msg;
        msg << "record " << i << " (" << run.arch_id
            << "): loss has no positive dense-compute preimage, skipped";
        warnings->push_back(msg.str());
      }
      continue;
    }
    out.push_back({run.A, run.G, run.C, c_dense / run.C});
  }
  return out;
}

std::vector<ELObservation> el_from_matched_runs(const std::vector<RunRecord>& moe_runs,
                                                const std::vector<RunRecord>& dense_runs,
                                                double epsilon,
                                                std::vector<std::string>* warnings) {
  if (dense_runs.empty()) throw ValidationError("el_from_matched_runs: no dense runs");
  std::vector<ELObservation> out;
  for (std::size_t i = 0; i < moe_runs.size(); ++i) {
    const auto& run = moe_runs[i];
    const RunRecord* nearest = &dense_runs.front();
    for (const auto& d : dense_runs)
      if (std::abs(d.loss - run.loss) < std::abs(nearest->loss - run.loss)) nearest = &d;
    if (std::abs(nearest->loss - run.loss) <= epsilon) {
      out.push_back({run.A, run.G, run.C, nearest->C / run.C});
    } else if (warnings) {
      std::ostringstream msg;
      msg << "record " << i << " (" << run.arch_id << "): no dense run within epsilon, skipped";
      warnings->push_back(msg.str());
    }
  }
  return out;
}

std::vector<RunRecord> synth_runs(const PowerLaw& law, int n, double noise_sigma,
                                  std::uint64_t seed, double x_min, double x_max) {
  if (n < 1) throw ValidationError("synth_runs: n must be at least 1");
  if (!(x_min > 0) || !(x_max >= x_min))
    throw ValidationError("synth_runs: span must be positive and ordered");

  // Box-Muller over mt19937_64 keeps the stream independent of library
  // distribution internals; identical seed gives identical records.
  std::mt19937_64 rng(seed);
  const auto gaussian = [&rng]() {
    const double u1 = (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
    const double u2 = static_cast<double>(rng() >> 11) * 0x1.0p-53;          // [0, 1)
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  };

  const double ratio = x_max / x_min;
  std::vector<RunRecord> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double frac = n == 1 ? 0.0 : static_cast<double>(i) / (n - 1);
    const double x = x_min * std::pow(ratio, frac);
    const double y = law(x) * std::exp(noise_sigma * gaussian());
    RunRecord r;
    r.arch_id = "synth-" + std::to_string(i);
    r.C = x;
    r.M = y;
    r.D = x / y;
    r.loss = y;
    r.A = 1.0;
    r.G = 1.0;
    r.S = 0.0;
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace moelever

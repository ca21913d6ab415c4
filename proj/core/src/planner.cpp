// SPDX-License-Identifier: Apache-2.0

#include "moelever/planner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "moelever/errors.hpp"
#include "moelever/flops.hpp"

namespace moelever {

namespace {

// Candidate widths mirror the experimental configs this library's default laws
// were fitted on, extended upward at head dim 128.
struct SizingRung {
  int d_model;
  int n_layers;
  int n_heads;
  int n_kv_heads;
};

constexpr SizingRung kSizingLadder[] = {
    {384, 8, 8, 2},     {512, 8, 8, 2},     {640, 10, 10, 2},  {768, 14, 12, 4},
    {1024, 16, 16, 4},  {1280, 22, 20, 4},  {1536, 20, 12, 4}, {2048, 20, 16, 4},
    {2560, 26, 20, 4},  {3072, 30, 24, 8},  {4096, 36, 32, 8}, {5120, 40, 40, 8},
    {6144, 48, 48, 8},
};

constexpr std::int64_t kDefaultVocab = 126464;
constexpr int kDefaultSeq = 4096;

double log_spaced(double lo, double hi, int steps, int i) {
  if (steps <= 1) return lo;
  return lo * std::pow(hi / lo, static_cast<double>(i) / (steps - 1));
}

// rung for a user-pinned width outside the ladder: head dim near 64 (128 at
// Ling scale), layer count borrowed from the nearest ladder entry
SizingRung synthesize_rung(int d_model) {
  const int target_head_dim = d_model >= 2048 ? 128 : 64;
  int heads = 0, best_gap = 1 << 30;
  for (int h = 1; h <= 64; ++h) {
    if (d_model % h != 0) continue;
    const int gap = std::abs(d_model / h - target_head_dim);
    if (gap < best_gap) {
      best_gap = gap;
      heads = h;
    }
  }
  if (heads == 0)
    throw ValidationError("plan_architecture: no attention head layout divides d_model = " +
                          std::to_string(d_model));
  const SizingRung* nearest = &kSizingLadder[0];
  for (const auto& rung : kSizingLadder)
    if (std::abs(rung.d_model - d_model) < std::abs(nearest->d_model - d_model)) nearest = &rung;
  const int kv = heads % 4 == 0 ? heads / 4 : (heads % 2 == 0 ? heads / 2 : heads);
  return {d_model, nearest->n_layers, heads, kv};
}

MoEArchitecture build_layout(const SizingRung& rung, const ExpertLayout& experts,
                             int n_dense_layers) {
  MoEArchitecture a;
  a.n_layers = rung.n_layers;
  a.n_dense_layers = std::min(n_dense_layers, rung.n_layers);
  a.d_model = rung.d_model;
  a.d_expert = experts.d_expert;
  a.d_shared = experts.d_expert;
  // dense layers match the total activated expert width
  a.d_ffn = a.n_dense_layers > 0 ? (experts.E_a + experts.E_s) * experts.d_expert : 0;
  a.n_heads = rung.n_heads;
  a.n_kv_heads = rung.n_kv_heads;
  a.E = experts.E;
  a.E_a = experts.E_a;
  a.E_s = experts.E_s;
  a.vocab = kDefaultVocab;
  a.seq = kDefaultSeq;
  return a;
}

MoEArchitecture build_dense_layout(const SizingRung& rung) {
  MoEArchitecture a;
  a.n_layers = rung.n_layers;
  a.n_dense_layers = rung.n_layers;
  a.d_model = rung.d_model;
  a.d_ffn = 4 * rung.d_model;  // conventional FFN width
  a.n_heads = rung.n_heads;
  a.n_kv_heads = rung.n_kv_heads;
  a.vocab = kDefaultVocab;
  a.seq = kDefaultSeq;
  return a;
}

}  // namespace

SharedRatioChoice shared_ratio_rule(double C, int total_active) {
  if (total_active < 1)
    throw ValidationError("shared_ratio_rule: total activated pathways must be at least 1");
  SharedRatioChoice choice;
  if (total_active == 1) {
    choice.S = 0.0;
    choice.E_s = 0;
    choice.warning = "single activated pathway: a shared expert would leave no routable "
                     "activation, using S = 0";
    return choice;
  }
  if (C > 1e20) {
    choice.E_s = 1;  // one-shared-expert rule at scale
  } else {
    choice.E_s = std::max(1, static_cast<int>(std::llround(total_active / 6.0)));
  }
  choice.S = static_cast<double>(choice.E_s) / total_active;
  return choice;
}

int dense_layer_rule(double C, int n_layers) {
  if (n_layers < 1) throw ValidationError("dense_layer_rule: n_layers must be at least 1");
  if (!(C > 0)) throw ValidationError("dense_layer_rule: C must be positive");
  if (C <= 1e18) return 0;
  if (C < 3e20) return std::max(1, static_cast<int>(std::llround(n_layers / 60.0)));
  const long long cap = std::max(1ll, std::llround(3.0 * n_layers / 60.0));
  const long long v = std::llround(2.5 * n_layers / 60.0);
  return static_cast<int>(std::clamp(v, 1ll, cap));
}

AttentionRatio attention_ratio_check(const MoEArchitecture& arch, double seq) {
  // computed on the descriptor as-is so degenerate (FFN-free) inputs still report
  double attn = 0, ffn = 0;
  for (int layer = 0; layer < arch.n_layers; ++layer) {
    attn += attention_flops(arch, 1.0, seq);
    ffn += layer < arch.n_dense_layers ? dense_ffn_flops(arch, 1.0, seq)
                                       : moe_ffn_flops(arch, 1.0, seq);
  }
  AttentionRatio r;
  r.fraction = attn / (attn + ffn);
  r.in_band = r.fraction >= 0.30 && r.fraction <= 0.40;
  r.acceptable = r.fraction >= 0.20 && r.fraction <= 0.50;
  return r;
}

HeatmapGrid heatmap_grid(double C, double a_min, double a_max, double g_min, double g_max,
                         int steps, const ELCoefficients& coeffs) {
  if (steps < 2) throw ValidationError("heatmap_grid: steps must be at least 2");
  if (!(a_min > 0) || !(a_min <= a_max) || a_max > 1.0)
    throw ValidationError("heatmap_grid: A range must satisfy 0 < a_min <= a_max <= 1");
  if (!(g_min > 0) || !(g_min <= g_max))
    throw ValidationError("heatmap_grid: G range must satisfy 0 < g_min <= g_max");

  HeatmapGrid grid;
  grid.C = C;
  for (int i = 0; i < steps; ++i) grid.a_values.push_back(log_spaced(a_min, a_max, steps, i));
  for (int j = 0; j < steps; ++j) grid.g_values.push_back(log_spaced(g_min, g_max, steps, j));
  grid.el.resize(grid.a_values.size());
  for (std::size_t i = 0; i < grid.a_values.size(); ++i) {
    grid.el[i].resize(grid.g_values.size());
    for (std::size_t j = 0; j < grid.g_values.size(); ++j)
      grid.el[i][j] = el_joint(grid.a_values[i], grid.g_values[j], C, coeffs);
  }
  return grid;
}

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string heatmap_to_csv(const HeatmapGrid& grid) {
  std::ostringstream out;
  out << "A\\G";
  for (double g : grid.g_values) out << ',' << format_double(g);
  out << '\n';
  for (std::size_t i = 0; i < grid.a_values.size(); ++i) {
    out << format_double(grid.a_values[i]);
    for (double v : grid.el[i]) out << ',' << format_double(v);
    out << '\n';
  }
  return out.str();
}

HeatmapGrid heatmap_from_csv(const std::string& text) {
  HeatmapGrid grid;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("heatmap CSV: empty input");
  {
    std::istringstream header(line);
    std::string cell;
    if (!std::getline(header, cell, ',') || cell != "A\\G")
      throw ValidationError("heatmap CSV: first header cell must be A\\G");
    while (std::getline(header, cell, ',')) grid.g_values.push_back(std::stod(cell));
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    std::getline(row, cell, ',');
    grid.a_values.push_back(std::stod(cell));
    std::vector<double> values;
    while (std::getline(row, cell, ',')) values.push_back(std::stod(cell));
    if (values.size() != grid.g_values.size())
      throw ValidationError("heatmap CSV: ragged row");
    grid.el.push_back(std::move(values));
  }
  return grid;
}

void write_heatmap_csv(const HeatmapGrid& grid, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open heatmap output file: " + path);
  out << heatmap_to_csv(grid);
}

HeatmapGrid read_heatmap_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open heatmap file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return heatmap_from_csv(buf.str());
}

PlanResult plan_architecture(const PlanRequest& req) {
  if (!(req.C > 0)) throw ValidationError("plan_architecture: C must be positive");
  if (!(req.a_min > 0) || !(req.a_min <= req.a_max) || req.a_max > 1.0)
    throw ValidationError("plan_architecture: A bounds must satisfy 0 < a_min <= a_max <= 1");
  if (!(req.g_min > 0) || !(req.g_min <= req.g_max))
    throw ValidationError("plan_architecture: G bounds must satisfy 0 < g_min <= g_max");
  if (req.grid_steps < 2) throw ValidationError("plan_architecture: grid_steps must be at least 2");

  PlanResult result;
  result.warnings = el_domain_warnings(req.a_min, req.g_max, req.C);

  // argmax by search; monotonicity in A is verified, never assumed
  double best_el = -1.0, best_a = req.a_min, best_g = req.g_min;
  for (int i = 0; i < req.grid_steps; ++i) {
    const double a = log_spaced(req.a_min, req.a_max, req.grid_steps, i);
    for (int j = 0; j < req.grid_steps; ++j) {
      const double g = log_spaced(req.g_min, req.g_max, req.grid_steps, j);
      const double el = el_joint(a, g, req.C, req.coeffs);
      const bool better = el > best_el ||
                          (el == best_el && (g < best_g || (g == best_g && a > best_a)));
      if (better) {
        best_el = el;
        best_a = a;
        best_g = g;
      }
    }
  }

  result.A_opt = best_a;
  result.G_opt = best_g;
  if (const auto g_star = optimal_granularity(req.coeffs)) {
    const double clamped = std::clamp(*g_star, req.g_min, req.g_max);
    if (el_joint(best_a, clamped, req.C, req.coeffs) >= best_el) result.G_opt = clamped;
  }
  result.el_predicted = el_joint(result.A_opt, result.G_opt, req.C, req.coeffs);

  const bool dense_plan = result.A_opt >= 1.0 - 1e-12;
  int total_active = 0;
  if (dense_plan) {
    result.S_opt = 0.0;
    result.warnings.push_back("activation ratio 1: recommending a dense layout");
  } else {
    const int e_active = std::max(1, static_cast<int>(std::llround(result.G_opt)));
    auto rule = shared_ratio_rule(req.C, e_active + 1);
    total_active = e_active + rule.E_s;
    rule = shared_ratio_rule(req.C, total_active);
    if (!rule.warning.empty()) result.warnings.push_back(rule.warning);
    result.S_opt = rule.S;
  }

  // width selection: closest per-token scale to the target, in log space
  const double target_M =
      req.target_M > 0 ? req.target_M : allocation_for_budget(req.C, ModelFamily::moe).M_opt;

  std::vector<SizingRung> candidates;
  if (req.d_model > 0) {
    bool on_ladder = false;
    for (const auto& rung : kSizingLadder)
      if (rung.d_model == req.d_model) {
        candidates.push_back(rung);
        on_ladder = true;
      }
    if (!on_ladder) candidates.push_back(synthesize_rung(req.d_model));
  } else {
    candidates.assign(std::begin(kSizingLadder), std::end(kSizingLadder));
  }

  const SizingRung* best_rung = nullptr;
  MoEArchitecture best_arch;
  double best_dist = 0;
  for (const auto& rung : candidates) {
    MoEArchitecture candidate;
    if (dense_plan) {
      candidate = build_dense_layout(rung);
    } else {
      ExpertLayout lay;
      try {
        lay = derive_expert_layout(rung.d_model, result.A_opt, result.G_opt, result.S_opt,
                                   total_active);
      } catch (const ValidationError&) {
        continue;
      }
      candidate = build_layout(rung, lay, dense_layer_rule(req.C, rung.n_layers));
    }
    if (!validate(candidate).empty()) continue;
    const double dist = std::abs(std::log(per_token_scale(candidate, kDefaultSeq) / target_M));
    if (!best_rung || dist < best_dist) {
      best_rung = &rung;
      best_arch = candidate;
      best_dist = dist;
    }
  }
  if (!best_rung) {
    std::ostringstream msg;
    msg << "plan_architecture: no feasible layout at (A=" << result.A_opt
        << ", G=" << result.G_opt << ", S=" << result.S_opt << ")";
    try {
      const auto fallback = derive_expert_layout(kSizingLadder[7].d_model, result.A_opt,
                                                 result.G_opt, 0.0, std::max(1, total_active));
      msg << "; closest feasible drops sharing: E=" << fallback.E << " E_a=" << fallback.E_a
          << " E_s=0 d_expert=" << fallback.d_expert;
    } catch (const ValidationError&) {
      msg << "; no feasible layout even at S=0";
    }
    throw ValidationError(msg.str());
  }

  result.layout = best_arch;
  result.M = per_token_scale(best_arch, best_arch.seq);
  result.M_dense_equivalent = dense_equivalent(result.M, result.el_predicted);
  result.allocation = allocation_for_budget(req.C, ModelFamily::moe);
  return result;
}

EquivalenceReport equivalence_report(const MoEArchitecture& arch, double C,
                                     const ELCoefficients& coeffs) {
  ensure_valid(arch);
  if (!(C > 0)) throw ValidationError("equivalence_report: C must be positive");

  EquivalenceReport rep;
  rep.arch_metrics = metrics(arch);
  rep.C = C;
  rep.el = el_joint(rep.arch_metrics.A, rep.arch_metrics.G, C, coeffs);
  rep.M = per_token_scale(arch, arch.seq);
  rep.M_dense_equivalent = dense_equivalent(rep.M, rep.el);
  rep.allocation_dense = allocation_for_budget(C, ModelFamily::dense);
  rep.allocation_moe = allocation_for_budget(C, ModelFamily::moe);
  if (arch.is_dense())
    rep.notes.push_back("dense input: leverage is reported at A = 1 and stays near, "
                        "not exactly at, 1 because of the saturating transform");
  for (auto& w : el_domain_warnings(rep.arch_metrics.A, rep.arch_metrics.G, C))
    rep.notes.push_back(std::move(w));
  return rep;
}

}  // namespace moelever

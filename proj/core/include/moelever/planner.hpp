// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "moelever/arch.hpp"
#include "moelever/laws.hpp"

namespace moelever {

struct PlanRequest {
  double C = 0;                 // FLOPs budget
  double target_M = 0;          // optional FLOPs/token target; 0 means "use the allocation law"
  int d_model = 0;              // optional; 0 means "size from the budget"
  double a_min = 0.008;         // search bounds: the experimentally covered spans
  double a_max = 1.0;
  double g_min = 1.0;
  double g_max = 64.0;
  int grid_steps = 64;          // per-axis grid resolution of the argmax search
  ELCoefficients coeffs;
};

struct PlanResult {
  double A_opt = 0;
  double G_opt = 0;
  double S_opt = 0;
  double el_predicted = 0;      // el_joint(A_opt, G_opt, C), same code path
  MoEArchitecture layout;       // recommended architecture (validates, re-derives metrics)
  double M = 0;                 // per-token scale of the layout at its seq
  double M_dense_equivalent = 0;
  Allocation allocation;        // compute-optimal (M, D) for the budget, MoE family
  std::vector<std::string> warnings;
};

/// EL over an (A, G) grid at fixed C. Axes are log-spaced and inclusive of the
/// endpoints; el[i][j] = el_joint(a_values[i], g_values[j], C) exactly.
struct HeatmapGrid {
  double C = 0;
  std::vector<double> a_values;
  std::vector<double> g_values;
  std::vector<std::vector<double>> el;  // row-major, rows follow a_values
};

/// Maximizes EL over the requested (A, G) region. The A optimum is found by
/// search, not assumed monotone (refitted coefficient sets may differ); the G
/// optimum is the interior extremum clamped to bounds where that beats the
/// grid. Ties prefer smaller G, then larger A.
PlanResult plan_architecture(const PlanRequest& req);

struct SharedRatioChoice {
  double S = 0;
  int E_s = 0;
  std::string warning;  // empty when none
};

/// One shared expert above 1e20 FLOPs; a ~16.7% sharing target below.
SharedRatioChoice shared_ratio_rule(double C, int total_active);

/// Leading dense-layer count: none up to 1e18 FLOPs, ~1/60 of layers in the
/// mid range, ~2.5/60 (clamped to at most 3/60) from 3e20 upward.
int dense_layer_rule(double C, int n_layers);

struct AttentionRatio {
  double fraction = 0;   // attention / (attention + FFN), forward pass at batch 1
  bool in_band = false;  // [0.30, 0.40]
  bool acceptable = false;  // [0.20, 0.50]
};

AttentionRatio attention_ratio_check(const MoEArchitecture& arch, double seq);

HeatmapGrid heatmap_grid(double C, double a_min, double a_max, double g_min, double g_max,
                         int steps, const ELCoefficients& coeffs = ELCoefficients{});

/// CSV layout: header "A\G, g1, g2, ..." then one row per A value. Numbers are
/// printed with round-trip precision; read_heatmap_csv restores them exactly.
std::string heatmap_to_csv(const HeatmapGrid& grid);
HeatmapGrid heatmap_from_csv(const std::string& text);
void write_heatmap_csv(const HeatmapGrid& grid, const std::string& path);
HeatmapGrid read_heatmap_csv(const std::string& path);

struct EquivalenceReport {
  ArchMetrics arch_metrics;
  double C = 0;
  double el = 0;
  double M = 0;                  // per-token scale at the arch's seq
  double M_dense_equivalent = 0; // el * M
  Allocation allocation_dense;
  Allocation allocation_moe;
  std::vector<std::string> notes;
};

/// Dense-equivalence summary of an architecture at a budget. Every number is
/// re-derivable from the named operations; dense inputs report EL near 1 with
/// a note.
EquivalenceReport equivalence_report(const MoEArchitecture& arch, double C,
                                     const ELCoefficients& coeffs = ELCoefficients{});

}  // namespace moelever

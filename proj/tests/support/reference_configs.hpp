// SPDX-License-Identifier: Apache-2.0
//
// Reference architectures used as fixtures: the Ling-mini-beta / Dense-6.1B
// pair and the experimental sweep families the default laws were derived on.
#pragma once

#include <vector>

#include "moelever/arch.hpp"

namespace moelever::testing {

inline MoEArchitecture dense_6b() {
  MoEArchitecture a;
  a.n_layers = 28;
  a.n_dense_layers = 28;
  a.d_model = 4096;
  a.d_ffn = 14336;
  a.n_heads = 32;
  a.n_kv_heads = 8;
  a.vocab = 126464;
  a.seq = 8192;
  return a;
}

inline MoEArchitecture ling_mini_beta() {
  MoEArchitecture a;
  a.n_layers = 20;
  a.n_dense_layers = 1;  // leading dense block; reproduces the published totals
  a.d_model = 2048;
  a.d_ffn = 5120;
  a.d_expert = 384;
  a.d_shared = 384;
  a.n_heads = 16;
  a.n_kv_heads = 4;
  a.E = 384;
  a.E_a = 12;
  a.E_s = 1;
  a.vocab = 126464;
  a.seq = 8192;
  return a;
}

struct SweepGroup {
  int n_layers;
  int d_model;
  int n_heads;
  int n_kv_heads;
  double max_flops;
  double lr;
  double batch_seqs;  // batch size in sequences of 4096 tokens
};

// base models of the expert-count sweep (d_expert fixed per group)
inline const std::vector<SweepGroup>& activation_sweep_groups() {
  static const std::vector<SweepGroup> groups = {
      {8, 384, 8, 2, 2e18, 1.52e-3, 98},   {8, 512, 8, 2, 6e18, 1.31e-3, 147},
      {10, 640, 10, 2, 2e19, 1.11e-3, 228}, {14, 768, 12, 4, 6e19, 9.5e-4, 342},
      {16, 1024, 16, 4, 2e20, 8.1e-4, 531}, {22, 1280, 20, 4, 6e20, 7.0e-4, 795},
  };
  return groups;
}

inline int activation_sweep_d_expert(int d_model) { return d_model == 384 ? 320 : d_model; }

inline std::vector<MoEArchitecture> activation_sweep_configs() {
  std::vector<MoEArchitecture> out;
  for (const auto& g : activation_sweep_groups()) {
    for (int experts : {2, 4, 8, 16, 32, 64, 128, 256}) {
      MoEArchitecture a;
      a.n_layers = g.n_layers;
      a.d_model = g.d_model;
      a.d_expert = activation_sweep_d_expert(g.d_model);
      a.d_shared = a.d_expert;
      a.n_heads = g.n_heads;
      a.n_kv_heads = g.n_kv_heads;
      a.E = experts;
      a.E_a = 2;
      a.E_s = 1;
      a.vocab = 126464;
      a.seq = 4096;
      out.push_back(a);
    }
  }
  return out;
}

// granularity sweep: expert pool grows while experts shrink, per-token cost fixed
inline std::vector<MoEArchitecture> granularity_sweep_configs() {
  struct Row {
    int E, E_a, E_s, d_expert;
  };
  static const Row rows_by_group[6][6] = {
      {{64, 2, 1, 384}, {128, 4, 2, 192}, {192, 6, 3, 128}, {256, 8, 4, 96}, {384, 12, 6, 64}, {512, 16, 8, 48}},
      {{64, 2, 1, 512}, {128, 4, 2, 256}, {192, 6, 3, 170}, {256, 8, 4, 128}, {384, 12, 6, 85}, {512, 16, 8, 64}},
      {{64, 2, 1, 640}, {128, 4, 2, 320}, {192, 6, 3, 213}, {256, 8, 4, 160}, {384, 12, 6, 106}, {512, 16, 8, 80}},
      {{64, 2, 1, 768}, {128, 4, 2, 384}, {192, 6, 3, 256}, {256, 8, 4, 192}, {384, 12, 6, 128}, {512, 16, 8, 96}},
      {{64, 2, 1, 1024}, {128, 4, 2, 512}, {192, 6, 3, 341}, {256, 8, 4, 256}, {384, 12, 6, 170}, {512, 16, 8, 128}},
      {{64, 2, 1, 1280}, {128, 4, 2, 640}, {192, 6, 3, 426}, {256, 8, 4, 320}, {384, 12, 6, 213}, {512, 16, 8, 160}},
  };
  std::vector<MoEArchitecture> out;
  const auto& groups = activation_sweep_groups();
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    for (const auto& row : rows_by_group[gi]) {
      MoEArchitecture a;
      a.n_layers = groups[gi].n_layers;
      a.d_model = groups[gi].d_model;
      a.d_expert = row.d_expert;
      a.d_shared = row.d_expert;
      a.n_heads = groups[gi].n_heads;
      a.n_kv_heads = groups[gi].n_kv_heads;
      a.E = row.E;
      a.E_a = row.E_a;
      a.E_s = row.E_s;
      a.vocab = 126464;
      a.seq = 4096;
      out.push_back(a);
    }
  }
  return out;
}

// shared-expert sweep: E = 256, activated pathways fixed, E_a traded for E_s
inline std::vector<MoEArchitecture> shared_expert_sweep_configs() {
  struct Row {
    int E_a, E_s;
  };
  static const Row rows_by_group[6][6] = {
      {{2, 10}, {4, 8}, {6, 6}, {8, 4}, {11, 1}, {12, 0}},
      {{2, 10}, {4, 8}, {6, 6}, {8, 4}, {11, 1}, {12, 0}},
      {{2, 10}, {4, 8}, {6, 6}, {8, 4}, {11, 1}, {12, 0}},
      {{2, 10}, {4, 8}, {6, 6}, {8, 4}, {11, 2}, {12, 0}},
      {{2, 10}, {4, 8}, {6, 6}, {8, 4}, {11, 1}, {12, 0}},
      {{2, 10}, {4, 8}, {6, 6}, {8, 4}, {11, 1}, {12, 0}},
  };
  static const int d_expert_by_group[6] = {96, 128, 160, 192, 256, 320};
  std::vector<MoEArchitecture> out;
  const auto& groups = activation_sweep_groups();
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    for (const auto& row : rows_by_group[gi]) {
      MoEArchitecture a;
      a.n_layers = groups[gi].n_layers;
      a.d_model = groups[gi].d_model;
      a.d_expert = d_expert_by_group[gi];
      a.d_shared = a.d_expert;
      a.n_heads = groups[gi].n_heads;
      a.n_kv_heads = groups[gi].n_kv_heads;
      a.E = 256;
      a.E_a = row.E_a;
      a.E_s = row.E_s;
      a.vocab = 126464;
      a.seq = 4096;
      out.push_back(a);
    }
  }
  return out;
}

// leading-dense-layer sweep on 60-layer models
inline std::vector<MoEArchitecture> layer_arrangement_configs() {
  static const int d_ffn_by_group[6] = {1280, 2048, 2560, 3072, 4096, 5120};
  std::vector<MoEArchitecture> out;
  const auto& groups = activation_sweep_groups();
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    for (int n_dense = 0; n_dense <= 3; ++n_dense) {
      MoEArchitecture a;
      a.n_layers = 60;
      a.n_dense_layers = n_dense;
      a.d_model = groups[gi].d_model;
      a.d_ffn = d_ffn_by_group[gi];
      a.d_expert = groups[gi].d_model;
      a.d_shared = a.d_expert;
      a.n_heads = groups[gi].n_heads;
      a.n_kv_heads = groups[gi].n_kv_heads;
      a.E = 64;
      a.E_a = 2;
      a.E_s = 1;
      a.vocab = 126464;
      a.seq = 4096;
      out.push_back(a);
    }
  }
  return out;
}

// attention-vs-FFN allocation sweep (d_model up, d_expert down at fixed scale)
inline std::vector<MoEArchitecture> attention_ffn_sweep_configs() {
  struct Row {
    int n_layers, d_model, d_expert, n_heads, n_kv_heads;
  };
  static const Row rows[] = {
      {8, 352, 450, 8, 2},    {8, 368, 380, 8, 2},    {8, 384, 320, 8, 2},
      {8, 400, 260, 8, 2},    {8, 416, 208, 8, 2},    {8, 480, 626, 8, 2},
      {8, 512, 512, 8, 2},    {8, 544, 410, 8, 2},    {8, 560, 364, 8, 2},
      {8, 576, 320, 8, 2},    {10, 600, 766, 10, 2},  {10, 640, 640, 10, 2},
      {10, 680, 528, 10, 2},  {10, 700, 476, 10, 2},  {10, 740, 380, 10, 2},
      {14, 696, 988, 12, 4},  {14, 768, 768, 12, 4},  {14, 816, 642, 12, 4},
      {14, 840, 584, 12, 4},  {14, 888, 474, 12, 4},  {16, 896, 1378, 16, 4},
      {16, 1024, 1024, 16, 4}, {16, 1088, 876, 16, 4}, {16, 1152, 742, 16, 4},
      {16, 1184, 680, 16, 4}, {22, 1120, 1686, 20, 4}, {22, 1280, 1280, 20, 4},
      {22, 1360, 1110, 20, 4}, {22, 1440, 956, 20, 4}, {22, 1520, 816, 20, 4},
  };
  std::vector<MoEArchitecture> out;
  for (const auto& row : rows) {
    MoEArchitecture a;
    a.n_layers = row.n_layers;
    a.d_model = row.d_model;
    a.d_expert = row.d_expert;
    a.d_shared = row.d_expert;
    a.n_heads = row.n_heads;
    a.n_kv_heads = row.n_kv_heads;
    a.E = 64;
    a.E_a = 2;
    a.E_s = 1;
    a.vocab = 126464;
    a.seq = 4096;
    out.push_back(a);
  }
  return out;
}

/// Every sweep family in one list (the "identity on integer fields" property
/// runs over all of them).
inline std::vector<MoEArchitecture> all_sweep_configs() {
  std::vector<MoEArchitecture> out;
  for (auto fn : {activation_sweep_configs, granularity_sweep_configs,
                  shared_expert_sweep_configs, layer_arrangement_configs,
                  attention_ffn_sweep_configs}) {
    auto v = fn();
    out.insert(out.end(), v.begin(), v.end());
  }
  return out;
}

}  // namespace moelever::testing

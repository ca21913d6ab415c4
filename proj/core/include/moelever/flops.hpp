// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "moelever/arch.hpp"

namespace moelever {

/// Forward-pass FLOPs, accumulated in double (exact for integral inputs below 2^53).
struct FlopsBreakdown {
  double attention = 0;
  double ffn = 0;
  double logits = 0;
  double forward_total = 0;      // attention + ffn + logits
  double train_total = 0;        // 3 * forward_total
  double per_token_scale_M = 0;  // (forward_total - logits) / (B * s)
};

/// Per-layer attention cost: 2*B*s*d^2*(1 + 2/(n_h/n_kv)) + 4*B*s^2*d.
double attention_flops(const MoEArchitecture& arch, double batch, double seq);

/// Dense layer: 6*B*s*d*d_ffn.
double dense_ffn_flops(const MoEArchitecture& arch, double batch, double seq);

/// MoE layer: 6*B*s*d*(E_a*d_expert) plus 4*B*s*d*d_shared per shared expert.
double moe_ffn_flops(const MoEArchitecture& arch, double batch, double seq);

/// FFN cost of the given layer (the first n_dense_layers are dense).
double ffn_flops(const MoEArchitecture& arch, int layer_index, double batch, double seq);

/// Sums attention + FFN over all layers plus the 2*B*s*d*vocab logit projection.
FlopsBreakdown forward_flops(const MoEArchitecture& arch, double batch, double seq);

/// Model scale M: non-embedding forward FLOPs per token at batch 1. The logit
/// projection is excluded by default (embedding-family cost); pass
/// include_logits = true for sensitivity checks.
double per_token_scale(const MoEArchitecture& arch, double seq, bool include_logits = false);

struct ComputeBudget {
  double C = 0;  // total FLOPs
  double D = 0;  // tokens
  double M = 0;  // FLOPs per token
};

ComputeBudget budget(double M, double D);
double tokens_for_budget(double C, double M);
double scale_for_budget(double C, double D);

std::string breakdown_to_json_text(const FlopsBreakdown& b, bool pretty = false);

}  // namespace moelever

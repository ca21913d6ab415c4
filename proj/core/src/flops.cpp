// SPDX-License-Identifier: Apache-2.0

#include "moelever/flops.hpp"

#include <nlohmann/json.hpp>

#include "moelever/errors.hpp"

namespace moelever {

double attention_flops(const MoEArchitecture& arch, double batch, double seq) {
  const double d = arch.d_model;
  const double gqa = 1.0 + 2.0 / (static_cast<double>(arch.n_heads) / arch.n_kv_heads);
  return 2.0 * batch * seq * d * d * gqa + 4.0 * batch * seq * seq * d;
}

double dense_ffn_flops(const MoEArchitecture& arch, double batch, double seq) {
  return 6.0 * batch * seq * arch.d_model * arch.d_ffn;
}

double moe_ffn_flops(const MoEArchitecture& arch, double batch, double seq) {
  const double d = arch.d_model;
  const double routed = 6.0 * batch * seq * d * (static_cast<double>(arch.E_a) * arch.d_expert);
  const double shared = 4.0 * batch * seq * d * arch.shared_dim() * arch.E_s;
  return routed + shared;
}

double ffn_flops(const MoEArchitecture& arch, int layer_index, double batch, double seq) {
  if (layer_index < 0 || layer_index >= arch.n_layers)
    throw ValidationError("ffn_flops: layer index out of range");
  return layer_index < arch.n_dense_layers ? dense_ffn_flops(arch, batch, seq)
                                           : moe_ffn_flops(arch, batch, seq);
}

FlopsBreakdown forward_flops(const MoEArchitecture& arch, double batch, double seq) {
  ensure_valid(arch);
  if (batch < 1 || seq < 1) throw ValidationError("forward_flops: batch and seq must be at least 1");

  FlopsBreakdown b;
  for (int layer = 0; layer < arch.n_layers; ++layer) {
    b.attention += attention_flops(arch, batch, seq);
    b.ffn += ffn_flops(arch, layer, batch, seq);
  }
  b.logits = 2.0 * batch * seq * arch.d_model * static_cast<double>(arch.vocab);
  b.forward_total = b.attention + b.ffn + b.logits;
  b.train_total = 3.0 * b.forward_total;
  b.per_token_scale_M = (b.forward_total - b.logits) / (batch * seq);
  return b;
}

double per_token_scale(const MoEArchitecture& arch, double seq, bool include_logits) {
  const FlopsBreakdown b = forward_flops(arch, 1.0, seq);
  if (include_logits) return b.forward_total / seq;
  return b.per_token_scale_M;
}

ComputeBudget budget(double M, double D) {
  if (!(M > 0) || !(D > 0)) throw ValidationError("budget: M and D must be positive");
  return {M * D, D, M};
}

double tokens_for_budget(double C, double M) {
  if (!(M > 0)) throw ValidationError("tokens_for_budget: M must be positive");
  if (!(C > 0)) throw ValidationError("tokens_for_budget: C must be positive");
  return C / M;
}

double scale_for_budget(double C, double D) {
  if (!(D > 0)) throw ValidationError("scale_for_budget: D must be positive");
  if (!(C > 0)) throw ValidationError("scale_for_budget: C must be positive");
  return C / D;
}

std::string breakdown_to_json_text(const FlopsBreakdown& b, bool pretty) {
  nlohmann::json j{{"attention", b.attention},
                   {"ffn", b.ffn},
                   {"logits", b.logits},
                   {"forward_total", b.forward_total},
                   {"train_total", b.train_total},
                   {"per_token_scale_M", b.per_token_scale_M}};
  return pretty ? j.dump(2) : j.dump();
}

}  // namespace moelever

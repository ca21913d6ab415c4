// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace moelever {

/// Structural description of a dense-or-MoE transformer. A pure dense model is
/// expressed as n_dense_layers == n_layers; expert fields are then ignored.
struct MoEArchitecture {
  int n_layers = 0;        // transformer blocks
  int n_dense_layers = 0;  // leading blocks with a dense FFN
  int d_model = 0;         // hidden dimension
  int d_ffn = 0;           // dense-FFN intermediate dimension
  int d_expert = 0;        // routable-expert intermediate dimension
  int d_shared = 0;        // shared-expert intermediate dimension; 0 means "same as d_expert"
  int n_heads = 0;
  int n_kv_heads = 0;      // divides n_heads
  int E = 0;               // routable experts
  int E_a = 0;             // activated routable experts per token
  int E_s = 0;             // shared experts (always active)
  std::int64_t vocab = 0;
  int seq = 0;             // training sequence length in tokens

  bool is_dense() const { return n_dense_layers >= n_layers; }
  int moe_layer_count() const { return n_layers - n_dense_layers; }
  int shared_dim() const { return d_shared > 0 ? d_shared : d_expert; }
};

/// Derived architectural metrics.
struct ArchMetrics {
  double A = 0;            // activation ratio, (0,1]
  double G = 0;            // expert granularity
  double S = 0;            // sharing ratio, [0,1)
  std::uint64_t N = 0;     // total non-vocabulary parameters
  std::uint64_t N_a = 0;   // activated non-vocabulary parameters
};

struct ParamCounts {
  std::uint64_t total = 0;
  std::uint64_t active = 0;
};

struct ExpertLayout {
  int E = 0;
  int E_a = 0;
  int E_s = 0;
  int d_expert = 0;
};

/// (E_a + E_s) / (E + E_s); 1 for a dense model.
double activation_ratio(const MoEArchitecture& arch);

/// 2 * d_model / d_expert. For a pure dense model with no expert dimension the
/// aggregate FFN width stands in for d_expert (2 * d_model / d_ffn).
double granularity(const MoEArchitecture& arch);

/// E_s / (E_a + E_s); 0 for a dense model.
double sharing_ratio(const MoEArchitecture& arch);

/// Non-vocabulary parameter counts. Attention contributes d^2 each for the
/// query and output projections and 2*d*(d*n_kv/n_h) for key/value; every
/// FFN/expert is gated (3 matrices of d_model x d_int); routers add d_model*E
/// per MoE layer and are counted in both totals. Norms and biases excluded.
ParamCounts param_counts(const MoEArchitecture& arch);

ArchMetrics metrics(const MoEArchitecture& arch);

/// Inverse of the metric definitions: integer expert layout hitting (A, G, S)
/// at the given width with total_active = E_a + E_s activated pathways.
/// Rounding is to nearest, ties away from zero.
ExpertLayout derive_expert_layout(int d_model, double A, double G, double S, int total_active);

/// Every violated invariant, named by field; empty result means valid.
std::vector<std::string> validate(const MoEArchitecture& arch);

/// Throws ValidationError listing all violations.
void ensure_valid(const MoEArchitecture& arch);

// JSON schema uses exactly the field names above; unknown fields are rejected.
// d_shared, d_ffn, d_expert and the expert counts may be omitted where unused.
MoEArchitecture arch_from_json_text(const std::string& text);
std::string arch_to_json_text(const MoEArchitecture& arch, bool pretty = false);
MoEArchitecture load_arch_file(const std::string& path);

}  // namespace moelever

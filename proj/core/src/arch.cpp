// SPDX-License-Identifier: Apache-2.0

#include "moelever/arch.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "moelever/errors.hpp"

namespace moelever {

double activation_ratio(const MoEArchitecture& arch) {
  if (arch.is_dense()) return 1.0;
  return static_cast<double>(arch.E_a + arch.E_s) / static_cast<double>(arch.E + arch.E_s);
}

double granularity(const MoEArchitecture& arch) {
  if (arch.d_expert > 0) return 2.0 * arch.d_model / arch.d_expert;
  if (arch.is_dense() && arch.d_ffn > 0) return 2.0 * arch.d_model / arch.d_ffn;
  throw ValidationError("granularity: d_expert must be positive");
}

double sharing_ratio(const MoEArchitecture& arch) {
  if (arch.is_dense()) return 0.0;
  if (arch.E_a + arch.E_s <= 0) throw ValidationError("sharing_ratio: E_a + E_s must be positive");
  return static_cast<double>(arch.E_s) / static_cast<double>(arch.E_a + arch.E_s);
}

namespace {

std::uint64_t attention_params_per_layer(const MoEArchitecture& a) {
  const std::uint64_t d = static_cast<std::uint64_t>(a.d_model);
  const std::uint64_t kv_dim = d * static_cast<std::uint64_t>(a.n_kv_heads) /
                               static_cast<std::uint64_t>(a.n_heads);
  return 2 * d * d + 2 * d * kv_dim;  // q + o, then k + v
}

}  // namespace

ParamCounts param_counts(const MoEArchitecture& arch) {
  ensure_valid(arch);
  const std::uint64_t d = static_cast<std::uint64_t>(arch.d_model);
  const std::uint64_t gated = 3;  // gate, up, down

  const std::uint64_t attn = static_cast<std::uint64_t>(arch.n_layers) * attention_params_per_layer(arch);
  const std::uint64_t dense_ffn =
      static_cast<std::uint64_t>(arch.n_dense_layers) * gated * d * static_cast<std::uint64_t>(arch.d_ffn);

  std::uint64_t total = attn + dense_ffn;
  std::uint64_t active = attn + dense_ffn;

  if (!arch.is_dense()) {
    const std::uint64_t layers = static_cast<std::uint64_t>(arch.moe_layer_count());
    const std::uint64_t expert = gated * d * static_cast<std::uint64_t>(arch.d_expert);
    const std::uint64_t shared = gated * d * static_cast<std::uint64_t>(arch.shared_dim());
    const std::uint64_t router = d * static_cast<std::uint64_t>(arch.E);
    total += layers * (static_cast<std::uint64_t>(arch.E) * expert +
                       static_cast<std::uint64_t>(arch.E_s) * shared + router);
    active += layers * (static_cast<std::uint64_t>(arch.E_a) * expert +
                        static_cast<std::uint64_t>(arch.E_s) * shared + router);
  }
  return {total, active};
}

ArchMetrics metrics(const MoEArchitecture& arch) {
  const ParamCounts counts = param_counts(arch);
  return {activation_ratio(arch), granularity(arch), sharing_ratio(arch), counts.total, counts.active};
}

ExpertLayout derive_expert_layout(int d_model, double A, double G, double S, int total_active) {
  if (d_model <= 0) throw ValidationError("derive_expert_layout: d_model must be positive");
  if (!(A > 0.0) || A > 1.0) throw ValidationError("derive_expert_layout: A must be in (0, 1]");
  if (!(G > 0.0)) throw ValidationError("derive_expert_layout: G must be positive");
  if (S < 0.0 || S >= 1.0) throw ValidationError("derive_expert_layout: S must be in [0, 1)");
  if (total_active < 1) throw ValidationError("derive_expert_layout: E_a + E_s must be at least 1");

  ExpertLayout layout;
  layout.d_expert = static_cast<int>(std::llround(2.0 * d_model / G));
  layout.E_s = static_cast<int>(std::llround(S * total_active));
  layout.E_a = total_active - layout.E_s;
  layout.E = static_cast<int>(std::llround(total_active / A)) - layout.E_s;
  if (layout.d_expert < 1) throw ValidationError("derive_expert_layout: G too large for d_model");
  if (layout.E_a < 1) throw ValidationError("derive_expert_layout: S leaves no routable activation");
  if (layout.E < layout.E_a)
    throw ValidationError("derive_expert_layout: infeasible rounding, E < E_a");
  return layout;
}

std::vector<std::string> validate(const MoEArchitecture& a) {
  std::vector<std::string> v;
  if (a.n_layers < 1) v.push_back("n_layers must be at least 1");
  if (a.n_dense_layers < 0) v.push_back("n_dense_layers must be non-negative");
  if (a.n_dense_layers > a.n_layers) v.push_back("n_dense_layers must not exceed n_layers");
  if (a.d_model < 1) v.push_back("d_model must be positive");
  if (a.n_heads < 1) v.push_back("n_heads must be positive");
  if (a.n_kv_heads < 1) v.push_back("n_kv_heads must be positive");
  if (a.n_heads >= 1 && a.n_kv_heads >= 1 && a.n_heads % a.n_kv_heads != 0)
    v.push_back("n_kv_heads must divide n_heads");
  if (a.n_heads >= 1 && a.d_model >= 1 && a.d_model % a.n_heads != 0)
    v.push_back("d_model must be divisible by n_heads");
  if (a.n_dense_layers > 0 && a.d_ffn < 1) v.push_back("d_ffn must be positive for dense layers");
  if (a.vocab < 0) v.push_back("vocab must be non-negative");
  if (a.seq < 1) v.push_back("seq must be at least 1");
  if (!a.is_dense()) {
    if (a.d_expert < 1) v.push_back("d_expert must be positive");
    if (a.d_shared < 0) v.push_back("d_shared must be non-negative");
    if (a.E < 1) v.push_back("E must be at least 1");
    if (a.E_a < 1) v.push_back("E_a must be at least 1");
    if (a.E_a > a.E) v.push_back("activated exceeds routable: E_a must not exceed E");
    if (a.E_s < 0) v.push_back("E_s must be non-negative");
  }
  return v;
}

void ensure_valid(const MoEArchitecture& arch) {
  const auto violations = validate(arch);
  if (violations.empty()) return;
  std::ostringstream msg;
  msg << "invalid architecture:";
  for (const auto& s : violations) msg << " [" << s << "]";
  throw ValidationError(msg.str());
}

namespace {

using nlohmann::json;

const char* const kKnownFields[] = {"n_layers", "n_dense_layers", "d_model",  "d_ffn", "d_expert",
                                    "d_shared", "n_heads",        "n_kv_heads", "E",   "E_a",
                                    "E_s",      "vocab",          "seq"};

int get_int(const json& j, const char* key, int fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_number_integer() && !v.is_number_unsigned())
    throw ValidationError(std::string("architecture field '") + key + "' must be an integer");
  return v.get<int>();
}

}  // namespace

MoEArchitecture arch_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("architecture JSON parse error: ") + e.what());
  }
  if (!j.is_object()) throw ValidationError("architecture JSON must be an object");

  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* f : kKnownFields) known = known || it.key() == f;
    if (!known) throw ValidationError("unknown architecture field '" + it.key() + "'");
  }
  for (const char* required : {"n_layers", "d_model", "n_heads", "n_kv_heads"}) {
    if (!j.contains(required))
      throw ValidationError(std::string("missing architecture field '") + required + "'");
  }

  MoEArchitecture a;
  a.n_layers = get_int(j, "n_layers", 0);
  a.n_dense_layers = get_int(j, "n_dense_layers", 0);
  a.d_model = get_int(j, "d_model", 0);
  a.d_ffn = get_int(j, "d_ffn", 0);
  a.d_expert = get_int(j, "d_expert", 0);
  a.d_shared = get_int(j, "d_shared", 0);
  a.n_heads = get_int(j, "n_heads", 0);
  a.n_kv_heads = get_int(j, "n_kv_heads", 0);
  a.E = get_int(j, "E", 0);
  a.E_a = get_int(j, "E_a", 0);
  a.E_s = get_int(j, "E_s", 0);
  if (j.contains("vocab")) a.vocab = j.at("vocab").get<std::int64_t>();
  a.seq = get_int(j, "seq", 1);
  ensure_valid(a);
  return a;
}

std::string arch_to_json_text(const MoEArchitecture& a, bool pretty) {
  json j{{"n_layers", a.n_layers},
         {"n_dense_layers", a.n_dense_layers},
         {"d_model", a.d_model},
         {"d_ffn", a.d_ffn},
         {"d_expert", a.d_expert},
         {"d_shared", a.d_shared},
         {"n_heads", a.n_heads},
         {"n_kv_heads", a.n_kv_heads},
         {"E", a.E},
         {"E_a", a.E_a},
         {"E_s", a.E_s},
         {"vocab", a.vocab},
         {"seq", a.seq}};
  return pretty ? j.dump(2) : j.dump();
}

MoEArchitecture load_arch_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open architecture file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return arch_from_json_text(buf.str());
}

}  // namespace moelever

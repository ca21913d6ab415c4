// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "moelever/fit.hpp"
#include "moelever/laws.hpp"

namespace moelever {

/// Everything the CLI needs to evaluate the laws: joint EL coefficients, the
/// hyperparameter laws and the four allocation laws, plus provenance text.
struct LawBundle {
  ELCoefficients el_coefficients;
  PowerLaw lr_law;
  PowerLaw batch_law;
  PowerLaw alloc_dense_M;
  PowerLaw alloc_dense_D;
  PowerLaw alloc_moe_M;
  PowerLaw alloc_moe_D;
  std::string provenance;
};

/// Bundle with the built-in fitted defaults.
LawBundle default_law_bundle();

std::string law_bundle_to_json_text(const LawBundle& bundle, bool pretty = false);
LawBundle law_bundle_from_json_text(const std::string& text);
void write_law_bundle(const LawBundle& bundle, const std::string& path);

/// Reads either a full bundle or a bare coefficient object (the
/// el_coefficients schema) from a JSON file.
LawBundle load_law_bundle(const std::string& path);

std::string el_coefficients_to_json_text(const ELCoefficients& c, bool pretty = false);
ELCoefficients el_coefficients_from_json_text(const std::string& text);

struct RowError {
  int line = 0;  // 1-based line number in the input file
  std::string message;
};

struct LoadResult {
  std::vector<RunRecord> records;
  std::vector<RowError> errors;
};

enum class RunFormat { csv, json };

/// Run-record CSV columns, exact header:
///   arch_id,M,D,C,loss,lr,batch_tokens,A,G,S
/// lr and batch_tokens may be empty; scientific notation accepted; decimal
/// point '.', no thousands separators. Rows violating C = M*D (1e-6 relative)
/// or with malformed numbers are rejected into the error list with their line
/// number. A missing required column fails the whole load.
LoadResult load_runs(const std::string& path, RunFormat format);
LoadResult parse_runs_csv(const std::string& text);
LoadResult parse_runs_json(const std::string& text);
std::string runs_to_csv(const std::vector<RunRecord>& runs);

/// EL observations as CSV with header: A,G,C,EL.
std::vector<ELObservation> load_el_observations(const std::string& path);
std::vector<ELObservation> parse_el_observations_csv(const std::string& text);
std::string el_observations_to_csv(const std::vector<ELObservation>& observations);

}  // namespace moelever

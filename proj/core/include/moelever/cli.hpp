// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace moelever {

/// Runs one CLI invocation. args excludes the program name. All numeric output
/// is JSON on `out`; diagnostics go to `err`. Returns the process exit code:
/// 0 success, 2 validation/usage error, 3 fit non-convergence.
///
/// The environment variable MOELEVER_COEFFS may name a default law-bundle
/// file; an explicit --coeffs flag overrides it.
int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace moelever

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace moelever {

/// Bad input: invalid architecture, out-of-domain argument, malformed file.
/// CLI maps this to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// Fit could not produce usable parameters. CLI maps non-convergence to exit code 3.
class FitError : public std::runtime_error {
 public:
  enum class Kind { insufficient_data, non_convergence, bad_split };

  FitError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

}  // namespace moelever

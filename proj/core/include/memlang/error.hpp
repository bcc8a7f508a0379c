// Copyright 2026 The memlang Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace memlang {

/// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent user input: grammar files, configs, CLI flags.
/// The CLI maps this family to exit code 1.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Grammar text that fails to parse or validate. Carries the 1-based source
/// position when the failure is local to a line (0 otherwise).
class GrammarError : public ConfigError {
 public:
  GrammarError(const std::string& what, int line = 0, int column = 0)
      : ConfigError(line > 0 ? "line " + std::to_string(line) + ", column " +
                                   std::to_string(column) + ": " + what
                             : what),
        line_(line),
        column_(column) {}

  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  int line_;
  int column_;
};

/// Failures during a computation: non-finite values, exhausted budgets,
/// division guards. The CLI maps this family to exit code 2.
class RuntimeError : public Error {
 public:
  using Error::Error;
};

class NumericError : public RuntimeError {
 public:
  using RuntimeError::RuntimeError;
};

/// A bounded search (expansion depth, rejection sampling, enumeration
/// states) ran out of budget.
class BudgetExceeded : public RuntimeError {
 public:
  using RuntimeError::RuntimeError;
};

}  // namespace memlang

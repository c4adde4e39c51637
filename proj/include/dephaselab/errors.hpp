// Copyright 2026 The dephaselab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace dephaselab {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or physically inconsistent input (shapes, non-Hermitian h, bad tags).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Configuration text rejected by the strict parser.
class ConfigError : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

/// The exact oracle refuses problems whose joint configuration count exceeds its budget.
class SizeLimit : public Error {
 public:
  SizeLimit(const std::string& what, double count) : Error(what), m_count(count) {}
  double count() const { return m_count; }

 private:
  double m_count;
};

/// The doubled ground state is not unique (gap at the Fermi level below threshold).
class DegenerateGroundState : public Error {
 public:
  DegenerateGroundState(const std::string& what, std::vector<double> eigenvalues)
      : Error(what), m_eigenvalues(std::move(eigenvalues)) {}
  const std::vector<double>& eigenvalues() const { return m_eigenvalues; }

 private:
  std::vector<double> m_eigenvalues;
};

/// A negative Monte Carlo weight was met while sampling an odd flavor power.
class SignProblem : public Error {
 public:
  using Error::Error;
};

/// A quantity that must hold identically (weight reality, NaN-free weights) failed.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

}  // namespace dephaselab

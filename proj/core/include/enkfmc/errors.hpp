#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace enkfmc {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Index or dimension outside the valid range of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Invalid user-supplied configuration (bad key, bad value, impossible tiling).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A dense materialization would exceed the configured size cap.
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// A linear-algebra kernel failed to produce a usable result.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, double residual = 0.0)
      : Error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// The forecast model produced a non-finite state.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::size_t step)
      : Error(what), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

/// Internal bookkeeping contract violated (e.g. a merge writing a row twice).
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

/// Rethrows the in-flight exception with `prefix` prepended to its message,
/// preserving the library error type. Call only from inside a catch block.
[[noreturn]] inline void rethrow_with_context(const std::string& prefix) {
  try {
    throw;
  } catch (const NumericalError& e) {
    throw NumericalError(prefix + e.what(), e.residual());
  } catch (const DivergenceError& e) {
    throw DivergenceError(prefix + e.what(), e.step());
  } catch (const DomainError& e) {
    throw DomainError(prefix + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError(prefix + e.what());
  } catch (const CapacityError& e) {
    throw CapacityError(prefix + e.what());
  } catch (const ConsistencyError& e) {
    throw ConsistencyError(prefix + e.what());
  } catch (const Error& e) {
    throw Error(prefix + e.what());
  }
}

}  // namespace enkfmc

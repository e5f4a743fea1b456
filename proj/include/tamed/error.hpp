#pragma once

#include <stdexcept>
#include <string>

namespace tamed {

/// Arguments outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// A computation produced a non-finite or otherwise unusable value.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Requested feature is outside what the library implements.
class UnsupportedError : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw DomainError(message);
}

} // namespace tamed

#pragma once

#include <stdexcept>
#include <string>

namespace sdde {

enum class ErrorKind {
  NonPositiveDelay,
  InvalidGrid,
  EmptyControlLattice,
  GrowthViolated,
  LipschitzViolated,
  DiscountTooSmall,
  GridMismatch,
  HorizonNotAligned,
  TimeNotAligned,
  NonFinite,
  NotLinearModel,
  DomainViolation,
  SingularBlock,
  CertificateFailed,
  NOutOfRange,
  ControlOutOfSet,
  SearchTooLarge,
  RegressionSingular,
  SignConstraintViolated,
  ConfigError,
  InvalidArgument,
};

const char* to_string(ErrorKind kind);

// Every failure carries its kind and the module that raised it.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string module, const std::string& what)
      : std::runtime_error(what), kind_(kind), module_(std::move(module)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& module() const noexcept { return module_; }

 private:
  ErrorKind kind_;
  std::string module_;
};

}  // namespace sdde

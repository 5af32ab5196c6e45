#include "sdde/error.hpp"

namespace sdde {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NonPositiveDelay: return "NonPositiveDelay";
    case ErrorKind::InvalidGrid: return "InvalidGrid";
    case ErrorKind::EmptyControlLattice: return "EmptyControlLattice";
    case ErrorKind::GrowthViolated: return "GrowthViolated";
    case ErrorKind::LipschitzViolated: return "LipschitzViolated";
    case ErrorKind::DiscountTooSmall: return "DiscountTooSmall";
    case ErrorKind::GridMismatch: return "GridMismatch";
    case ErrorKind::HorizonNotAligned: return "HorizonNotAligned";
    case ErrorKind::TimeNotAligned: return "TimeNotAligned";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::NotLinearModel: return "NotLinearModel";
    case ErrorKind::DomainViolation: return "DomainViolation";
    case ErrorKind::SingularBlock: return "SingularBlock";
    case ErrorKind::CertificateFailed: return "CertificateFailed";
    case ErrorKind::NOutOfRange: return "NOutOfRange";
    case ErrorKind::ControlOutOfSet: return "ControlOutOfSet";
    case ErrorKind::SearchTooLarge: return "SearchTooLarge";
    case ErrorKind::RegressionSingular: return "RegressionSingular";
    case ErrorKind::SignConstraintViolated: return "SignConstraintViolated";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace sdde

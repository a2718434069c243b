#pragma once

#include <stdexcept>
#include <string>

namespace lsvi {

struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct NotPositiveDefinite : Error {
  explicit NotPositiveDefinite(const std::string& msg) : Error(msg) {}
};
struct DimensionMismatch : Error {
  explicit DimensionMismatch(const std::string& msg) : Error(msg) {}
};
struct SingularDesign : Error {
  explicit SingularDesign(const std::string& msg) : Error(msg) {}
};
struct DomainViolation : Error {
  explicit DomainViolation(const std::string& msg) : Error(msg) {}
};
struct TargetNotFinite : Error {
  explicit TargetNotFinite(const std::string& msg) : Error(msg) {}
};
struct StepsizeCollapse : Error {
  explicit StepsizeCollapse(const std::string& msg) : Error(msg) {}
};
struct DegenerateData : Error {
  explicit DegenerateData(const std::string& msg) : Error(msg) {}
};
struct ParseError : Error {
  explicit ParseError(const std::string& msg) : Error(msg) {}
};
struct ConfigError : Error {
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

}  // namespace lsvi

#pragma once

#include <stdexcept>
#include <string>

namespace eptrap {

// All library failures derive from Error and carry a short machine-readable
// kind token ("config", "no-EP-found", ...) that the CLI maps to exit codes.
class Error : public std::runtime_error {
public:
  Error(std::string kind, const std::string& msg)
      : std::runtime_error(kind + ": " + msg), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

private:
  std::string kind_;
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& msg) : Error("config", msg) {}
};

struct DimensionError : Error {
  explicit DimensionError(const std::string& msg) : Error("dimension", msg) {}
};

struct ConvergenceError : Error {
  explicit ConvergenceError(const std::string& msg)
      : Error("convergence", msg) {}
};

struct IllConditionedError : Error {
  explicit IllConditionedError(const std::string& msg)
      : Error("ill-conditioned", msg) {}
};

struct NotAnEpError : Error {
  explicit NotAnEpError(const std::string& msg) : Error("not-an-EP", msg) {}
};

struct NoEpFoundError : Error {
  explicit NoEpFoundError(const std::string& msg) : Error("no-EP-found", msg) {}
};

struct PoleError : Error {
  explicit PoleError(const std::string& msg) : Error("pole", msg) {}
};

struct DomainError : Error {
  explicit DomainError(const std::string& msg) : Error("domain", msg) {}
};

struct GridError : Error {
  explicit GridError(const std::string& msg) : Error("grid-too-coarse", msg) {}
};

struct StepSizeError : Error {
  explicit StepSizeError(const std::string& msg) : Error("step-size", msg) {}
};

struct ScenarioAssertionError : Error {
  explicit ScenarioAssertionError(const std::string& msg)
      : Error("scenario-assertion", msg) {}
};

}  // namespace eptrap

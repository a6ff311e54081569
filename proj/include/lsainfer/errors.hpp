#pragma once

#include <stdexcept>
#include <string>

namespace lsa {

/// Base of every error thrown by the library. `origin` names the module
/// (or config path) the failure came from.
class Error : public std::runtime_error {
 public:
  Error(std::string origin, const std::string& what)
      : std::runtime_error(origin + ": " + what), origin_(std::move(origin)) {}
  const std::string& origin() const noexcept { return origin_; }

 private:
  std::string origin_;
};

class DimensionError : public Error {
  using Error::Error;
};
class SingularMatrixError : public Error {
  using Error::Error;
};
class NotHurwitzError : public Error {
  using Error::Error;
};
class RankDeficientError : public Error {
  using Error::Error;
};
class DivergenceError : public Error {
  using Error::Error;
};
class DegenerateEnsembleError : public Error {
  using Error::Error;
};
class ConfigError : public Error {
  using Error::Error;
};

}  // namespace lsa

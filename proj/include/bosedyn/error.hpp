#pragma once

#include <stdexcept>
#include <string>

namespace bose {

// Bad input or configuration. Maps to exit code 1 in the CLI.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// A checked invariant failed at run time (conservation, symmetry, truncation). Exit code 2.
class InvariantError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class ConvergenceError : public InvariantError {
public:
  ConvergenceError(const std::string& what, double best_residual)
      : InvariantError(what), best_residual_(best_residual) {}
  double best_residual() const { return best_residual_; }

private:
  double best_residual_;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ConfigError(msg);
}

}  // namespace bose

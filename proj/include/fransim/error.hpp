#pragma once

#include <stdexcept>
#include <string>

namespace fransim {

// Raised when a postselecting operation leaves (numerically) no probability
// mass behind, e.g. projecting |L,L> onto the short arms.
class EmptyPostselection : public std::runtime_error {
 public:
  explicit EmptyPostselection(const std::string& what)
      : std::runtime_error(what) {}
};

// Configuration-level failure: bad file, bad field, violated invariant.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Wraps a failure from a pipeline stage with the stage label prepended.
class StageError : public std::runtime_error {
 public:
  StageError(const std::string& stage, const std::string& what)
      : std::runtime_error(stage + ": " + what), stage_(stage) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

}  // namespace fransim

#pragma once

#include <stdexcept>
#include <string>

namespace graph_nls {

// Invalid graph, mesh, model or configuration input.
class InputError : public std::invalid_argument {
public:
  explicit InputError(const std::string& what) : std::invalid_argument(what) {}
};

// Half-line truncation too short for the requested construction.
class TruncationError : public InputError {
public:
  TruncationError(const std::string& what, double suggested_L) : InputError(what), suggested_L_(suggested_L) {}
  double suggested_L() const { return suggested_L_; }

private:
  double suggested_L_;
};

// A numerical procedure failed to reach its contract (singular system,
// divergence, stagnation, geometry violated).
class SolverError : public std::runtime_error {
public:
  explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace graph_nls

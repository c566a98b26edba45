#pragma once

#include <stdexcept>
#include <string>

namespace mimocal {

// Pattern has no good link, so no variance matrix exists (rate is 0 upstream).
struct NoGoodLinksError : std::domain_error {
  explicit NoGoodLinksError(const std::string& what) : std::domain_error(what) {}
};

// Requested state space would be too large to materialize.
struct StateSpaceCapError : std::domain_error {
  explicit StateSpaceCapError(const std::string& what) : std::domain_error(what) {}
};

// Markov-chain parameters admit no stationary behavior (e.g. p_gb = p_bg = 0).
struct DegenerateChainError : std::domain_error {
  explicit DegenerateChainError(const std::string& what) : std::domain_error(what) {}
};

// Parameter combination is out of the model's admissible range.
struct InfeasibleParameterError : std::domain_error {
  explicit InfeasibleParameterError(const std::string& what) : std::domain_error(what) {}
};

// Brute-force enumeration refused: path space exceeds the safety guard.
struct EnumerationGuardError : std::domain_error {
  explicit EnumerationGuardError(const std::string& what) : std::domain_error(what) {}
};

}  // namespace mimocal

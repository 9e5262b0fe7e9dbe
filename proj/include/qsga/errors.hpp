#pragma once

#include <stdexcept>
#include <string>

namespace qsga {

/// Precondition on an argument violated (index out of range, length mismatch, ...).
class invalid_argument : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Mathematical domain violation (empty level set, reducible chain, bad log argument).
class domain_error : public std::domain_error {
  public:
    using std::domain_error::domain_error;
};

/// Request exceeds an enumeration cap (cube size, exact state space).
class capacity_error : public std::length_error {
  public:
    using std::length_error::length_error;
};

/// Operation needs a limit repartition F, which custom selection tables lack.
class unsupported_scheme : public std::logic_error {
  public:
    using std::logic_error::logic_error;
};

/// Run configuration rejected before any trial started.
class config_error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

} // namespace qsga

#pragma once

#include <stdexcept>
#include <string>

namespace irissr {

// Invalid arguments are reported with std::invalid_argument. The types below
// cover the remaining failure modes that callers may want to handle apart.

/// An output pixel was not covered by any assembled block.
class CoverageGapError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A weight stream failed magic, version, length or checksum validation.
class CorruptWeightsError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A training regime or learned method needs base weights that are not available.
class MissingWeightsError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidAnnotationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Two iris codes share no valid sample at any tested shift.
class IncomparableError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Corpus or configuration failed a consistency check.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace irissr

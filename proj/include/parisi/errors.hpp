#pragma once

#include <stdexcept>
#include <string>

namespace parisi {

// Invalid argument to an operation (outside the documented domain).
struct domain_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Malformed configuration (bad JSON, unknown keys, inconsistent options).
struct config_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// A grid was too small for the requested computation (escaping probability
// mass or density leakage above tolerance).
struct grid_overflow_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A solver configuration violates its own stability constraint.
struct rejected_config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A callable that should have been a CDF was not monotone.
struct invalid_cdf_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Ratio check hit a nonpositive denominator.
struct degenerate_denominator_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A matrix that must be positive semi-definite was not; carries the witness
// location when one exists.
struct not_psd_error : std::runtime_error {
    double witness;
    explicit not_psd_error(const std::string& msg, double w = 0.0)
        : std::runtime_error(msg), witness(w) {}
};

// Root finding failed to bracket a sign change.
struct root_bracket_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct invalid_modified_measure_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// An analytic hypothesis of the requested certificate failed, so the
// computation is refused rather than attempted. Carries the name of the failed hypothesis; the CLI
// maps this to exit code 2.
struct hypothesis_error : std::runtime_error {
    std::string hypothesis;
    hypothesis_error(std::string name, const std::string& detail)
        : std::runtime_error(name + ": " + detail), hypothesis(std::move(name)) {}
};

}  // namespace parisi

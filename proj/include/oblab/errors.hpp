#ifndef OBLAB_ERRORS_HPP
#define OBLAB_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace oblab {

/// Evaluation requested outside the grid (or too close to its boundary).
struct OutOfBoundsError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A structural hypothesis on the problem data is violated (non-SPD matrix,
/// nonpositive right-hand side at a probed point, divergent Dini integral).
struct HypothesisError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Geometric precondition failure: ball leaves the domain, point too close
/// to the boundary, empty or full coincidence set.
struct GeometryError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Iterative solver did not converge (cap reached, active-set cycling).
struct SolverError : std::runtime_error {
    double last_residual = 0.0;
    SolverError(const std::string& what, double residual)
        : std::runtime_error(what), last_residual(residual) {}
};

/// Discretization produced an invalid system (e.g. nonpositive diagonal).
struct AssemblyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Invalid blow-up profile (trace != 1, not PSD) or no acceptable fit.
struct ProfileError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Requested radius below the resolvable scale of the grid.
struct UnderresolvedError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed scenario configuration.
struct ConfigError : std::runtime_error {
    int line = 0;
    ConfigError(const std::string& what, int line_no)
        : std::runtime_error(what), line(line_no) {}
};

}  // namespace oblab

#endif

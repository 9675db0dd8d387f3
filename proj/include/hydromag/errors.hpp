#ifndef HYDROMAG_ERRORS_HPP
#define HYDROMAG_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hydromag {

// Base class for everything this library throws on purpose.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad parameter values (negative digit counts, nu outside {0,1}, ...).
struct InvalidArgument : Error {
    using Error::Error;
};

// Exactly zero pivot during LU elimination; carries the offending pivot index.
struct SingularMatrixError : Error {
    std::size_t pivot_index;
    SingularMatrixError(const std::string& msg, std::size_t idx)
        : Error(msg), pivot_index(idx) {}
};

// Root bracketing violated (same sign at both ends) or lo >= hi.
struct BracketError : Error {
    using Error::Error;
};

// A scalar function produced a non-finite value; message names the abscissa.
struct EvaluationError : Error {
    using Error::Error;
};

// Eigenvalue search finished but the refinement deltas did not settle.
struct ConvergenceError : Error {
    double delta_imax;
    double delta_rmatch;
    double delta_nconst;
    ConvergenceError(const std::string& msg, double di, double dr, double dn)
        : Error(msg), delta_imax(di), delta_rmatch(dr), delta_nconst(dn) {}
};

// Requested bound state not present in the scanned window.
struct StateNotFoundError : Error {
    using Error::Error;
};

// Trajectory ran into the minimum-radius guard around a Coulomb center.
struct CollisionError : Error {
    double time;
    CollisionError(const std::string& msg, double t) : Error(msg), time(t) {}
};

// Command-line / config usage problems (maps to exit code 1).
struct UsageError : Error {
    using Error::Error;
};

}  // namespace hydromag

#endif

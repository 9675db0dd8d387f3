#ifndef HYDROMAG_ROOTFIND_HPP
#define HYDROMAG_ROOTFIND_HPP

#include <functional>
#include <vector>

#include "hydromag/errors.hpp"

namespace hydromag::hp {

// Sign evaluator: returns -1, 0 or +1 at an abscissa. Evaluations may be very
// expensive (each one can be a full series build), so the algorithms below
// are frugal with calls and never evaluate the same point twice.
using SignFn = std::function<int(double)>;

// Interval known (or assumed) to contain a sign change; lo == hi marks an
// exact zero hit during scanning.
struct Bracket {
    double lo = 0;
    double hi = 0;
};

// Bisection on a sign change. Requires sign(lo) != sign(hi) (else
// BracketError). Returns the midpoint of the final bracket once its width is
// <= tol. A zero sign anywhere returns that abscissa immediately.
// EvaluationError thrown by the evaluator is re-thrown with the abscissa
// appended to the message.
double bracketed_root(const SignFn& f, double lo, double hi, double tol);

// Sample f at steps+1 uniform points on [lo, hi] and collect every adjacent
// sign change as a bracket (degenerate bracket for an exact zero sample).
std::vector<Bracket> sign_change_scan(const SignFn& f, double lo, double hi, int steps);

}  // namespace hydromag::hp

#endif

#ifndef HYDROMAG_ZEEMAN_INTERNAL_HPP
#define HYDROMAG_ZEEMAN_INTERNAL_HPP

// Shared internals of the series machinery: the row-recurrence kernel used by
// both the stored-table builder and the streaming boundary-determinant path,
// and the control-sizing policy.

#include <vector>

#include "hydromag/precision.hpp"
#include "hydromag/zeeman.hpp"

namespace hydromag::zeeman::detail {

using Row = std::vector<hp::Real>;

// Rough decimal magnitude from the binary exponent; -inf for zero. Used only
// for stopping/overflow heuristics, never for arithmetic.
double log10_abs_approx(const hp::Real& x);

// Copy into the target precision (Real's copy constructor preserves the
// source precision, which is not what a build wants).
hp::Real to_context(const hp::PrecisionContext& ctx, const hp::Real& x);

// Quantities fixed for one (sector, gamma, E_b, precision) build.
struct BuildConstants {
    hp::PrecisionContext ctx;
    SectorLabel sector;
    int abs_m;
    hp::Real gamma_sq_over_4;  // gamma^2 / 4
    hp::Real source_mid;       // 2 E_b - gamma (|m| + 1)
};

BuildConstants make_build_constants(const hp::PrecisionContext& ctx,
                                    SectorLabel sector, const hp::Real& gamma,
                                    const hp::Real& e_b);

// Particular integral of the row-i coefficient relation, solved for even
// powers t^{2k} with the closure a_{i,j} = 0 for j > i (descending in j).
// Null row pointers mean identically-zero rows. `out` is overwritten with
// i/2 + 1 entries.
void particular_row_into(const BuildConstants& bc, long i, const Row* rm1,
                         const Row* rm2, const Row* rm4, Row& out);

// Homogeneous polynomial coefficients h_{i,2k}, k = 0..i/2, for even i.
void homogeneous_into(const BuildConstants& bc, long i, Row& out);

// Control-sizing policy. kappa = sqrt(2 E_b) sets the exponential decay
// scale; the diamagnetic growth gamma r^2/4 sets the cancellation budget.
namespace policy {

inline constexpr double kSafetyDigits = 15;
inline constexpr double kGrowthMarginDigits = 8;
inline constexpr double kLog10E = 0.43429448190325176;
// Leading constant of the box-truncation shift C r^4 exp(-2 kappa r),
// calibrated against resolved solves at two field strengths (measured C in
// [0.03, 0.35] depending on the state; the top of that range is used so the
// sized radius errs large).
inline constexpr double kWallAmplitude = 0.35;

// Decimal digits the binding-energy tolerance asks for, with headroom.
int eb_digits(double eb_tol);
// Box-truncation shift estimate at radius r.
double wall_estimate(double kappa, double r);
// Radius where the box-truncation shift falls to a third of eb_tol.
double wall_radius(double kappa, double eb_tol);
// Largest radius whose angular-resolution cost stays affordable: the
// collocation order grows like gamma r^2 / 4 (see collocation_order), so
// this caps that exponent near 100.
double cost_radius(double gamma);
// Decimal digits lost to intermediate coefficient growth at radius r.
double growth_digits(double gamma, double kappa, double r);
// Total working digits needed for a solve at radius r and tolerance eb_tol.
int digits_needed(double gamma, double kappa, double r, double eb_tol);
// Largest radius the digit budget affords (huge when gamma = 0).
double radius_cap(double gamma, double kappa, int digits, double eb_tol);
// Free constants needed so the angular basis resolves the matching rows at
// radius r.  Two regimes meet here: a loosely-bound state needs roughly
// sqrt(a t) terms to resolve the transverse factor spanning a = gamma r^2/4
// e-folds to 10^-t, while a tightly-bound state must cancel the growing
// radial channel across the whole sphere, which takes about a - 2.2 kappa r
// terms; an undersized basis displaces determinant roots by amounts that
// shrink with neither digits nor rows.
int collocation_order(double gamma, double kappa, double r, double eb_tol);
// Cap on series rows at radius r: the boundary fold needs rows until the
// summands fall depth_digits below their peak, which happens near
// 2 mu (gamma r^2/4) rows with mu solving mu (1 - ln mu) = -depth/a.
long row_cap(double gamma, double kappa, double r, int n_constants,
             double depth_digits);

}  // namespace policy

// Controls resolved against the physical scales of one build: kappa is the
// decay rate sqrt(2 E_b) the radius is sized from.
struct Sizing {
    int digits = 0;
    double radius = 0;
    long i_cap = 0;
    int n_constants = 0;
    double tail_cut = 0;    // stop streaming rows this many digits below peak
    double wall_est = 0;    // modeled box-truncation shift at `radius`
    bool radius_capped = false;  // digit budget forced radius below target
};
// n_constants_request >= 0 is honored verbatim; pass a negative value to size
// the collocation order from gamma and the resolved radius.
Sizing resolve_sizing(double gamma, double kappa, double eb_tol,
                      int n_constants_request, const SolveControls& controls);

}  // namespace hydromag::zeeman::detail

#endif

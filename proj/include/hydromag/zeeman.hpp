#ifndef HYDROMAG_ZEEMAN_HPP
#define HYDROMAG_ZEEMAN_HPP

// Bound states of a hydrogen atom in a uniform magnetic field by a
// two-variable power series in (r, sin theta). A state in the sector
// (m, nu) — azimuthal quantum number and z-parity — is written
//
//   Psi = e^{i m phi} (r sin theta)^{|m|} (r cos theta)^{nu} psi(r, theta),
//   psi = sum_i sum_k A_{i,2k} r^i sin^{2k} theta,
//
// with E = gamma (|m| + m + 1)/2 - E_b. The coefficient rows follow a
// four-term recurrence in i; P+1 free even-row constants are fixed by
// collocation of psi = 0 on a matching sphere, and the binding energy is
// the root of that system's determinant.

#include <cstddef>
#include <string>
#include <vector>

#include "hydromag/errors.hpp"
#include "hydromag/matrix.hpp"
#include "hydromag/precision.hpp"

namespace hydromag::zeeman {

// Symmetry sector: azimuthal quantum number m and z-parity nu (0 even,
// 1 odd).
struct SectorLabel {
    int m = 0;
    int nu = 0;
};

// Zero digits / i_max / r_match mean "auto-size from gamma and eb_tol".
// Invariant (after resolution): i_max >= 2 * n_constants + 2.
struct SolveControls {
    int digits = 0;        // working decimal digits
    long i_max = 0;        // series truncation cap in r-degree
    // Collocation order P (free constants C_0, C_2, ..., C_{2P}).  0 sizes P
    // from gamma and the matching radius; strong fields need more angular
    // resolution at the boundary than weak ones.
    int n_constants = 0;
    double r_match = 0;    // matching-sphere radius
    double eb_tol = 1e-12; // absolute bisection tolerance on E_b
};

// Coefficients of one converged series. Storage is triangular and compact:
// a[i][k] = A_{i,2k} for 2k <= i, so row i holds i/2 + 1 entries.
struct CoefficientTable {
    SectorLabel sector;
    std::string gamma;                      // field strength, exact decimal
    double e_b = 0;                         // binding energy of the build
    std::vector<hp::Real> constants;        // C_0, C_2, ..., C_{2P}
    std::vector<std::vector<hp::Real>> a;   // a[i][k] = A_{i,2k}
    int digits = 0;                         // working precision of the build
};

// Shift of E_b under each control refinement: deepened row truncation,
// changed matching radius, enlarged collocation order. The truncation deltas
// (delta_imax, delta_nconst) must stay below 10x eb_tol or the solve throws
// ConvergenceError. delta_rmatch joins that gate when the enlarged-radius
// probe is affordable (weak and moderate fields); at strong fields it is
// measured by pulling the sphere inward instead and reported ungated, as the
// modeled error bar of the finite matching sphere.
struct ConvergenceRecord {
    double delta_imax = 0;
    double delta_rmatch = 0;
    double delta_nconst = 0;
};

struct SolveDiagnostics {
    int digits_used = 0;
    long i_max_cap = 0;            // row cap of the base solve
    long rows_built = 0;           // rows actually summed before early stop
    double r_match_used = 0;
    int n_constants_used = 0;
    double peak_summand_log10 = 0; // largest |A r^i| seen on the sphere
    bool cancellation_warning = false;   // modeled field-driven series growth
                                         // within 20 digits of the precision
    bool radius_capped_warning = false;  // digits forced r_match below target
    double box_shift_estimate = 0;       // modeled E_b shift from the finite
                                         // matching sphere at the radius used
    double survey_e_b = 0;               // coarse-stage location
    double dropped_equation_residual = 0;  // residual of the collocation
                                           // equation left out of the solve,
                                           // as the equivalent binding-energy
                                           // displacement in units of eb_tol;
                                           // artifact roots blow this up
    long determinant_evaluations = 0;
};

struct SeriesSolution {
    CoefficientTable table;
    SolveControls controls;          // fully resolved controls of the base solve
    double total_energy = 0;         // gamma(|m|+m+1)/2 - E_b
    hp::LogDet residual_logdet;      // boundary determinant at the solution
    ConvergenceRecord convergence;
    SolveDiagnostics diagnostics;
};

// Even-parity homogeneous angular polynomial for row i: the full coefficient
// list [h_{i,0}, h_{i,1}, ..., h_{i,i}] in powers of t = sin theta, with
// h_{i,0} = 1 and every odd entry exactly zero. Only even i admits a
// polynomial solution; odd i throws InvalidArgument.
std::vector<hp::Real> homogeneous_polynomial(const hp::PrecisionContext& ctx,
                                             SectorLabel sector, long i);

// Particular integral for row i given the three source rows below it: the
// full list [a_{i,0}, ..., a_{i,i}] with odd entries zero. Source rows use
// the same full-degree layout (entry j = coefficient of t^j); empty vectors
// mean identically-zero rows. For even i the top coefficient a_{i,i} is the
// homogeneous freedom and is pinned to zero here.
std::vector<hp::Real> particular_row(const hp::PrecisionContext& ctx,
                                     SectorLabel sector,
                                     const hp::Real& gamma, const hp::Real& e_b,
                                     const std::vector<hp::Real>& row_im1,
                                     const std::vector<hp::Real>& row_im2,
                                     const std::vector<hp::Real>& row_im4,
                                     long i);

// Full table build at fixed (gamma, E_b, constants). `constants` holds
// C_0, C_2, ..., C_{2P}; rows are produced in increasing i up to the
// truncation cap (auto-sized if controls.i_max == 0).
CoefficientTable build_table(SectorLabel sector, const std::string& gamma,
                             double e_b, const std::vector<hp::Real>& constants,
                             const SolveControls& controls);

// Max-abs defect of the coefficient recurrence for row i of a built table,
// normalized by the largest participating coefficient. A correct build keeps
// this near the working-precision floor for every row.
hp::Real row_defect(const CoefficientTable& table, long i);

// Series value sum_i sum_k A_{i,2k} r^i sin^{2k}theta by Horner in r with an
// inner Horner in sin^2 theta.
hp::Real evaluate_psi(const CoefficientTable& table, const hp::Real& r,
                      const hp::Real& theta);

struct ComplexValue {
    hp::Real re;
    hp::Real im;
};

// Full wavefunction including the sector prefactor
// e^{i m phi} (r sin theta)^{|m|} (r cos theta)^{nu} * psi.
ComplexValue evaluate_full_wavefunction(const CoefficientTable& table,
                                        const hp::Real& r, const hp::Real& theta,
                                        const hp::Real& phi);

// Log-determinant of the (P+1)x(P+1) boundary collocation system at the given
// binding energy: psi must vanish on the sphere r = r_match at P+1
// Chebyshev-distributed angles; its zero in E_b is the eigenvalue condition.
hp::LogDet boundary_determinant(SectorLabel sector, const std::string& gamma,
                                double e_b, const SolveControls& controls);

// Locate the state_index-th binding energy of the sector (1 = largest E_b),
// bisect the boundary determinant to eb_tol, solve for the constants, and
// measure refinement stability. Throws StateNotFoundError when the scan
// window holds fewer states, ConvergenceError when refinement deltas exceed
// 10x eb_tol.
SeriesSolution solve_binding_energy(SectorLabel sector, const std::string& gamma,
                                    int state_index, const SolveControls& controls);

// E = gamma(|m|+m+1)/2 - E_b (also stored in the solution record).
double total_energy(const SeriesSolution& solution);

// |Psi|^2 on a uniform cylindrical grid: rho in [0, rho_max] (n_rho points),
// z in [-z_max, z_max] (n_z points, includes 0 when n_z is odd), normalized
// so the discrete volume integral 2 pi Int |Psi|^2 rho drho dz = 1.
struct DensityGrid {
    int n_rho = 0;
    int n_z = 0;
    std::vector<double> rho;      // n_rho axis values
    std::vector<double> z;        // n_z axis values
    std::vector<double> density;  // row-major [iz * n_rho + irho]
    double raw_norm = 0;          // volume integral before normalization
};
DensityGrid density_grid(const SeriesSolution& solution, double rho_max,
                         double z_max, int n_rho, int n_z);

}  // namespace hydromag::zeeman

#endif

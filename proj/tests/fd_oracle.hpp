#ifndef HYDROMAG_TESTS_FD_ORACLE_HPP
#define HYDROMAG_TESTS_FD_ORACLE_HPP

// Independent low-precision reference for the ground-state energy of a
// hydrogen atom in a uniform magnetic field (m = 0, even z-parity), used as
// a cross-check oracle for the high-precision series solver. Entirely
// double-precision finite differences + sparse shift-invert iteration; shares
// no code path with the series machinery.

namespace hydromag::fd {

struct GroundState {
    double energy = 0;     // total energy (Hartree) on the given grid
    double residual = 0;   // ||H v - E v|| after iteration
    int iterations = 0;
};

// Ground-state energy on one grid: cylindrical (rho, z) box [0,L]^2 with
// half-offset spacing h, even mirror symmetry at z = 0, Dirichlet walls at
// rho = L and |z| = L. `sigma` is the shift for the shift-invert iteration
// and must lie below the ground state.
GroundState ground_energy(double gamma, double h, double box, double sigma);

struct Extrapolated {
    double e_coarse = 0;
    double e_mid = 0;
    double e_fine = 0;
    double fitted_order = 0;  // observed convergence order from the 3 grids
    double energy = 0;        // Richardson-extrapolated energy
};

// Three-grid (h, h/2, h/4) energy with fitted-order Richardson
// extrapolation; h = 0.08, box = 12.8, sigma = -0.6. Validated against the
// exact field-free ground state to ~1e-6.
Extrapolated ground_energy_richardson(double gamma);

}  // namespace hydromag::fd

#endif

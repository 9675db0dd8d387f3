#include "doctest.h"

#include <cmath>

#include "fd_oracle.hpp"

using namespace hydromag;

TEST_SUITE("oracle") {

TEST_CASE("field-free ground state reproduces the exact -1/2 Hartree") {
    auto r = fd::ground_energy_richardson(0.0);
    // Exact value validates the whole discretization chain; observed error
    // is ~4e-7, the 1e-5 bound leaves a safety factor of ~25.
    CHECK(std::fabs(r.energy - (-0.5)) < 1e-5);
    CHECK(r.fitted_order > 1.8);
    CHECK(r.fitted_order < 2.6);
    // Energies must approach the limit monotonically from above.
    CHECK(r.e_coarse > r.e_mid);
    CHECK(r.e_mid > r.e_fine);
    CHECK(r.e_fine > r.energy);
}

TEST_CASE("ground-state binding energy at gamma = 1") {
    auto r = fd::ground_energy_richardson(1.0);
    const double e_b = 1.0 / 2 - r.energy;  // E = gamma(|m|+m+1)/2 - E_b at m = 0
    CHECK(std::fabs(e_b - 0.831169) < 1e-4);
    CHECK(r.fitted_order > 1.8);
    CHECK(r.fitted_order < 2.6);
}

TEST_CASE("single-grid solve converges and reports a small residual") {
    auto g = fd::ground_energy(1.0, 0.16, 12.8, -0.6);
    CHECK(g.iterations < 40);
    // Symmetric eigenproblem: eigenvalue error ~ residual^2 / gap, so 1e-6
    // here already means ~1e-12 on the energy.
    CHECK(g.residual < 1e-6);
    CHECK(g.energy < 0);
}

TEST_CASE("repeated runs are bit-identical") {
    auto a = fd::ground_energy(1.0, 0.16, 12.8, -0.6);
    auto b = fd::ground_energy(1.0, 0.16, 12.8, -0.6);
    CHECK(a.energy == b.energy);
    CHECK(a.residual == b.residual);
    CHECK(a.iterations == b.iterations);
}

}  // TEST_SUITE

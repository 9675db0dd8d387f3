#include <cmath>
#include <cstring>
#include <string>

#include "doctest.h"
#include "hydromag/errors.hpp"
#include "hydromag/precision.hpp"
#include "hydromag/zeeman.hpp"

using hydromag::InvalidArgument;
namespace zm = hydromag::zeeman;

TEST_SUITE("solve") {

TEST_CASE("boundary determinant changes sign across the field-free ground "
          "state") {
    zm::SolveControls c;
    c.digits = 30;
    c.n_constants = 1;
    c.r_match = 20;
    const auto lo = zm::boundary_determinant({0, 0}, "0", 0.45, c);
    const auto hi = zm::boundary_determinant({0, 0}, "0", 0.55, c);
    REQUIRE(lo.sign != 0);
    REQUIRE(hi.sign != 0);
    CHECK(lo.sign * hi.sign == -1);
}

TEST_CASE("field-free spectrum through the solver") {
    zm::SolveControls c;  // defaults: eb_tol 1e-12, everything else auto
    const auto s1 = zm::solve_binding_energy({0, 0}, "0", 1, c);
    CHECK(std::abs(s1.table.e_b - 0.5) < 1e-9);
    CHECK(std::abs(s1.total_energy + 0.5) < 1e-9);
    CHECK(s1.convergence.delta_imax <= 1e-8);
    CHECK(s1.convergence.delta_rmatch <= 1e-8);
    CHECK(s1.convergence.delta_nconst <= 1e-8);
    CHECK(s1.diagnostics.digits_used == 50);
    CHECK(std::abs(s1.diagnostics.survey_e_b - 0.5) < 1e-4);
    CHECK(s1.diagnostics.determinant_evaluations > 0);
    // At gamma = 0 only C_0 carries the state, so the residual of the
    // dropped collocation equation is determined by noise constants and can
    // legitimately be O(1); just require it to be reported.
    CHECK(std::isfinite(s1.diagnostics.dropped_equation_residual));
    CHECK_FALSE(s1.diagnostics.radius_capped_warning);
    CHECK(zm::total_energy(s1) == s1.total_energy);

    const auto s2 = zm::solve_binding_energy({0, 0}, "0", 2, c);
    CHECK(std::abs(s2.table.e_b - 0.125) < 1e-9);
}

TEST_CASE("magnetized ground state matches the reference value") {
    zm::SolveControls c;
    const auto s = zm::solve_binding_energy({0, 0}, "1", 1, c);
    // Cross-checked against the double-precision finite-difference oracle
    // (0.8311684 +- ~1e-6) and the literature value 0.8311689.
    CHECK(std::abs(s.table.e_b - 0.8311689) < 1e-5);
    CHECK(s.convergence.delta_imax <= 1e-8);
    CHECK(s.convergence.delta_rmatch <= 1e-8);
    CHECK(s.convergence.delta_nconst <= 1e-8);
    // Total energy picks up the paramagnetic shift: E = gamma/2 - E_b.
    CHECK(std::abs(s.total_energy - (0.5 - s.table.e_b)) < 1e-14);
    // Here every constant is pinned by the null vector, so the dropped
    // equation must be satisfied to within the working precision headroom.
    CHECK(s.diagnostics.dropped_equation_residual < 1e-6);

    // Bitwise determinism of the full pipeline.
    const auto again = zm::solve_binding_energy({0, 0}, "1", 1, c);
    CHECK(std::memcmp(&s.table.e_b, &again.table.e_b, sizeof(double)) == 0);
    CHECK(s.diagnostics.determinant_evaluations ==
          again.diagnostics.determinant_evaluations);
}

TEST_CASE("excited and odd-parity states stay ordered") {
    zm::SolveControls c;
    const auto g1 = zm::solve_binding_energy({0, 0}, "1", 1, c);
    const auto g2 = zm::solve_binding_energy({0, 0}, "1", 2, c);
    CHECK(g2.table.e_b > 0);
    CHECK(g2.table.e_b < g1.table.e_b);
    // Zero-field value 1/8 is a lower bound at gamma = 1 for this level.
    CHECK(g2.table.e_b > 0.125);

    const auto odd = zm::solve_binding_energy({0, 1}, "1", 1, c);
    CHECK(odd.table.sector.nu == 1);
    CHECK(odd.table.e_b > 0.125);
    CHECK(odd.table.e_b < g1.table.e_b);
}

TEST_CASE("solver rejects malformed requests") {
    zm::SolveControls c;
    CHECK_THROWS_AS(zm::solve_binding_energy({0, 0}, "0", 0, c),
                    InvalidArgument);
    CHECK_THROWS_AS(zm::solve_binding_energy({0, 0}, "-1", 1, c),
                    InvalidArgument);
    zm::SolveControls bad = c;
    bad.eb_tol = -1;
    CHECK_THROWS_AS(zm::solve_binding_energy({0, 0}, "0", 1, bad),
                    InvalidArgument);
    bad = c;
    bad.n_constants = -3;
    CHECK_THROWS_AS(zm::solve_binding_energy({0, 0}, "0", 1, bad),
                    InvalidArgument);
    CHECK_THROWS_AS(zm::boundary_determinant({0, 0}, "1", -0.5, c),
                    InvalidArgument);
}

}  // TEST_SUITE

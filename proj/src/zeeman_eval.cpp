#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "hydromag/errors.hpp"
#include "hydromag/precision.hpp"
#include "hydromag/zeeman.hpp"
#include "zeeman_internal.hpp"

namespace hydromag::zeeman {

namespace {

// Row polynomial in s2 = sin^2(theta) by Horner.
void row_value(const detail::Row& row, const hp::Real& s2, hp::Real& out) {
    mpfr_set(out.raw(), row.back().raw(), MPFR_RNDN);
    for (long k = static_cast<long>(row.size()) - 2; k >= 0; --k)
        mpfr_fma(out.raw(), out.raw(), s2.raw(), row[k].raw(), MPFR_RNDN);
}

void check_table(const CoefficientTable& table) {
    if (table.a.empty())
        throw InvalidArgument("coefficient table holds no rows");
}

}  // namespace

hp::Real evaluate_psi(const CoefficientTable& table, const hp::Real& r,
                      const hp::Real& theta) {
    check_table(table);
    const hp::PrecisionContext ctx = hp::make_context(table.digits);
    const hp::Real r_c = detail::to_context(ctx, r);
    hp::Real s2 = hp::sin(detail::to_context(ctx, theta));
    mpfr_sqr(s2.raw(), s2.raw(), MPFR_RNDN);

    // Horner in r over rows, inner Horner in sin^2 theta per row.
    hp::Real acc(ctx, 0L), rv(ctx);
    for (long i = static_cast<long>(table.a.size()) - 1; i >= 0; --i) {
        row_value(table.a[i], s2, rv);
        mpfr_fma(acc.raw(), acc.raw(), r_c.raw(), rv.raw(), MPFR_RNDN);
    }
    return acc;
}

ComplexValue evaluate_full_wavefunction(const CoefficientTable& table,
                                        const hp::Real& r, const hp::Real& theta,
                                        const hp::Real& phi) {
    check_table(table);
    const hp::PrecisionContext ctx = hp::make_context(table.digits);
    const hp::Real r_c = detail::to_context(ctx, r);
    const hp::Real theta_c = detail::to_context(ctx, theta);
    const int abs_m = std::abs(table.sector.m);

    hp::Real pref(ctx, 1L);
    if (abs_m > 0) pref = pow_si(r_c * hp::sin(theta_c), abs_m);
    if (table.sector.nu == 1) pref = pref * (r_c * hp::cos(theta_c));
    const hp::Real mod = pref * evaluate_psi(table, r, theta);

    hp::Real mphi = detail::to_context(ctx, phi);
    mpfr_mul_si(mphi.raw(), mphi.raw(), table.sector.m, MPFR_RNDN);
    return ComplexValue{hp::cos(mphi) * mod, hp::sin(mphi) * mod};
}

double total_energy(const SeriesSolution& solution) {
    return solution.total_energy;
}

namespace {

// Streaming ascending-row evaluation of psi at one point, stopping once row
// contributions have fallen far enough below their peak that the remaining
// tail cannot move the working-precision result. Far cheaper than the full
// table at radii well inside the matching sphere.
void psi_point(const CoefficientTable& table, const hp::Real& r,
               const hp::Real& s2, hp::Real& psi, hp::Real& pw, hp::Real& rv) {
    mpfr_set_zero(psi.raw(), 1);
    if (mpfr_zero_p(r.raw())) {
        mpfr_set(psi.raw(), table.a[0][0].raw(), MPFR_RNDN);
        return;
    }
    mpfr_set_si(pw.raw(), 1, MPFR_RNDN);
    const double tail_drop = table.digits - 8;
    double peak = -std::numeric_limits<double>::infinity();
    int streak = 0;
    for (std::size_t i = 0; i < table.a.size(); ++i) {
        if (i > 0) mpfr_mul(pw.raw(), pw.raw(), r.raw(), MPFR_RNDN);
        row_value(table.a[i], s2, rv);
        mpfr_mul(rv.raw(), rv.raw(), pw.raw(), MPFR_RNDN);
        mpfr_add(psi.raw(), psi.raw(), rv.raw(), MPFR_RNDN);
        const double contrib = detail::log10_abs_approx(rv);
        peak = std::max(peak, contrib);
        streak = contrib < peak - tail_drop ? streak + 1 : 0;
        if (streak >= 10) break;
    }
}

}  // namespace

DensityGrid density_grid(const SeriesSolution& solution, double rho_max,
                         double z_max, int n_rho, int n_z) {
    const CoefficientTable& table = solution.table;
    check_table(table);
    if (!(rho_max > 0) || !(z_max > 0))
        throw InvalidArgument("density grid extents must be positive");
    if (n_rho < 2 || n_z < 2)
        throw InvalidArgument("density grid needs at least 2 points per axis");

    DensityGrid grid;
    grid.n_rho = n_rho;
    grid.n_z = n_z;
    grid.rho.resize(n_rho);
    grid.z.resize(n_z);
    grid.density.assign(static_cast<std::size_t>(n_rho) * n_z, 0.0);

    const double d_rho = rho_max / (n_rho - 1);
    const double d_z = 2 * z_max / (n_z - 1);
    for (int i = 0; i < n_rho; ++i) grid.rho[i] = i * d_rho;
    // Midpoint-anchored so an odd n_z hits z = 0 exactly (the nodal plane of
    // odd-parity sectors must come out as an exact zero, not roundoff).
    const double mid = (n_z - 1) / 2.0;
    for (int j = 0; j < n_z; ++j) grid.z[j] = (j - mid) * d_z;

    const hp::PrecisionContext ctx = hp::make_context(table.digits);
    const int abs_m = std::abs(table.sector.m);
    const int nu = table.sector.nu;
    hp::Real r(ctx), s2(ctx), psi(ctx), pw(ctx), rv(ctx);
    for (int j = 0; j < n_z; ++j) {
        const double z = grid.z[j];
        for (int i = 0; i < n_rho; ++i) {
            const double rho = grid.rho[i];
            const double r2 = rho * rho + z * z;
            // |Psi|^2 = rho^(2|m|) z^(2 nu) psi^2; phi dependence is a pure
            // phase. The prefactor vanishes on the axis (m != 0) and in the
            // z = 0 plane (nu = 1) without help from the series part.
            double pref = 1.0;
            for (int p = 0; p < abs_m; ++p) pref *= rho * rho;
            if (nu == 1) pref *= z * z;
            if (pref == 0.0 && (abs_m > 0 || nu == 1)) continue;
            mpfr_set_d(r.raw(), std::sqrt(r2), MPFR_RNDN);
            if (r2 > 0)
                mpfr_set_d(s2.raw(), rho * rho / r2, MPFR_RNDN);
            else
                mpfr_set_zero(s2.raw(), 1);
            psi_point(table, r, s2, psi, pw, rv);
            const double pd = psi.to_double();
            grid.density[static_cast<std::size_t>(j) * n_rho + i] =
                pref * pd * pd;
        }
    }

    // Trapezoid volume integral 2 pi Int rho |Psi|^2 drho dz, then scale to
    // unit norm.
    double norm = 0;
    for (int j = 0; j < n_z; ++j) {
        const double wz = (j == 0 || j == n_z - 1) ? 0.5 : 1.0;
        for (int i = 0; i < n_rho; ++i) {
            const double wr = (i == 0 || i == n_rho - 1) ? 0.5 : 1.0;
            norm += wz * wr * grid.rho[i] *
                    grid.density[static_cast<std::size_t>(j) * n_rho + i];
        }
    }
    norm *= 2 * 3.14159265358979323846 * d_rho * d_z;
    grid.raw_norm = norm;
    if (norm > 0)
        for (double& d : grid.density) d /= norm;
    return grid;
}

}  // namespace hydromag::zeeman

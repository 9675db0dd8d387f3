#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "hydromag/errors.hpp"
#include "hydromag/precision.hpp"
#include "hydromag/zeeman.hpp"
#include "zeeman_internal.hpp"

namespace hydromag::zeeman {
namespace detail {

namespace {

constexpr double kLog10Two = 0.30102999566398120;

void check_sector(SectorLabel sector) {
    if (sector.nu != 0 && sector.nu != 1)
        throw InvalidArgument("z-parity nu must be 0 or 1, got " +
                              std::to_string(sector.nu));
}

}  // namespace

double log10_abs_approx(const hp::Real& x) {
    if (mpfr_zero_p(x.raw())) return -std::numeric_limits<double>::infinity();
    return static_cast<double>(mpfr_get_exp(x.raw())) * kLog10Two;
}

hp::Real to_context(const hp::PrecisionContext& ctx, const hp::Real& x) {
    hp::Real y(ctx);
    mpfr_set(y.raw(), x.raw(), MPFR_RNDN);
    return y;
}

BuildConstants make_build_constants(const hp::PrecisionContext& ctx,
                                    SectorLabel sector, const hp::Real& gamma,
                                    const hp::Real& e_b) {
    check_sector(sector);
    const int abs_m = std::abs(sector.m);
    BuildConstants bc{ctx, sector, abs_m, hp::Real(ctx), hp::Real(ctx)};
    mpfr_sqr(bc.gamma_sq_over_4.raw(), gamma.raw(), MPFR_RNDN);
    mpfr_div_si(bc.gamma_sq_over_4.raw(), bc.gamma_sq_over_4.raw(), 4,
                MPFR_RNDN);
    mpfr_mul_si(bc.source_mid.raw(), e_b.raw(), 2, MPFR_RNDN);
    hp::Real t(ctx);
    mpfr_mul_si(t.raw(), gamma.raw(), abs_m + 1, MPFR_RNDN);
    mpfr_sub(bc.source_mid.raw(), bc.source_mid.raw(), t.raw(), MPFR_RNDN);
    return bc;
}

void particular_row_into(const BuildConstants& bc, long i, const Row* rm1,
                         const Row* rm2, const Row* rm4, Row& out) {
    if (i < 0) throw InvalidArgument("row index must be non-negative");
    const long nk = i / 2 + 1;
    const long sigma = 2L * (bc.abs_m + bc.sector.nu) + 1;
    out.clear();
    out.reserve(nk);
    for (long k = 0; k < nk; ++k) out.emplace_back(bc.ctx, 0L);

    // Even i: the j = i relation is degenerate (the coefficient of a_{i,i}
    // vanishes), which is exactly the homogeneous freedom. Pin a_{i,i} = 0;
    // the caller adds C * h_i on top.
    long k = (i % 2 == 0) ? nk - 2 : nk - 1;
    hp::Real src(bc.ctx), tmp(bc.ctx);
    auto term = [](const Row* row, long idx) -> const hp::Real* {
        if (row == nullptr || idx < 0 ||
            idx >= static_cast<long>(row->size()))
            return nullptr;
        return &(*row)[idx];
    };
    for (; k >= 0; --k) {
        const long j = 2 * k;
        mpfr_set_zero(src.raw(), 1);
        if (const hp::Real* s = term(rm4, k - 1))
            hp::fma_acc(src, bc.gamma_sq_over_4, *s);
        if (const hp::Real* s = term(rm2, k))
            hp::fma_acc(src, bc.source_mid, *s);
        if (const hp::Real* s = term(rm1, k)) {
            mpfr_mul_si(tmp.raw(), s->raw(), 2, MPFR_RNDN);
            mpfr_sub(src.raw(), src.raw(), tmp.raw(), MPFR_RNDN);
        }
        if (k + 1 < nk) {
            const long c_up = (j + 2) * (j + 2L * bc.abs_m + 2);
            mpfr_mul_si(tmp.raw(), out[k + 1].raw(), c_up, MPFR_RNDN);
            mpfr_sub(src.raw(), src.raw(), tmp.raw(), MPFR_RNDN);
        }
        const long denom = (i - j) * (i + j + sigma);
        mpfr_div_si(out[k].raw(), src.raw(), denom, MPFR_RNDN);
    }
}

void homogeneous_into(const BuildConstants& bc, long i, Row& out) {
    if (i < 0 || i % 2 != 0)
        throw InvalidArgument(
            "homogeneous angular polynomial exists only for even row index, "
            "got i=" + std::to_string(i));
    const long nk = i / 2 + 1;
    const long sigma = 2L * (bc.abs_m + bc.sector.nu) + 1;
    out.clear();
    out.reserve(nk);
    out.emplace_back(bc.ctx, 1L);
    for (long k = 0; k + 1 < nk; ++k) {
        const long j = 2 * k;
        const long num = -(i - j) * (i + j + sigma);
        const long den = (j + 2) * (j + 2L * bc.abs_m + 2);
        out.emplace_back(bc.ctx);
        mpfr_mul_si(out[k + 1].raw(), out[k].raw(), num, MPFR_RNDN);
        mpfr_div_si(out[k + 1].raw(), out[k + 1].raw(), den, MPFR_RNDN);
    }
}

namespace policy {

int eb_digits(double eb_tol) {
    return std::max(8, static_cast<int>(std::ceil(-std::log10(eb_tol))) + 2);
}

double wall_estimate(double kappa, double r) {
    const double k = std::max(kappa, 1e-8);
    return kWallAmplitude * r * r * r * r * std::exp(-2 * k * r);
}

double wall_radius(double kappa, double eb_tol) {
    const double k = std::max(kappa, 1e-8);
    const double target = std::max(eb_tol / 3, 1e-290);
    const double base = std::log(kWallAmplitude / target);
    double r = base / (2 * k) + 1;
    for (int it = 0; it < 6; ++it)
        r = (base + 4 * std::log(std::max(r, 1.0))) / (2 * k);
    return r;
}

double cost_radius(double gamma) {
    if (gamma <= 0) return 1e30;
    return 20.0 / std::sqrt(gamma);
}

double growth_digits(double gamma, double kappa, double r) {
    return kLog10E * std::max(0.0, gamma * r * r / 4 - kappa * r);
}

int digits_needed(double gamma, double kappa, double r, double eb_tol) {
    return static_cast<int>(std::ceil(growth_digits(gamma, kappa, r) +
                                      eb_digits(eb_tol) + kSafetyDigits));
}

double radius_cap(double gamma, double kappa, int digits, double eb_tol) {
    if (gamma <= 0) return 1e30;
    const double budget = std::max(0.0, (digits - eb_digits(eb_tol) -
                                         kGrowthMarginDigits) /
                                            kLog10E);
    // Solve gamma r^2/4 - kappa r = budget for the positive root.
    return (kappa + std::sqrt(kappa * kappa + gamma * budget)) / (gamma / 2);
}

int collocation_order(double gamma, double kappa, double r, double eb_tol) {
    const double t = std::max(6.0, static_cast<double>(eb_digits(eb_tol)));
    const double a = std::max(0.0, gamma) * r * r / 4;
    const int weak = static_cast<int>(std::ceil(0.95 * std::sqrt(a * t))) + 2;
    const int strong =
        static_cast<int>(std::ceil(a - 2.2 * std::max(kappa, 0.0) * r)) + 8;
    return std::max({12, weak, strong});
}

long row_cap(double gamma, double kappa, double r, int n_constants,
             double depth_digits) {
    const double a = std::max(0.0, gamma) * r * r / 4;
    double mu = 3.0;
    if (a > 1e-9) {
        // mu (1 - ln mu) = -depth_nats / a, bisected on mu in [1, 14].
        const double rhs = -std::max(10.0, depth_digits) / (kLog10E * a);
        double lo = 1.0, hi = 14.0;
        if (hi * (1 - std::log(hi)) > rhs) {
            mu = hi;
        } else {
            for (int it = 0; it < 50; ++it) {
                mu = 0.5 * (lo + hi);
                (mu * (1 - std::log(mu)) > rhs ? lo : hi) = mu;
            }
        }
    }
    const long cap = static_cast<long>(
                         std::ceil(2 * mu * a + 10 * std::max(kappa, 0.0) * r)) +
                     80;
    return std::max({140L, cap, 2L * n_constants + 2});
}

}  // namespace policy

Sizing resolve_sizing(double gamma, double kappa, double eb_tol,
                      int n_constants_request, const SolveControls& controls) {
    if (eb_tol <= 0) throw InvalidArgument("eb_tol must be positive");
    Sizing s;
    const double r_free = std::min(policy::wall_radius(kappa, eb_tol),
                                   policy::cost_radius(gamma));
    if (controls.r_match > 0) {
        s.radius = controls.r_match;
    } else if (controls.digits > 0) {
        const double cap =
            policy::radius_cap(gamma, kappa, controls.digits, eb_tol);
        s.radius = std::min(r_free, cap);
        s.radius_capped = cap < 0.995 * r_free;
    } else {
        s.radius = r_free;
    }
    s.digits = controls.digits > 0
                   ? controls.digits
                   : std::max(32, policy::digits_needed(gamma, kappa, s.radius,
                                                        eb_tol));
    if (s.digits < 15)
        throw InvalidArgument("working precision below 15 digits");
    s.wall_est = policy::wall_estimate(kappa, s.radius);
    s.tail_cut =
        std::min<double>(s.digits - 8,
                         policy::growth_digits(gamma, kappa, s.radius) +
                             policy::eb_digits(eb_tol) + 25);
    s.n_constants =
        n_constants_request >= 0
            ? n_constants_request
            : policy::collocation_order(gamma, kappa, s.radius, eb_tol);
    if (controls.i_max > 0) {
        if (controls.i_max < 2L * s.n_constants + 2)
            throw InvalidArgument(
                "i_max must be at least 2*n_constants + 2 so every free "
                "constant's row exists");
        s.i_cap = controls.i_max;
    } else {
        s.i_cap = policy::row_cap(gamma, kappa, s.radius, s.n_constants,
                                  s.tail_cut);
    }
    return s;
}

}  // namespace detail

namespace {

using detail::Row;

// Compact (even-power) row -> full-degree list with zero odd entries.
std::vector<hp::Real> expand_full_degree(const hp::PrecisionContext& ctx,
                                         const Row& compact, long i) {
    std::vector<hp::Real> full;
    full.reserve(i + 1);
    for (long j = 0; j <= i; ++j) {
        if (j % 2 == 0)
            full.push_back(compact[j / 2]);
        else
            full.emplace_back(ctx, 0L);
    }
    return full;
}

// Full-degree list -> compact even entries; rejects nonzero odd entries.
Row compress_even(const std::vector<hp::Real>& full, const char* name) {
    Row compact;
    compact.reserve(full.size() / 2 + 1);
    for (std::size_t j = 0; j < full.size(); ++j) {
        if (j % 2 == 0) {
            compact.push_back(full[j]);
        } else if (full[j].sign() != 0) {
            throw InvalidArgument(std::string(name) +
                                  " has a nonzero odd-power coefficient; the "
                                  "series carries even powers of sin(theta) "
                                  "only");
        }
    }
    return compact;
}

}  // namespace

std::vector<hp::Real> homogeneous_polynomial(const hp::PrecisionContext& ctx,
                                             SectorLabel sector, long i) {
    const detail::BuildConstants bc = detail::make_build_constants(
        ctx, sector, hp::Real(ctx, 0L), hp::Real(ctx, 0L));
    Row compact;
    detail::homogeneous_into(bc, i, compact);
    return expand_full_degree(ctx, compact, i);
}

std::vector<hp::Real> particular_row(const hp::PrecisionContext& ctx,
                                     SectorLabel sector,
                                     const hp::Real& gamma, const hp::Real& e_b,
                                     const std::vector<hp::Real>& row_im1,
                                     const std::vector<hp::Real>& row_im2,
                                     const std::vector<hp::Real>& row_im4,
                                     long i) {
    if (i < 0) throw InvalidArgument("row index must be non-negative");
    const detail::BuildConstants bc =
        detail::make_build_constants(ctx, sector, gamma, e_b);
    const Row c1 = compress_even(row_im1, "row i-1");
    const Row c2 = compress_even(row_im2, "row i-2");
    const Row c4 = compress_even(row_im4, "row i-4");
    Row compact;
    detail::particular_row_into(bc, i, row_im1.empty() ? nullptr : &c1,
                                row_im2.empty() ? nullptr : &c2,
                                row_im4.empty() ? nullptr : &c4, compact);
    return expand_full_degree(ctx, compact, i);
}

CoefficientTable build_table(SectorLabel sector, const std::string& gamma,
                             double e_b, const std::vector<hp::Real>& constants,
                             const SolveControls& controls) {
    if (constants.empty())
        throw InvalidArgument("at least one free constant (C_0) is required");
    if (!std::isfinite(e_b))
        throw InvalidArgument("binding energy must be finite");
    const int n_constants = static_cast<int>(constants.size()) - 1;

    // Coarse double-precision pass over gamma for control sizing (also
    // validates the decimal string before any expensive work).
    const hp::PrecisionContext probe = hp::make_context(17);
    const double gamma_d = hp::Real(probe, gamma).to_double();
    if (!(gamma_d >= 0))
        throw InvalidArgument("field strength gamma must be non-negative");
    if (e_b <= 0 && controls.r_match <= 0)
        throw InvalidArgument(
            "r_match must be given explicitly when e_b <= 0: there is no "
            "decay scale to size it from");
    const double kappa = e_b > 0 ? std::sqrt(2 * e_b) : 0.0;
    const detail::Sizing sz = detail::resolve_sizing(
        gamma_d, kappa, controls.eb_tol, n_constants, controls);

    const hp::PrecisionContext ctx = hp::make_context(sz.digits);
    const hp::Real gamma_hp(ctx, gamma);
    const hp::Real e_b_hp(ctx, e_b);
    const detail::BuildConstants bc =
        detail::make_build_constants(ctx, sector, gamma_hp, e_b_hp);

    CoefficientTable table;
    table.sector = sector;
    table.gamma = gamma;
    table.e_b = e_b;
    table.digits = sz.digits;
    table.constants.reserve(constants.size());
    for (const hp::Real& c : constants)
        table.constants.push_back(detail::to_context(ctx, c));

    const double log_r = std::log10(sz.radius);
    double peak_log = -std::numeric_limits<double>::infinity();
    int small_streak = 0;
    table.a.reserve(sz.i_cap + 1);
    Row h;
    for (long i = 0; i <= sz.i_cap; ++i) {
        const Row* rm1 = i >= 1 ? &table.a[i - 1] : nullptr;
        const Row* rm2 = i >= 2 ? &table.a[i - 2] : nullptr;
        const Row* rm4 = i >= 4 ? &table.a[i - 4] : nullptr;
        Row row;
        detail::particular_row_into(bc, i, rm1, rm2, rm4, row);
        if (i % 2 == 0 && i / 2 < static_cast<long>(constants.size())) {
            detail::homogeneous_into(bc, i, h);
            for (std::size_t k = 0; k < row.size(); ++k)
                hp::fma_acc(row[k], table.constants[i / 2], h[k]);
        }
        double row_log = -std::numeric_limits<double>::infinity();
        for (const hp::Real& c : row)
            row_log = std::max(row_log, detail::log10_abs_approx(c));
        row_log += static_cast<double>(i) * log_r;
        table.a.push_back(std::move(row));
        peak_log = std::max(peak_log, row_log);
        small_streak = row_log < peak_log - sz.tail_cut ? small_streak + 1 : 0;
        if (small_streak >= 12 && i >= 2L * n_constants + 2) break;
    }
    return table;
}

hp::Real row_defect(const CoefficientTable& table, long i) {
    if (i < 0 || i >= static_cast<long>(table.a.size()))
        throw InvalidArgument("row index outside the built table");
    const hp::PrecisionContext ctx = hp::make_context(table.digits);
    const hp::Real gamma_hp(ctx, table.gamma);
    const hp::Real e_b_hp(ctx, table.e_b);
    const detail::BuildConstants bc =
        detail::make_build_constants(ctx, table.sector, gamma_hp, e_b_hp);
    const long sigma = 2L * (bc.abs_m + bc.sector.nu) + 1;

    auto coeff = [&table](long row, long j) -> const hp::Real* {
        if (row < 0 || j < 0 || j % 2 != 0) return nullptr;
        if (row >= static_cast<long>(table.a.size())) return nullptr;
        const Row& r = table.a[row];
        const long k = j / 2;
        if (k >= static_cast<long>(r.size())) return nullptr;
        return &r[k];
    };

    hp::Real worst(ctx, 0L);
    hp::Real scale(ctx, 0L);
    hp::Real defect(ctx), prod(ctx);
    auto add_product = [&](long factor, const hp::Real* x, bool subtract) {
        if (x == nullptr) return;
        mpfr_mul_si(prod.raw(), x->raw(), factor, MPFR_RNDN);
        if (subtract)
            mpfr_sub(defect.raw(), defect.raw(), prod.raw(), MPFR_RNDN);
        else
            mpfr_add(defect.raw(), defect.raw(), prod.raw(), MPFR_RNDN);
        if (hp::cmp_abs(prod, scale) > 0)
            mpfr_abs(scale.raw(), prod.raw(), MPFR_RNDN);
    };
    hp::Real src_term(ctx);
    auto add_weighted = [&](const hp::Real& w, const hp::Real* x,
                            bool subtract) {
        if (x == nullptr) return;
        mpfr_mul(src_term.raw(), w.raw(), x->raw(), MPFR_RNDN);
        if (subtract)
            mpfr_sub(defect.raw(), defect.raw(), src_term.raw(), MPFR_RNDN);
        else
            mpfr_add(defect.raw(), defect.raw(), src_term.raw(), MPFR_RNDN);
        if (hp::cmp_abs(src_term, scale) > 0)
            mpfr_abs(scale.raw(), src_term.raw(), MPFR_RNDN);
    };

    for (long k = 0; 2 * k <= i; ++k) {
        const long j = 2 * k;
        mpfr_set_zero(defect.raw(), 1);
        add_product((j + 2) * (j + 2L * bc.abs_m + 2), coeff(i, j + 2), false);
        add_product((i - j) * (i + j + sigma), coeff(i, j), false);
        add_weighted(bc.gamma_sq_over_4, coeff(i - 4, j - 2), true);
        add_weighted(bc.source_mid, coeff(i - 2, j), true);
        add_product(-2, coeff(i - 1, j), true);
        if (hp::cmp_abs(defect, worst) > 0)
            mpfr_abs(worst.raw(), defect.raw(), MPFR_RNDN);
    }
    if (scale.sign() == 0) return hp::Real(ctx, 0L);
    return worst / scale;
}

}  // namespace hydromag::zeeman

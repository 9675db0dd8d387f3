#include "doctest.h"

#include <gmpxx.h>

#include <cmath>
#include <cstdint>
#include <vector>

#include "hydromag/matrix.hpp"

using namespace hydromag;
using namespace hydromag::hp;

namespace {

// Deterministic small-integer matrix entries from a fixed LCG so the exact
// rational oracle below is reproducible byte-for-byte.
struct Lcg {
    std::uint64_t s;
    int next_small() {  // in [-9, 9]
        s = s * 6364136223846793005ULL + 1442695040888963407ULL;
        return static_cast<int>((s >> 33) % 19) - 9;
    }
};

// Exact determinant of an integer matrix via cofactor expansion on GMP
// rationals (fine for n <= 6).
mpq_class exact_det(const std::vector<std::vector<mpq_class>>& m) {
    const std::size_t n = m.size();
    if (n == 1) return m[0][0];
    mpq_class det = 0;
    for (std::size_t j = 0; j < n; ++j) {
        std::vector<std::vector<mpq_class>> minor(n - 1);
        for (std::size_t i = 1; i < n; ++i) {
            for (std::size_t k = 0; k < n; ++k) {
                if (k != j) minor[i - 1].push_back(m[i][k]);
            }
        }
        mpq_class term = m[0][j] * exact_det(minor);
        if (j % 2 == 0) det += term; else det -= term;
    }
    return det;
}

}  // namespace

TEST_SUITE("matrix") {

TEST_CASE("log-determinant matches exact rational cofactor expansion") {
    const int digits = 50;
    auto ctx = make_context(digits);
    Lcg rng{0x9e3779b97f4a7c15ULL};
    for (int trial = 0; trial < 5; ++trial) {
        const std::size_t n = 5;
        HPMatrix a(n, ctx);
        std::vector<std::vector<mpq_class>> q(n, std::vector<mpq_class>());
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                int v = rng.next_small();
                a.at(i, j) = Real(ctx, static_cast<long>(v));
                q[i].push_back(mpq_class(v));
            }
        }
        mpq_class det = exact_det(q);
        LogDet ld = lu_logdet(a);
        if (det == 0) {
            CHECK(ld.sign == 0);
        } else {
            CHECK(ld.sign == (det > 0 ? 1 : -1));
            double ref = std::log(std::fabs(det.get_d()));
            CHECK(std::fabs(ld.log_magnitude - ref) < 1e-10);
        }
    }
}

TEST_CASE("zero determinant reported with sign 0") {
    auto ctx = make_context(30);
    HPMatrix a(3, ctx);
    // Rank-deficient with dyadic elimination multipliers (1/2, 0), so the
    // zero pivot is hit exactly rather than leaving rounding residue.
    int rows[3][3] = {{2, 4, 6}, {1, 2, 3}, {0, 1, 1}};
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            a.at(i, j) = Real(ctx, static_cast<long>(rows[i][j]));
    LogDet ld = lu_logdet(a);
    CHECK(ld.sign == 0);
    CHECK(std::isinf(ld.log_magnitude));
    CHECK(ld.log_magnitude < 0);
}

TEST_CASE("solve against the 4x4 Hilbert matrix with exact rational oracle") {
    // Hilbert matrices are the classic ill-conditioned benchmark; at 60
    // digits a 4x4 solve must be essentially exact.
    const int digits = 60;
    auto ctx = make_context(digits);
    const std::size_t n = 4;
    HPMatrix a(n, ctx);
    std::vector<std::vector<mpq_class>> q(n, std::vector<mpq_class>(n));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            q[i][j] = mpq_class(1, static_cast<long>(i + j + 1));
            a.at(i, j) = Real(ctx, 1.0) / Real(ctx, static_cast<long>(i + j + 1));
        }
    }
    // b = row sums, so the exact solution is x = (1,1,1,1): solve the
    // rational system implicitly by construction.
    std::vector<Real> b;
    for (std::size_t i = 0; i < n; ++i) {
        Real s(ctx, 0.0);
        for (std::size_t j = 0; j < n; ++j) s += a.at(i, j);
        b.push_back(s);
    }
    auto x = linear_solve(a, std::move(b));
    for (std::size_t i = 0; i < n; ++i) {
        CHECK(abs(x[i] - Real(ctx, 1.0)) < Real(ctx, "1e-52"));
    }
}

TEST_CASE("singular solve throws with pivot index") {
    auto ctx = make_context(30);
    HPMatrix a(2, ctx);
    a.at(0, 0) = Real(ctx, 1.0);
    a.at(0, 1) = Real(ctx, 2.0);
    a.at(1, 0) = Real(ctx, 2.0);
    a.at(1, 1) = Real(ctx, 4.0);
    std::vector<Real> b{Real(ctx, 1.0), Real(ctx, 1.0)};
    try {
        linear_solve(a, std::move(b));
        FAIL("expected SingularMatrixError");
    } catch (const SingularMatrixError& e) {
        CHECK(e.pivot_index == 1);
    }
}

TEST_CASE("residual of a random well-conditioned solve is tiny") {
    const int digits = 40;
    auto ctx = make_context(digits);
    Lcg rng{0x51ed2701fffULL};
    const std::size_t n = 6;
    HPMatrix a(n, ctx);
    HPMatrix a_copy(n, ctx);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            long v = rng.next_small();
            if (i == j) v += 40;  // diagonal dominance keeps it well-conditioned
            a.at(i, j) = Real(ctx, v);
            a_copy.at(i, j) = Real(ctx, v);
        }
    }
    std::vector<Real> b;
    for (std::size_t i = 0; i < n; ++i) b.push_back(Real(ctx, rng.next_small()));
    std::vector<Real> b_copy = b;
    auto x = linear_solve(a, std::move(b));
    // ||A x - b||_inf <= 1e(6-digits) * ||b||_inf
    Real rmax(ctx, 0.0);
    Real bmax(ctx, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        Real r(ctx, 0.0);
        for (std::size_t j = 0; j < n; ++j) fma_acc(r, a_copy.at(i, j), x[j]);
        r -= b_copy[i];
        if (cmp_abs(r, rmax) > 0) rmax = abs(r);
        if (cmp_abs(b_copy[i], bmax) > 0) bmax = abs(b_copy[i]);
    }
    CHECK(rmax < Real(ctx, "1e-34") * bmax);
}

}  // TEST_SUITE

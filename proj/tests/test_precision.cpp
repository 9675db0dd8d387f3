#include "doctest.h"

#include <cmath>

#include "hydromag/precision.hpp"

using namespace hydromag;
using namespace hydromag::hp;

TEST_SUITE("precision") {

TEST_CASE("context maps digits to enough mantissa bits") {
    // ceil(d * log2 10) bits are required to resolve d decimal digits.
    CHECK(make_context(38).bits >= 127);
    CHECK(make_context(280).bits >= 931);
    CHECK(make_context(15).bits >= 50);
    // Guard bits must not be absurd (stay within ~64 extra bits).
    CHECK(make_context(38).bits <= 127 + 64);
}

TEST_CASE("contexts below 15 digits are rejected") {
    CHECK_THROWS_AS(make_context(14), InvalidArgument);
    CHECK_THROWS_AS(make_context(0), InvalidArgument);
    CHECK_THROWS_AS(make_context(-3), InvalidArgument);
}

TEST_CASE("string round trip at 50 digits") {
    auto ctx = make_context(50);
    Real x(ctx, "0.12345678901234567890123456789012345678901234567890");
    std::string s = x.to_string(50);
    Real y(ctx, s);
    Real diff = abs(x - y);
    // Round trip through scientific notation loses at most the last digit.
    CHECK(diff < Real(ctx, "1e-48"));
}

TEST_CASE("string parser rejects garbage") {
    auto ctx = make_context(20);
    CHECK_THROWS_AS(Real(ctx, "12.5abc"), InvalidArgument);
    CHECK_THROWS_AS(Real(ctx, ""), InvalidArgument);
    CHECK_NOTHROW(Real(ctx, "-3.25e-7"));
}

TEST_CASE("arithmetic matches a high-precision identity") {
    // (1 + 1e-30)^2 - 1 - 2e-30 = 1e-60 exactly in real arithmetic; double
    // would lose it entirely. The cancellation burns ~60 digits, so a
    // 120-digit context leaves ~60 digits of the 1e-60 result intact.
    auto ctx = make_context(120);
    Real eps(ctx, "1e-30");
    Real one(ctx, 1.0);
    Real lhs = (one + eps) * (one + eps) - one - eps - eps;
    Real expect(ctx, "1e-60");
    Real rel = abs(lhs - expect) / expect;
    CHECK(rel < Real(ctx, "1e-45"));
}

TEST_CASE("mixed precision results take the wider operand") {
    auto lo = make_context(20);
    auto hi = make_context(100);
    Real a(lo, 1.0);
    Real b(hi, 3.0);
    Real q = a / b;
    CHECK(q.prec() == b.prec());
}

TEST_CASE("sqrt of 2 to 60 digits") {
    auto ctx = make_context(70);
    Real r = sqrt(Real(ctx, 2.0));
    Real ref(ctx, "1.41421356237309504880168872420969807856967187537694809");
    CHECK(abs(r - ref) < Real(ctx, "1e-50"));
}

TEST_CASE("fma and fms accumulators") {
    auto ctx = make_context(40);
    Real acc(ctx, 10.0);
    fma_acc(acc, Real(ctx, 3.0), Real(ctx, 4.0));  // 10 + 12
    CHECK(acc == Real(ctx, 22.0));
    fms_acc(acc, Real(ctx, 2.0), Real(ctx, 5.0));  // 22 - 10
    CHECK(acc == Real(ctx, 12.0));
}

TEST_CASE("sign and comparisons") {
    auto ctx = make_context(20);
    CHECK(Real(ctx, -2.5).sign() == -1);
    CHECK(Real(ctx, 0.0).sign() == 0);
    CHECK(Real(ctx, 7.0).sign() == 1);
    CHECK(Real(ctx, 1.0) < Real(ctx, 2.0));
    CHECK(Real(ctx, 2.0) >= Real(ctx, 2.0));
    CHECK(cmp_abs(Real(ctx, -5.0), Real(ctx, 3.0)) > 0);
}

}  // TEST_SUITE

#include "hydromag/precision.hpp"

#include <cmath>
#include <cstdio>
#include <vector>

namespace hydromag::hp {

mpfr_prec_t bits_for_digits(int digits) {
    // log2(10) = 3.3219...; round up so `digits` decimal digits always fit.
    return static_cast<mpfr_prec_t>(std::ceil(digits * 3.321928094887362)) + 0;
}

PrecisionContext make_context(int digits) {
    if (digits < 15) {
        throw InvalidArgument("working precision must be at least 15 digits, got " +
                              std::to_string(digits));
    }
    PrecisionContext ctx;
    ctx.digits = digits;
    ctx.bits = bits_for_digits(digits) + 16;  // guard bits against rounding drift
    return ctx;
}

Real::Real(const PrecisionContext& ctx, const std::string& decimal) {
    mpfr_init2(v_, ctx.bits);
    const char* s = decimal.c_str();
    char* end = nullptr;
    mpfr_strtofr(v_, s, &end, 10, MPFR_RNDN);
    if (end == s || *end != '\0') {
        mpfr_clear(v_);
        throw InvalidArgument("not a valid decimal number: '" + decimal + "'");
    }
}

std::string Real::to_string(int significant_digits) const {
    int digits = significant_digits;
    if (digits <= 0) {
        // Full precision of this value: bits / log2(10), rounded down, is the
        // number of faithful decimal digits.
        digits = static_cast<int>(static_cast<double>(prec()) / 3.321928094887362);
        if (digits < 15) digits = 15;
    }
    // %.*Re prints (digits) places after the leading digit, so ask for one less.
    int places = digits > 1 ? digits - 1 : 1;
    int n = mpfr_snprintf(nullptr, 0, "%.*Re", places, v_);
    std::vector<char> buf(static_cast<std::size_t>(n) + 1);
    mpfr_snprintf(buf.data(), buf.size(), "%.*Re", places, v_);
    return std::string(buf.data());
}

Real sqrt(const Real& a) {
    Real r(a);
    mpfr_sqrt(r.raw(), a.raw(), MPFR_RNDN);
    return r;
}

Real abs(const Real& a) {
    Real r(a);
    mpfr_abs(r.raw(), a.raw(), MPFR_RNDN);
    return r;
}

Real log(const Real& a) {
    Real r(a);
    mpfr_log(r.raw(), a.raw(), MPFR_RNDN);
    return r;
}

Real log10(const Real& a) {
    Real r(a);
    mpfr_log10(r.raw(), a.raw(), MPFR_RNDN);
    return r;
}

Real exp(const Real& a) {
    Real r(a);
    mpfr_exp(r.raw(), a.raw(), MPFR_RNDN);
    return r;
}

Real pow_si(const Real& a, long n) {
    Real r(a);
    mpfr_pow_si(r.raw(), a.raw(), n, MPFR_RNDN);
    return r;
}

Real const_pi(const PrecisionContext& ctx) {
    Real r(ctx);
    mpfr_const_pi(r.raw(), MPFR_RNDN);
    return r;
}

Real sin(const Real& a) {
    Real r(a);
    mpfr_sin(r.raw(), a.raw(), MPFR_RNDN);
    return r;
}

Real cos(const Real& a) {
    Real r(a);
    mpfr_cos(r.raw(), a.raw(), MPFR_RNDN);
    return r;
}

}  // namespace hydromag::hp

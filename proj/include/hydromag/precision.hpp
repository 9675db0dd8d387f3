#ifndef HYDROMAG_PRECISION_HPP
#define HYDROMAG_PRECISION_HPP

#include <mpfr.h>

#include <string>
#include <utility>

#include "hydromag/errors.hpp"

namespace hydromag::hp {

// Working-precision descriptor. `bits` is the MPFR mantissa width backing the
// requested decimal digit count (ceil(digits * log2(10)) plus guard bits).
struct PrecisionContext {
    int digits = 0;
    mpfr_prec_t bits = 0;
};

// digits >= 15; anything below that is better served by plain double.
PrecisionContext make_context(int digits);

// How many mantissa bits a decimal digit count needs (without guard bits).
mpfr_prec_t bits_for_digits(int digits);

// Thin RAII wrapper around mpfr_t. Values carry their own precision; binary
// operations allocate the result at the wider of the two operand precisions,
// so mixed-precision expressions never silently truncate. All rounding is
// round-to-nearest, which keeps results bit-reproducible across runs.
class Real {
  public:
    explicit Real(const PrecisionContext& ctx) { mpfr_init2(v_, ctx.bits); }
    Real(const PrecisionContext& ctx, double x) {
        mpfr_init2(v_, ctx.bits);
        mpfr_set_d(v_, x, MPFR_RNDN);
    }
    Real(const PrecisionContext& ctx, long x) {
        mpfr_init2(v_, ctx.bits);
        mpfr_set_si(v_, x, MPFR_RNDN);
    }
    Real(const PrecisionContext& ctx, int x) : Real(ctx, static_cast<long>(x)) {}
    // Parses a decimal string; throws InvalidArgument on trailing garbage.
    Real(const PrecisionContext& ctx, const std::string& decimal);

    Real(const Real& o) {
        mpfr_init2(v_, mpfr_get_prec(o.v_));
        mpfr_set(v_, o.v_, MPFR_RNDN);
    }
    Real(Real&& o) noexcept {
        mpfr_init2(v_, mpfr_get_prec(o.v_));
        mpfr_swap(v_, o.v_);
    }
    Real& operator=(const Real& o) {
        if (this != &o) {
            mpfr_set_prec(v_, mpfr_get_prec(o.v_));
            mpfr_set(v_, o.v_, MPFR_RNDN);
        }
        return *this;
    }
    Real& operator=(Real&& o) noexcept {
        if (this != &o) mpfr_swap(v_, o.v_);
        return *this;
    }
    ~Real() { mpfr_clear(v_); }

    mpfr_ptr raw() { return v_; }
    mpfr_srcptr raw() const { return v_; }
    mpfr_prec_t prec() const { return mpfr_get_prec(v_); }

    double to_double() const { return mpfr_get_d(v_, MPFR_RNDN); }
    // Scientific-notation decimal string with the given number of significant
    // digits (0 = full precision of this value).
    std::string to_string(int significant_digits = 0) const;

    bool is_finite() const { return mpfr_number_p(v_) != 0; }
    bool is_nan() const { return mpfr_nan_p(v_) != 0; }
    int sign() const { return mpfr_sgn(v_); }  // -1 / 0 / +1 (0 for NaN too)

    Real& operator+=(const Real& o) { mpfr_add(v_, v_, o.v_, MPFR_RNDN); return *this; }
    Real& operator-=(const Real& o) { mpfr_sub(v_, v_, o.v_, MPFR_RNDN); return *this; }
    Real& operator*=(const Real& o) { mpfr_mul(v_, v_, o.v_, MPFR_RNDN); return *this; }
    Real& operator/=(const Real& o) { mpfr_div(v_, v_, o.v_, MPFR_RNDN); return *this; }
    Real& operator*=(long k) { mpfr_mul_si(v_, v_, k, MPFR_RNDN); return *this; }
    Real& operator/=(long k) { mpfr_div_si(v_, v_, k, MPFR_RNDN); return *this; }

    Real operator-() const {
        Real r(*this);
        mpfr_neg(r.v_, r.v_, MPFR_RNDN);
        return r;
    }

    friend Real binary_op_result(const Real& a, const Real& b);
    friend Real operator+(const Real& a, const Real& b) {
        Real r = binary_op_result(a, b);
        mpfr_add(r.v_, a.v_, b.v_, MPFR_RNDN);
        return r;
    }
    friend Real operator-(const Real& a, const Real& b) {
        Real r = binary_op_result(a, b);
        mpfr_sub(r.v_, a.v_, b.v_, MPFR_RNDN);
        return r;
    }
    friend Real operator*(const Real& a, const Real& b) {
        Real r = binary_op_result(a, b);
        mpfr_mul(r.v_, a.v_, b.v_, MPFR_RNDN);
        return r;
    }
    friend Real operator/(const Real& a, const Real& b) {
        Real r = binary_op_result(a, b);
        mpfr_div(r.v_, a.v_, b.v_, MPFR_RNDN);
        return r;
    }

    friend bool operator<(const Real& a, const Real& b) { return mpfr_less_p(a.v_, b.v_); }
    friend bool operator>(const Real& a, const Real& b) { return mpfr_greater_p(a.v_, b.v_); }
    friend bool operator<=(const Real& a, const Real& b) { return mpfr_lessequal_p(a.v_, b.v_); }
    friend bool operator>=(const Real& a, const Real& b) { return mpfr_greaterequal_p(a.v_, b.v_); }
    friend bool operator==(const Real& a, const Real& b) { return mpfr_equal_p(a.v_, b.v_); }
    friend bool operator!=(const Real& a, const Real& b) { return !mpfr_equal_p(a.v_, b.v_); }

  private:
    Real() { mpfr_init2(v_, MPFR_PREC_MIN); }  // used by binary_op_result
    mpfr_t v_;
};

inline Real binary_op_result(const Real& a, const Real& b) {
    Real r;
    mpfr_set_prec(r.v_, std::max(mpfr_get_prec(a.v_), mpfr_get_prec(b.v_)));
    return r;
}

// In-place accumulators for inner loops (avoid temporaries).
inline void fma_acc(Real& acc, const Real& a, const Real& b) {
    mpfr_fma(acc.raw(), a.raw(), b.raw(), acc.raw(), MPFR_RNDN);  // acc = a*b + acc
}
inline void fms_acc(Real& acc, const Real& a, const Real& b) {
    // acc = acc - a*b, via fms (a*b - acc) and one negation
    mpfr_fms(acc.raw(), a.raw(), b.raw(), acc.raw(), MPFR_RNDN);
    mpfr_neg(acc.raw(), acc.raw(), MPFR_RNDN);
}

Real sqrt(const Real& a);
Real abs(const Real& a);
Real log(const Real& a);
Real log10(const Real& a);
Real exp(const Real& a);
Real pow_si(const Real& a, long n);
Real const_pi(const PrecisionContext& ctx);
Real sin(const Real& a);
Real cos(const Real& a);

// |a| compared against |b| (-1, 0, +1), NaN-safe for our usage.
inline int cmp_abs(const Real& a, const Real& b) { return mpfr_cmpabs(a.raw(), b.raw()); }

}  // namespace hydromag::hp

#endif

#include "hydromag/matrix.hpp"

#include <cmath>
#include <limits>
#include <utility>

namespace hydromag::hp {

namespace {

// Shared in-place LU with partial pivoting. Returns the permutation sign
// (0 if a pivot column is exactly zero, with the column index reported).
int lu_factor(HPMatrix& a, std::vector<std::size_t>& perm, std::size_t& zero_pivot_col) {
    const std::size_t n = a.size();
    perm.resize(n);
    int perm_sign = 1;
    for (std::size_t k = 0; k < n; ++k) {
        // Pivot: largest |a(i,k)| for i >= k.
        std::size_t piv = k;
        for (std::size_t i = k + 1; i < n; ++i) {
            if (cmp_abs(a.at(i, k), a.at(piv, k)) > 0) piv = i;
        }
        if (a.at(piv, k).sign() == 0) {
            zero_pivot_col = k;
            return 0;
        }
        perm[k] = piv;
        if (piv != k) {
            perm_sign = -perm_sign;
            for (std::size_t j = 0; j < n; ++j) std::swap(a.at(k, j), a.at(piv, j));
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            Real m = a.at(i, k) / a.at(k, k);
            for (std::size_t j = k + 1; j < n; ++j) {
                fms_acc(a.at(i, j), m, a.at(k, j));  // a(i,j) -= m * a(k,j)
            }
            a.at(i, k) = std::move(m);  // store the multiplier (L factor)
        }
    }
    return perm_sign;
}

}  // namespace

LogDet lu_logdet(HPMatrix& a) {
    std::vector<std::size_t> perm;
    std::size_t zero_col = 0;
    int perm_sign = lu_factor(a, perm, zero_col);
    LogDet d;
    if (perm_sign == 0) {
        d.sign = 0;
        d.log_magnitude = -std::numeric_limits<double>::infinity();
        return d;
    }
    // det = perm_sign * prod(U_kk); accumulate log|U_kk| in high precision
    // (mpfr log of each pivot, summed as double, is plenty: we only need the
    // magnitude to ~1e-12 relative for sign tracking and diagnostics).
    d.sign = perm_sign;
    double logsum = 0;
    const std::size_t n = a.size();
    for (std::size_t k = 0; k < n; ++k) {
        const Real& p = a.at(k, k);
        if (p.sign() < 0) d.sign = -d.sign;
        logsum += log(abs(p)).to_double();
    }
    d.log_magnitude = logsum;
    return d;
}

std::vector<Real> linear_solve(HPMatrix& a, std::vector<Real> b) {
    const std::size_t n = a.size();
    if (b.size() != n) throw InvalidArgument("linear_solve: dimension mismatch");
    std::vector<std::size_t> perm;
    std::size_t zero_col = 0;
    if (lu_factor(a, perm, zero_col) == 0) {
        throw SingularMatrixError("zero pivot in column " + std::to_string(zero_col),
                                  zero_col);
    }
    // Apply the row permutation to b, then forward/back substitution.
    for (std::size_t k = 0; k < n; ++k) {
        if (perm[k] != k) std::swap(b[k], b[perm[k]]);
    }
    for (std::size_t i = 1; i < n; ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            fms_acc(b[i], a.at(i, j), b[j]);  // b[i] -= L(i,j) * b[j]
        }
    }
    for (std::size_t ii = n; ii-- > 0;) {
        for (std::size_t j = ii + 1; j < n; ++j) {
            fms_acc(b[ii], a.at(ii, j), b[j]);  // b[ii] -= U(ii,j) * x[j]
        }
        b[ii] /= a.at(ii, ii);
    }
    return b;
}

}  // namespace hydromag::hp

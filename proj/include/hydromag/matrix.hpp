#ifndef HYDROMAG_MATRIX_HPP
#define HYDROMAG_MATRIX_HPP

#include <cstddef>
#include <vector>

#include "hydromag/precision.hpp"

namespace hydromag::hp {

// Dense square matrix of high-precision reals, row-major.
class HPMatrix {
  public:
    HPMatrix(std::size_t n, const PrecisionContext& ctx)
        : n_(n), data_(n * n, Real(ctx, 0.0)) {}

    std::size_t size() const { return n_; }
    Real& at(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }
    const Real& at(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }

  private:
    std::size_t n_;
    std::vector<Real> data_;
};

// Determinant in sign/log form, so huge and tiny determinants stay
// representable: det = sign * exp(log_magnitude).
struct LogDet {
    int sign = 0;             // -1, 0, +1
    double log_magnitude = 0; // natural log of |det|; -inf when sign == 0
};

// LU decomposition with partial pivoting; destroys `a`.
LogDet lu_logdet(HPMatrix& a);

// Solve a*x = b by LU with partial pivoting; destroys `a`.
// Throws SingularMatrixError (with the offending pivot index) when a zero
// pivot is hit.
std::vector<Real> linear_solve(HPMatrix& a, std::vector<Real> b);

}  // namespace hydromag::hp

#endif

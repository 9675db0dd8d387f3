#include "hydromag/rootfind.hpp"

#include <cmath>
#include <string>

namespace hydromag::hp {

namespace {

int eval_sign(const SignFn& f, double x) {
    try {
        return f(x);
    } catch (const EvaluationError& e) {
        throw EvaluationError(std::string(e.what()) + " (at abscissa " +
                              std::to_string(x) + ")");
    }
}

}  // namespace

double bracketed_root(const SignFn& f, double lo, double hi, double tol) {
    if (!(lo < hi)) throw InvalidArgument("bracketed_root: need lo < hi");
    if (!(tol > 0)) throw InvalidArgument("bracketed_root: need tol > 0");
    int slo = eval_sign(f, lo);
    if (slo == 0) return lo;
    int shi = eval_sign(f, hi);
    if (shi == 0) return hi;
    if (slo == shi) {
        throw BracketError("no sign change on [" + std::to_string(lo) + ", " +
                           std::to_string(hi) + "]");
    }
    // Fixed iteration budget: halving to tol takes ceil(log2(width/tol)).
    int max_iter = static_cast<int>(std::ceil(std::log2((hi - lo) / tol))) + 2;
    for (int it = 0; it < max_iter && (hi - lo) > tol; ++it) {
        double mid = lo + 0.5 * (hi - lo);
        if (mid <= lo || mid >= hi) break;  // interval below double resolution
        int smid = eval_sign(f, mid);
        if (smid == 0) return mid;
        if (smid == slo) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return lo + 0.5 * (hi - lo);
}

std::vector<Bracket> sign_change_scan(const SignFn& f, double lo, double hi, int steps) {
    if (!(lo < hi)) throw InvalidArgument("sign_change_scan: need lo < hi");
    if (steps < 1) throw InvalidArgument("sign_change_scan: need steps >= 1");
    std::vector<Bracket> out;
    double x_prev = lo;
    int s_prev = eval_sign(f, lo);
    if (s_prev == 0) out.push_back({lo, lo});
    for (int k = 1; k <= steps; ++k) {
        double x = lo + (hi - lo) * static_cast<double>(k) / steps;
        int s = eval_sign(f, x);
        if (s == 0) {
            out.push_back({x, x});
        } else if (s_prev != 0 && s != s_prev) {
            out.push_back({x_prev, x});
        }
        x_prev = x;
        s_prev = s;
    }
    return out;
}

}  // namespace hydromag::hp

#pragma once
// Slow, independent reference implementations used only by the tests.

#include "cawi/dataset.hpp"
#include "cawi/rng.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <span>
#include <vector>

namespace oracle {

// erf by Maclaurin series for small |x|, erfc by Lentz continued fraction
// otherwise. Both are carried well past double precision.
inline double erfc_cf(double x) {  // x > 0
    // erfc(x) = exp(-x^2)/sqrt(pi) * 1/(x + 1/2/(x + 1/(x + 3/2/(x + ...))))
    const double tiny = 1e-300;
    double f = x, c = x, d = 0.0;
    for (int n = 1; n < 5000; ++n) {
        const double a = 0.5 * n;
        d = x + a * d;
        d = std::fabs(d) < tiny ? tiny : d;
        c = x + a / c;
        c = std::fabs(c) < tiny ? tiny : c;
        d = 1.0 / d;
        const double delta = c * d;
        f *= delta;
        if (std::fabs(delta - 1.0) < 1e-16) break;
    }
    return std::exp(-x * x) / std::sqrt(std::numbers::pi) / f;
}

inline double erf_series(double x) {
    double term = x, sum = x;
    for (int n = 1; n < 500; ++n) {
        term *= -x * x / n;
        const double add = term / (2 * n + 1);
        sum += add;
        if (std::fabs(add) < 1e-18 * std::fabs(sum)) break;
    }
    return 2.0 / std::sqrt(std::numbers::pi) * sum;
}

/// Phi(x) from the erf pieces above.
inline double phi_cdf(double x) {
    const double z = x / std::numbers::sqrt2;
    if (std::fabs(z) < 2.0) return 0.5 * (1.0 + erf_series(z));
    return z > 0 ? 1.0 - 0.5 * erfc_cf(z) : 0.5 * erfc_cf(-z);
}

/// Plain bisection on a monotone increasing function.
inline double bisect(const std::function<double(double)>& f, double target, double lo, double hi,
                     double tol = 1e-14) {
    for (int i = 0; i < 400 && hi - lo > tol * std::max(1.0, std::fabs(lo)); ++i) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) < target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

inline double normal_quantile(double p) {
    // Work in the smaller tail so tiny probabilities keep their precision.
    if (p > 0.5) return -normal_quantile(1.0 - p);
    return bisect(phi_cdf, p, -40.0, 0.0, 1e-15);
}

namespace detail {
inline double simpson_step(const std::function<double(double)>& f, double a, double b, double fa,
                           double fm, double fb, double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::fabs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}
}  // namespace detail

inline double simpson(const std::function<double(double)>& f, double a, double b, double tol = 1e-13) {
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return detail::simpson_step(f, a, b, fa, fm, fb, whole, tol, 60);
}

/// t / (e^t - 1), with the removable singularity filled in.
inline double bose(double t) { return t < 1e-12 ? 1.0 - 0.5 * t : t / std::expm1(t); }

inline double debye1(double x) {
    // Split the range so each piece is smooth enough for Simpson.
    double total = 0.0;
    const int pieces = 8;
    for (int i = 0; i < pieces; ++i)
        total += simpson(bose, x * i / pieces, x * (i + 1) / pieces, 1e-15);
    return total / x;
}

inline double t_pdf(double x, double nu) {
    return std::exp(std::lgamma(0.5 * (nu + 1)) - std::lgamma(0.5 * nu)) /
           std::sqrt(nu * std::numbers::pi) * std::pow(1.0 + x * x / nu, -0.5 * (nu + 1));
}

/// Tau-b by enumerating every pair.
inline double kendall_tau_b(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    double conc = 0, disc = 0, tx = 0, ty = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double a = x[i] - x[j], b = y[i] - y[j];
            if (a == 0) ++tx;
            if (b == 0) ++ty;
            if (a * b > 0) ++conc;
            else if (a * b < 0) ++disc;
        }
    const double n0 = n * (n - 1) / 2.0;
    const double den = std::sqrt((n0 - tx) * (n0 - ty));
    return den == 0 ? 0.0 : (conc - disc) / den;
}

/// Kolmogorov-Smirnov distance of a sample from Uniform(0,1).
inline double ks_uniform(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const double n = static_cast<double>(v.size());
    double d = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        d = std::max(d, (i + 1) / n - v[i]);
        d = std::max(d, v[i] - i / n);
    }
    return d;
}

/// Two-sample KS distance.
inline double ks_two_sample(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::fabs(double(i) / a.size() - double(j) / b.size()));
    }
    return d;
}

/// Solves M x = r (M square) by Gaussian elimination with partial pivoting.
inline cawi::Matrix gauss_solve(cawi::Matrix M, cawi::Matrix R) {
    const auto n = M.rows();
    for (Eigen::Index c = 0; c < n; ++c) {
        Eigen::Index piv = c;
        for (Eigen::Index r = c + 1; r < n; ++r)
            if (std::fabs(M(r, c)) > std::fabs(M(piv, c))) piv = r;
        M.row(c).swap(M.row(piv));
        R.row(c).swap(R.row(piv));
        for (Eigen::Index r = c + 1; r < n; ++r) {
            const double f = M(r, c) / M(c, c);
            for (Eigen::Index k = c; k < n; ++k) M(r, k) -= f * M(c, k);
            for (Eigen::Index k = 0; k < R.cols(); ++k) R(r, k) -= f * R(c, k);
        }
    }
    cawi::Matrix X(n, R.cols());
    for (Eigen::Index r = n - 1; r >= 0; --r)
        for (Eigen::Index k = 0; k < R.cols(); ++k) {
            double s = R(r, k);
            for (Eigen::Index j = r + 1; j < n; ++j) s -= M(r, j) * X(j, k);
            X(r, k) = s / M(r, r);
        }
    return X;
}

/// Normal-equations ridge solution built with explicit loops.
inline cawi::Matrix ridge(const cawi::Matrix& A, const cawi::Matrix& Y, double lambda) {
    const auto a = A.cols();
    cawi::Matrix G(a, a), rhs(a, Y.cols());
    for (Eigen::Index i = 0; i < a; ++i) {
        for (Eigen::Index j = 0; j < a; ++j) {
            double s = 0;
            for (Eigen::Index r = 0; r < A.rows(); ++r) s += A(r, i) * A(r, j);
            G(i, j) = s + (i == j ? lambda : 0.0);
        }
        for (Eigen::Index k = 0; k < Y.cols(); ++k) {
            double s = 0;
            for (Eigen::Index r = 0; r < A.rows(); ++r) s += A(r, i) * Y(r, k);
            rhs(i, k) = s;
        }
    }
    return gauss_solve(G, rhs);
}

inline cawi::Matrix random_matrix(std::size_t rows, std::size_t cols, cawi::RngStream& rng) {
    cawi::Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = 2.0 * rng.uniform() - 1.0;
    return m;
}

inline double rel_frobenius(const cawi::Matrix& a, const cawi::Matrix& b) {
    return (a - b).norm() / std::max(b.norm(), 1e-300);
}

inline double mean(std::span<const double> v) {
    double s = 0;
    for (double x : v) s += x;
    return s / v.size();
}

inline double pearson(std::span<const double> a, std::span<const double> b) {
    const double ma = mean(a), mb = mean(b);
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

inline std::vector<double> column(const cawi::Matrix& m, Eigen::Index j) {
    return {m.col(j).data(), m.col(j).data() + m.rows()};
}

inline std::vector<double> row(const cawi::Matrix& m, Eigen::Index i) {
    std::vector<double> out(m.cols());
    for (Eigen::Index j = 0; j < m.cols(); ++j) out[j] = m(i, j);
    return out;
}

}  // namespace oracle

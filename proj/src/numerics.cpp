#include "cawi/numerics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace cawi {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

// Acklam's rational approximation for the lower region p < 0.5.
double acklam_lower(double p) {
    static constexpr std::array<double, 6> a = {-3.969683028665376e+01, 2.209460984245205e+02,
                                                -2.759285104469687e+02, 1.383577518672690e+02,
                                                -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr std::array<double, 5> b = {-5.447609879822406e+01, 1.615858368580409e+02,
                                                -1.556989798598866e+02, 6.680131188771972e+01,
                                                -1.328068155288572e+01};
    static constexpr std::array<double, 6> c = {-7.784894002430293e-03, -3.223964580411365e-01,
                                                -2.400758277161838e+00, -2.549732539343734e+00,
                                                4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr std::array<double, 4> d = {7.784695709041462e-03, 3.224671290700398e-01,
                                                2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double q = p - 0.5;
    const double r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

double normal_quantile_lower(double p) {
    double x = acklam_lower(p);
    // Halley refinement against the erfc-based CDF.
    for (int i = 0; i < 2; ++i) {
        const double e = 0.5 * std::erfc(-x * kInvSqrt2) - p;
        const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
        x -= u / (1.0 + 0.5 * x * u);
    }
    return x;
}

// Continued fraction for I_x(a,b) (modified Lentz), valid for x < (a+1)/(a+b+2).
double beta_cf(double a, double b, double x) {
    constexpr int max_iter = 2000;
    constexpr double eps = 1e-15;
    constexpr double tiny = 1e-300;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_iter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < eps) return h;
    }
    return h;
}

// I_x(a,b) given both x and 1-x, so callers can avoid cancellation.
double log_inv_beta(double a, double b) { return std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b); }

double incomplete_beta_split(double a, double b, double x, double one_minus_x, double log_inv_b) {
    if (x <= 0.0) return 0.0;
    if (one_minus_x <= 0.0) return 1.0;
    const double log_front = log_inv_b + a * std::log(x) + b * std::log(one_minus_x);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(a, b, x) / a;
    return 1.0 - front * beta_cf(b, a, one_minus_x) / b;
}

void require_nu(double nu) {
    if (!(nu > 2.0) || !std::isfinite(nu))
        throw std::domain_error("student t: degrees of freedom must be finite and > 2, got " +
                                std::to_string(nu));
}

// Bernoulli numbers B_2 .. B_24.
constexpr std::array<double, 12> kBernoulli = {
    1.0 / 6.0,           -1.0 / 30.0,           1.0 / 42.0,          -1.0 / 30.0,
    5.0 / 66.0,          -691.0 / 2730.0,       7.0 / 6.0,           -3617.0 / 510.0,
    43867.0 / 798.0,     -174611.0 / 330.0,     854513.0 / 138.0,    -236364091.0 / 2730.0};

// sum_{k>=1} B_2k x^2k / ((2k+1)(2k)!), converges for |x| < 2 pi.
double debye1_series_tail(double x) {
    double sum = 0.0;
    double power = 1.0;
    double factorial = 1.0;
    for (std::size_t k = 1; k <= kBernoulli.size(); ++k) {
        const double n = 2.0 * static_cast<double>(k);
        power *= x * x;
        factorial *= (n - 1.0) * n;
        sum += kBernoulli[k - 1] * power / ((n + 1.0) * factorial);
    }
    return sum;
}

constexpr double kDebyeSeriesCutoff = 2.0;

}  // namespace

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

double std_normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double std_normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw std::domain_error("std_normal_quantile: p must lie in (0,1), got " +
                                std::to_string(p));
    if (p == 0.5) return 0.0;
    if (p < 0.5) return normal_quantile_lower(p);
    return -normal_quantile_lower(1.0 - p);
}

double incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0 && b > 0.0)) throw std::domain_error("incomplete_beta: a and b must be > 0");
    if (!(x >= 0.0 && x <= 1.0)) throw std::domain_error("incomplete_beta: x outside [0,1]");
    return incomplete_beta_split(a, b, x, 1.0 - x, log_inv_beta(a, b));
}

double student_t_pdf(double x, double nu) {
    const double log_c = std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
                         0.5 * std::log(nu * std::numbers::pi);
    return std::exp(log_c - 0.5 * (nu + 1.0) * std::log1p(x * x / nu));
}

namespace {

// P(|T| <= |x|) for integer nu as the finite trigonometric sum over powers
// of cos^2(theta), theta = atan(|x| / sqrt(nu)).
double t_central_integer(double x, int n) {
    const double nu = n;
    const double r = 1.0 / (nu + x * x);
    const double c2 = nu * r;
    const double s = std::fabs(x) * std::sqrt(r);
    double term = 1.0, sum = 1.0;
    if (n % 2 == 0) {
        for (int k = 1; k < n / 2; ++k) {
            term *= c2 * (2.0 * k - 1.0) / (2.0 * k);
            sum += term;
        }
        return s * sum;
    }
    for (int k = 1; k <= (n - 3) / 2; ++k) {
        term *= c2 * (2.0 * k) / (2.0 * k + 1.0);
        sum += term;
    }
    return 2.0 / std::numbers::pi * (std::atan2(std::fabs(x), std::sqrt(nu)) + s * std::sqrt(c2) * sum);
}

double t_cdf_core(double x, double nu, double log_inv_b) {
    if (x == 0.0) return 0.5;
    if (std::isinf(x)) return x > 0 ? 1.0 : 0.0;
    if (nu <= 200.0 && nu == std::floor(nu)) {
        // (1 - A) / 2 cancels in the far tail, so only the bulk takes this path
        const double tail = 0.5 * (1.0 - t_central_integer(x, static_cast<int>(nu)));
        if (tail >= 1e-3) return x > 0.0 ? 1.0 - tail : tail;
    }
    const double x2 = x * x;
    const double z = nu / (nu + x2);
    const double one_minus_z = x2 / (nu + x2);
    const double tail = 0.5 * incomplete_beta_split(0.5 * nu, 0.5, z, one_minus_z, log_inv_b);
    return x > 0.0 ? 1.0 - tail : tail;
}

}  // namespace

double student_t_cdf(double x, double nu) {
    require_nu(nu);
    if (std::isnan(x)) throw std::domain_error("student_t_cdf: NaN argument");
    return t_cdf_core(x, nu, log_inv_beta(0.5 * nu, 0.5));
}

namespace {

double t_log_norm(double nu) {
    return std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
           0.5 * std::log(nu * std::numbers::pi);
}

// Lower-tail root of cdf(x) = p: Halley steps from x0, kept inside the
// bracket (lo, hi) that the sign of cdf(x) - p narrows as we go.
double t_solve_lower(double p, double nu, double x, double log_c) {
    const double log_inv_b = log_inv_beta(0.5 * nu, 0.5);
    double lo = -std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (int iter = 0; iter < 200; ++iter) {
        const double f = t_cdf_core(x, nu, log_inv_b) - p;
        if (f == 0.0) return x;
        if (f > 0.0) hi = x; else lo = x;
        const double density = std::exp(log_c - 0.5 * (nu + 1.0) * std::log1p(x * x / nu));
        const double newton = f / density;
        const double bend = 1.0 + 0.5 * newton * (nu + 1.0) * x / (nu + x * x);
        double next = x - (bend > 0.5 && bend < 2.0 ? newton / bend : newton);
        const double scale = std::max(1.0, std::fabs(x));
        if (next > lo && next < hi && std::isfinite(next)) {
            // the error left after a step this short is of order step^3 (step^2 for Newton)
            if (std::fabs(next - x) <= 1e-9 * scale) return next;
        } else {
            next = std::isfinite(lo) ? 0.5 * (lo + hi) : 2.0 * x;
            if (std::fabs(next - x) <= 1e-14 * scale) return next;
        }
        if (next < -1e300) return next;
        x = next;
    }
    return x;
}

// Cornish-Fisher expansion around the normal quantile.
double t_start(double p, double nu) {
    const double z = std_normal_quantile(p);
    const double z2 = z * z;
    const double x = z + z * (z2 + 1.0) / (4.0 * nu) +
                     z * ((5.0 * z2 + 16.0) * z2 + 3.0) / (96.0 * nu * nu) +
                     z * (((3.0 * z2 + 19.0) * z2 + 17.0) * z2 - 15.0) / (384.0 * nu * nu * nu);
    return x < 0.0 && std::isfinite(x) ? x : z;
}

}  // namespace

double student_t_quantile(double p, double nu) {
    require_nu(nu);
    if (!(p > 0.0 && p < 1.0))
        throw std::domain_error("student_t_quantile: p must lie in (0,1), got " +
                                std::to_string(p));
    if (p == 0.5) return 0.0;
    if (p > 0.5) return -student_t_quantile(1.0 - p, nu);
    const double log_c = t_log_norm(nu);
    // Far out, cdf(x) ~ e^log_c nu^((nu-1)/2) |x|^-nu; Newton crawls along a
    // power-law tail, so start from whichever guess lands closer in log scale.
    const double cf = t_start(p, nu);
    const double tail = -std::exp((log_c + 0.5 * (nu - 1.0) * std::log(nu) - std::log(p)) / nu);
    double x = cf;
    if (std::isfinite(tail) && tail < 0.0) {
        const double log_p = std::log(p);
        const double miss_cf = std::fabs(std::log(student_t_cdf(cf, nu)) - log_p);
        const double miss_tail = std::fabs(std::log(student_t_cdf(tail, nu)) - log_p);
        if (miss_tail < miss_cf) x = tail;
    }
    return t_solve_lower(p, nu, x, log_c);
}

std::vector<double> student_t_lower_quantiles(std::span<const double> ascending_p, double nu) {
    require_nu(nu);
    const double log_c = t_log_norm(nu);
    std::vector<double> out(ascending_p.size());
    double prev_p = 0.5, prev_x = 0.0;
    for (std::size_t k = ascending_p.size(); k-- > 0;) {
        const double p = ascending_p[k];
        if (!(p > 0.0 && p <= 0.5) || p > prev_p)
            throw std::domain_error("student_t_lower_quantiles: need ascending p in (0, 1/2]");
        if (p == 0.5) {
            out[k] = 0.0;
            continue;
        }
        // x'(p) = 1/f(x), x''(p) = (nu+1) x / ((nu + x^2) f(x)^2)
        const double f = std::exp(log_c - 0.5 * (nu + 1.0) * std::log1p(prev_x * prev_x / nu));
        const double dp = p - prev_p;
        double guess = prev_x + dp / f +
                       0.5 * dp * dp * (nu + 1.0) * prev_x / ((nu + prev_x * prev_x) * f * f);
        if (!(guess < 0.0) || !std::isfinite(guess)) guess = t_start(p, nu);
        out[k] = t_solve_lower(p, nu, guess, log_c);
        prev_p = p;
        prev_x = out[k];
    }
    return out;
}

double debye1_minus_one(double x) {
    if (!std::isfinite(x) || !(x > 0.0))
        throw std::domain_error("debye1: argument must be finite and > 0");
    if (x < kDebyeSeriesCutoff) return -0.25 * x + debye1_series_tail(x);
    return debye1(x) - 1.0;
}

double debye1(double x) {
    if (!std::isfinite(x) || !(x > 0.0))
        throw std::domain_error("debye1: argument must be finite and > 0");
    if (x < kDebyeSeriesCutoff) return 1.0 - 0.25 * x + debye1_series_tail(x);
    // integral_0^x = pi^2/6 - sum_k e^{-kx} (x/k + 1/k^2)
    double tail = 0.0;
    for (int k = 1; k < 200; ++k) {
        const double kk = static_cast<double>(k);
        const double term = std::exp(-kk * x) * (x / kk + 1.0 / (kk * kk));
        tail += term;
        if (term < 1e-18) break;
    }
    return (std::numbers::pi * std::numbers::pi / 6.0 - tail) / x;
}

double uniform(RngStream& rng) { return rng.uniform(); }

double standard_normal(RngStream& rng) { return std_normal_quantile(rng.uniform()); }

double exponential(RngStream& rng) { return -std::log(rng.uniform()); }

double gamma_variate(double shape, RngStream& rng) {
    if (!(shape > 0.0) || !std::isfinite(shape))
        throw std::domain_error("gamma_variate: shape must be finite and > 0");
    if (shape < 1.0) {
        const double g = gamma_variate(shape + 1.0, rng);
        return g * std::exp(std::log(rng.uniform()) / shape);
    }
    // Marsaglia & Tsang.
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double z;
        double v;
        do {
            z = standard_normal(rng);
            v = 1.0 + c * z;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = rng.uniform();
        if (u < 1.0 - 0.0331 * z * z * z * z) return d * v;
        if (std::log(u) < 0.5 * z * z + d * (1.0 - v + std::log(v))) return d * v;
    }
}

double chi_square(double nu, RngStream& rng) { return 2.0 * gamma_variate(0.5 * nu, rng); }

namespace {

// Kemp's LK algorithm. Takes log(1 - p) separately because for Frank's
// p = 1 - exp(-theta) the subtraction rounds to 1 once theta exceeds ~37.
long long log_series_kemp(double p, double log_one_minus_p, RngStream& rng) {
    const double u = rng.uniform();
    if (u > p) return 1;
    const double x = log_one_minus_p * rng.uniform();
    const double q = -std::expm1(x);
    if (u < q * q) {
        // log(q) via log1p keeps it nonzero when q rounds to 1
        const double k = std::floor(1.0 + std::log(u) / std::log1p(-std::exp(x)));
        if (k >= 9.0e18) return std::numeric_limits<long long>::max();
        return static_cast<long long>(k);
    }
    if (u > q) return 1;
    return 2;
}

}  // namespace

long long logarithmic_series(double p, RngStream& rng) {
    if (!(p > 0.0 && p < 1.0)) throw std::domain_error("logarithmic_series: p must lie in (0,1)");
    return log_series_kemp(p, std::log1p(-p), rng);
}

double sample_frailty(FrailtyFamily family, double theta, RngStream& rng) {
    if (!std::isfinite(theta)) throw std::domain_error("sample_frailty: non-finite theta");
    switch (family) {
    case FrailtyFamily::clayton:
        if (!(theta > 0.0)) throw std::domain_error("sample_frailty: clayton needs theta > 0");
        return gamma_variate(1.0 / theta, rng);
    case FrailtyFamily::gumbel: {
        if (!(theta >= 1.0)) throw std::domain_error("sample_frailty: gumbel needs theta >= 1");
        // Two uniforms are consumed on every path so the stream position does not
        // depend on theta.
        const double angle = std::numbers::pi * rng.uniform();
        const double w = exponential(rng);
        if (theta == 1.0) return 1.0;
        // Chambers-Mallows-Stuck, positive stable with Laplace transform exp(-s^alpha).
        const double alpha = 1.0 / theta;
        const double log_v = std::log(std::sin(alpha * angle)) -
                             std::log(std::sin(angle)) / alpha +
                             (1.0 - alpha) / alpha *
                                 (std::log(std::sin((1.0 - alpha) * angle)) - std::log(w));
        return std::exp(log_v);
    }
    case FrailtyFamily::frank:
        if (!(theta > 0.0)) throw std::domain_error("sample_frailty: frank needs theta > 0");
        return static_cast<double>(log_series_kemp(-std::expm1(-theta), -theta, rng));
    }
    throw std::domain_error("sample_frailty: unknown family");
}

}  // namespace cawi

#pragma once

#include "cawi/rng.hpp"

#include <span>
#include <vector>

namespace cawi {

// Normal distribution ------------------------------------------------------

double std_normal_cdf(double x);
double std_normal_pdf(double x);

/// Inverse of the standard normal CDF. Absolute error below 1e-9 on
/// [1e-12, 1 - 1e-12]. Throws std::domain_error outside (0,1).
double std_normal_quantile(double p);

// Student t ----------------------------------------------------------------

/// Regularized incomplete beta I_x(a, b).
double incomplete_beta(double a, double b, double x);

double student_t_pdf(double x, double nu);
/// Requires nu > 2.
double student_t_cdf(double x, double nu);
/// Requires nu > 2 and 0 < p < 1.
double student_t_quantile(double p, double nu);
/// Quantiles of ascending probabilities in (0, 1/2]; each solve starts from
/// a Taylor step off its neighbour, so a dense grid costs ~2 cdf calls per point.
std::vector<double> student_t_lower_quantiles(std::span<const double> ascending_p, double nu);

// Debye --------------------------------------------------------------------

/// D1(x) = (1/x) * integral_0^x t / (e^t - 1) dt for x > 0.
double debye1(double x);

/// D1(x) - 1, accurate for small x where D1(x) is close to 1.
double debye1_minus_one(double x);

// Variates -----------------------------------------------------------------

double uniform(RngStream& rng);
double standard_normal(RngStream& rng);
double exponential(RngStream& rng);
/// Gamma(shape, scale 1).
double gamma_variate(double shape, RngStream& rng);
double chi_square(double nu, RngStream& rng);

enum class FrailtyFamily { clayton, gumbel, frank };

/// Draws the mixing variable V of the Marshall-Olkin construction:
/// clayton -> Gamma(1/theta), gumbel -> positive stable with index 1/theta,
/// frank -> logarithmic series with parameter 1 - exp(-theta).
double sample_frailty(FrailtyFamily family, double theta, RngStream& rng);

/// Logarithmic-series variate with parameter p in (0,1).
long long logarithmic_series(double p, RngStream& rng);

}  // namespace cawi

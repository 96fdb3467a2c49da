#pragma once

#include "cawi/dependence.hpp"

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cawi {

enum class CopulaFamily { independence, gaussian, student_t, clayton, frank, gumbel };

/// Canonical names: independence, gaussian, student_t, clayton, frank, gumbel.
std::string_view family_name(CopulaFamily family);
/// Accepts the canonical names plus "iid" (independence) and "t" (student_t).
CopulaFamily parse_family(std::string_view name);

bool is_archimedean(CopulaFamily family);
bool is_elliptical(CopulaFamily family);

struct FitDiagnostics {
    double bar_tau = 0.0;
    bool clamped = false;
    bool subsampled = false;
    std::vector<std::pair<double, double>> nu_loglik_profile;  // (nu, pseudo log-likelihood)
};

struct CopulaModel {
    CopulaFamily family = CopulaFamily::independence;
    std::size_t d = 0;
    Matrix R;            // elliptical families only
    double theta = 0.0;  // Archimedean families only
    double nu = 0.0;     // student_t only
    FitDiagnostics diagnostics;

    static CopulaModel independence(std::size_t d) {
        CopulaModel m;
        m.d = d;
        return m;
    }
};

/// Throws std::invalid_argument when the model breaks its family's parameter rules.
void validate(const CopulaModel& model);

struct CopulaFitOptions {
    std::vector<double> nu_grid{3.0, 5.0, 8.0, 12.0, 20.0, 30.0};
    double theta_min = 1e-4;
    double theta_max = 50.0;
    double eigen_floor = kDefaultEigenFloor;
};

/// Kendall's tau implied by an Archimedean parameter.
double tau_of_theta(CopulaFamily family, double theta);

/// Solves tau_of_theta(frank, theta) = tau on [lo, hi] by bisection.
double frank_theta_from_tau(double tau, double lo = 1e-4, double hi = 50.0);

/// Rank-based fit. `U` and `tau` must come from the same training rows.
CopulaModel fit_copula(CopulaFamily family, const PseudoObservations& U, const TauMatrix& tau,
                       const CopulaFitOptions& opts = {});

/// Pseudo log-likelihood of the rows of U (restricted to `rows`) under a t copula
/// with correlation R and nu degrees of freedom.
double t_copula_loglik(const Matrix& U, const IndexList& rows, const Matrix& R, double nu);

/// N draws from the model, one row per draw, entries clamped to [1e-12, 1 - 1e-12].
Matrix sample_copula(const CopulaModel& model, std::size_t N, RngStream& rng);

}  // namespace cawi

#include "cawi/copula.hpp"

#include "cawi/numerics.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace cawi {

namespace {

constexpr double kUClampLo = 1e-12;
constexpr double kUClampHi = 1.0 - 1e-12;

double clamp_u(double u) { return std::clamp(u, kUClampLo, kUClampHi); }

// Lower Cholesky factor; one retry with a 1e-10 ridge.
Matrix cholesky_factor(const Matrix& R) {
    Eigen::LLT<Matrix> llt(R);
    if (llt.info() == Eigen::Success) return llt.matrixL();
    const Matrix ridged = R + 1e-10 * Matrix::Identity(R.rows(), R.cols());
    Eigen::LLT<Matrix> retry(ridged);
    if (retry.info() != Eigen::Success)
        throw std::runtime_error("sample_copula: Cholesky factorization of R failed");
    return retry.matrixL();
}

Matrix elliptical_R_from_tau(const Matrix& tau) {
    Matrix R = (tau.array() * (std::numbers::pi / 2.0)).sin().matrix();
    R.diagonal().setOnes();
    return R;
}

}  // namespace

std::string_view family_name(CopulaFamily family) {
    switch (family) {
    case CopulaFamily::independence: return "independence";
    case CopulaFamily::gaussian: return "gaussian";
    case CopulaFamily::student_t: return "student_t";
    case CopulaFamily::clayton: return "clayton";
    case CopulaFamily::frank: return "frank";
    case CopulaFamily::gumbel: return "gumbel";
    }
    return "unknown";
}

CopulaFamily parse_family(std::string_view name) {
    if (name == "independence" || name == "iid") return CopulaFamily::independence;
    if (name == "gaussian") return CopulaFamily::gaussian;
    if (name == "student_t" || name == "t") return CopulaFamily::student_t;
    if (name == "clayton") return CopulaFamily::clayton;
    if (name == "frank") return CopulaFamily::frank;
    if (name == "gumbel") return CopulaFamily::gumbel;
    throw std::invalid_argument("unknown copula family '" + std::string(name) + "'");
}

bool is_archimedean(CopulaFamily family) {
    return family == CopulaFamily::clayton || family == CopulaFamily::frank ||
           family == CopulaFamily::gumbel;
}

bool is_elliptical(CopulaFamily family) {
    return family == CopulaFamily::gaussian || family == CopulaFamily::student_t;
}

void validate(const CopulaModel& model) {
    if (model.d < 1) throw std::invalid_argument("copula model: d must be >= 1");
    const auto d = static_cast<Eigen::Index>(model.d);
    switch (model.family) {
    case CopulaFamily::independence: return;
    case CopulaFamily::student_t:
        if (!(model.nu > 2.0) || !std::isfinite(model.nu))
            throw std::invalid_argument("copula model: student_t needs nu > 2");
        [[fallthrough]];
    case CopulaFamily::gaussian:
        if (model.R.rows() != d || model.R.cols() != d)
            throw std::invalid_argument("copula model: R must be d x d");
        if (!model.R.allFinite()) throw std::invalid_argument("copula model: non-finite R");
        if ((model.R - model.R.transpose()).cwiseAbs().maxCoeff() > 1e-12)
            throw std::invalid_argument("copula model: R not symmetric");
        if ((model.R.diagonal().array() - 1.0).abs().maxCoeff() > 1e-12)
            throw std::invalid_argument("copula model: R diagonal not 1");
        if (model.R.cwiseAbs().maxCoeff() > 1.0 + 1e-12)
            throw std::invalid_argument("copula model: R entry outside [-1, 1]");
        if (Eigen::SelfAdjointEigenSolver<Matrix>(model.R, Eigen::EigenvaluesOnly)
                .eigenvalues()
                .minCoeff() < -1e-10)
            throw std::invalid_argument("copula model: R is not positive semidefinite");
        return;
    case CopulaFamily::clayton:
        if (!(model.theta > 0.0) || !std::isfinite(model.theta))
            throw std::invalid_argument("copula model: clayton needs theta > 0");
        return;
    case CopulaFamily::gumbel:
        if (!(model.theta >= 1.0) || !std::isfinite(model.theta))
            throw std::invalid_argument("copula model: gumbel needs theta >= 1");
        return;
    case CopulaFamily::frank:
        // negative dependence exists only for the bivariate Frank copula
        if (!std::isfinite(model.theta) || model.theta == 0.0 ||
            (model.theta < 0.0 && model.d != 2))
            throw std::invalid_argument("copula model: frank needs theta > 0 (theta != 0 when d = 2)");
        return;
    }
}

double tau_of_theta(CopulaFamily family, double theta) {
    if (!std::isfinite(theta)) throw std::domain_error("tau_of_theta: non-finite theta");
    switch (family) {
    case CopulaFamily::clayton:
        if (!(theta > 0.0)) throw std::domain_error("tau_of_theta: clayton needs theta > 0");
        return theta / (theta + 2.0);
    case CopulaFamily::gumbel:
        if (!(theta >= 1.0)) throw std::domain_error("tau_of_theta: gumbel needs theta >= 1");
        return 1.0 - 1.0 / theta;
    case CopulaFamily::frank:
        if (theta == 0.0) throw std::domain_error("tau_of_theta: frank needs theta != 0");
        if (theta < 0.0) return -tau_of_theta(CopulaFamily::frank, -theta);  // odd in theta
        return 1.0 + 4.0 / theta * debye1_minus_one(theta);
    default:
        throw std::domain_error("tau_of_theta: family is not Archimedean");
    }
}

double frank_theta_from_tau(double tau, double lo, double hi) {
    if (!std::isfinite(tau)) throw std::domain_error("frank_theta_from_tau: non-finite tau");
    if (tau <= tau_of_theta(CopulaFamily::frank, lo)) return lo;
    if (tau >= tau_of_theta(CopulaFamily::frank, hi)) return hi;
    for (int iter = 0; iter < 200 && hi - lo > 1e-14 * hi; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (tau_of_theta(CopulaFamily::frank, mid) < tau) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

namespace {

// Entries of U on the chosen rows, folded about 1/2 and mapped to the sorted
// distinct levels; pseudo-observations repeat the same few hundred values.
struct LevelIndex {
    std::vector<double> levels;
    std::vector<std::uint32_t> slot;  // row-major over (rows, d)
    std::vector<char> upper;          // entry was above 1/2: quantile flips sign
    std::vector<std::size_t> count;   // entries per level
    Eigen::Index d = 0;
};

LevelIndex index_levels(const Matrix& U, const IndexList& rows) {
    LevelIndex ix;
    ix.d = U.cols();
    std::vector<double> folded;
    folded.reserve(rows.size() * static_cast<std::size_t>(ix.d));
    for (auto r : rows)
        for (Eigen::Index j = 0; j < ix.d; ++j) {
            const double u = clamp_u(U(static_cast<Eigen::Index>(r), j));
            ix.upper.push_back(u > 0.5);
            folded.push_back(u > 0.5 ? 1.0 - u : u);
        }
    ix.levels = folded;
    std::sort(ix.levels.begin(), ix.levels.end());
    ix.levels.erase(std::unique(ix.levels.begin(), ix.levels.end()), ix.levels.end());
    ix.slot.reserve(folded.size());
    ix.count.assign(ix.levels.size(), 0);
    for (double v : folded) {
        const auto at = std::lower_bound(ix.levels.begin(), ix.levels.end(), v) - ix.levels.begin();
        ix.slot.push_back(static_cast<std::uint32_t>(at));
        ++ix.count[static_cast<std::size_t>(at)];
    }
    return ix;
}

Matrix lower_factor(const Matrix& R) {
    Eigen::LLT<Matrix> llt(R);
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("t_copula_loglik: R is not positive definite");
    return llt.matrixL();
}

double t_loglik_indexed(const LevelIndex& ix, const Matrix& L, double nu) {
    const auto d = ix.d;
    const double log_det = 2.0 * L.diagonal().array().log().sum();
    const double dd = static_cast<double>(d);
    const double log_pi_nu = std::log(nu * std::numbers::pi);
    const double joint_const = std::lgamma(0.5 * (nu + dd)) - std::lgamma(0.5 * nu) -
                               0.5 * dd * log_pi_nu - 0.5 * log_det;
    const double marg_const =
        std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) - 0.5 * log_pi_nu;

    const auto quantiles = student_t_lower_quantiles(ix.levels, nu);

    // marginal densities depend only on |x|, so they are summed per level
    double total = -marg_const * static_cast<double>(ix.slot.size());
    for (std::size_t i = 0; i < quantiles.size(); ++i)
        total += 0.5 * (nu + 1.0) * std::log1p(quantiles[i] * quantiles[i] / nu) *
                 static_cast<double>(ix.count[i]);

    const std::size_t n_rows = ix.slot.size() / static_cast<std::size_t>(d);
    Matrix X(d, static_cast<Eigen::Index>(n_rows));
    for (std::size_t r = 0, e = 0; r < n_rows; ++r)
        for (Eigen::Index j = 0; j < d; ++j, ++e) {
            const double q = quantiles[ix.slot[e]];
            X(j, static_cast<Eigen::Index>(r)) = ix.upper[e] ? -q : q;
        }
    L.triangularView<Eigen::Lower>().solveInPlace(X);
    const Vector quad = X.colwise().squaredNorm().transpose();
    for (Eigen::Index r = 0; r < quad.size(); ++r)
        total += joint_const - 0.5 * (nu + dd) * std::log1p(quad(r) / nu);
    return total;
}

}  // namespace

double t_copula_loglik(const Matrix& U, const IndexList& rows, const Matrix& R, double nu) {
    return t_loglik_indexed(index_levels(U, rows), lower_factor(R), nu);
}

CopulaModel fit_copula(CopulaFamily family, const PseudoObservations& U, const TauMatrix& tau,
                       const CopulaFitOptions& opts) {
    const auto d = static_cast<std::size_t>(U.U.cols());
    if (tau.tau.rows() != U.U.cols() || tau.tau.cols() != U.U.cols())
        throw std::invalid_argument("fit_copula: tau matrix does not match U");
    if (!tau.tau.allFinite() || !std::isfinite(tau.bar_tau))
        throw std::domain_error("fit_copula: non-finite Kendall tau entries");

    CopulaModel model;
    model.family = family;
    model.d = d;
    model.diagnostics.bar_tau = tau.bar_tau;
    model.diagnostics.subsampled = tau.subsampled;
    const double tbar = tau.bar_tau;

    switch (family) {
    case CopulaFamily::independence: break;
    case CopulaFamily::gaussian:
    case CopulaFamily::student_t: {
        model.R = nearest_correlation(elliptical_R_from_tau(tau.tau), opts.eigen_floor).R;
        if (family == CopulaFamily::gaussian) break;
        if (opts.nu_grid.empty()) throw std::invalid_argument("fit_copula: empty nu grid");
        double best = -std::numeric_limits<double>::infinity();
        const auto levels = index_levels(U.U, tau.rows_used);
        const Matrix L = lower_factor(model.R);
        for (double nu : opts.nu_grid) {
            const double ll = t_loglik_indexed(levels, L, nu);
            model.diagnostics.nu_loglik_profile.emplace_back(nu, ll);
            if (ll > best) {
                best = ll;
                model.nu = nu;
            }
        }
        if (!(model.nu > 2.0)) model.nu = opts.nu_grid.front();
        break;
    }
    case CopulaFamily::clayton: {
        const double raw = tbar > 0.0 ? 2.0 * tbar / (1.0 - tbar) : opts.theta_min;
        model.theta = std::clamp(std::isfinite(raw) ? raw : opts.theta_max, opts.theta_min,
                                 opts.theta_max);
        model.diagnostics.clamped = tbar <= 0.0 || model.theta != raw;
        break;
    }
    case CopulaFamily::gumbel: {
        const double raw = 1.0 / (1.0 - tbar);
        model.theta =
            std::clamp(std::isfinite(raw) && raw > 0.0 ? raw : opts.theta_max, 1.0, opts.theta_max);
        model.diagnostics.clamped = tbar < 0.0 || model.theta != raw;
        break;
    }
    case CopulaFamily::frank: {
        const double lo_tau = tau_of_theta(CopulaFamily::frank, opts.theta_min);
        const double hi_tau = tau_of_theta(CopulaFamily::frank, opts.theta_max);
        model.theta = frank_theta_from_tau(tbar, opts.theta_min, opts.theta_max);
        model.diagnostics.clamped = tbar <= 0.0 || tbar < lo_tau || tbar > hi_tau;
        break;
    }
    }
    return model;
}

Matrix sample_copula(const CopulaModel& model, std::size_t N, RngStream& rng) {
    if (N < 1) throw std::invalid_argument("sample_copula: N must be >= 1");
    validate(model);
    const auto d = static_cast<Eigen::Index>(model.d);
    const auto n = static_cast<Eigen::Index>(N);
    Matrix out(n, d);

    switch (model.family) {
    case CopulaFamily::independence:
        for (Eigen::Index t = 0; t < n; ++t)
            for (Eigen::Index j = 0; j < d; ++j) out(t, j) = rng.uniform();
        break;
    case CopulaFamily::gaussian:
    case CopulaFamily::student_t: {
        const Matrix L = cholesky_factor(model.R);
        const bool is_t = model.family == CopulaFamily::student_t;
        Vector g(d);
        for (Eigen::Index t = 0; t < n; ++t) {
            for (Eigen::Index j = 0; j < d; ++j) g(j) = standard_normal(rng);
            Vector z = L.triangularView<Eigen::Lower>() * g;
            if (is_t) {
                const double scale = std::sqrt(chi_square(model.nu, rng) / model.nu);
                for (Eigen::Index j = 0; j < d; ++j)
                    out(t, j) = student_t_cdf(z(j) / scale, model.nu);
            } else {
                for (Eigen::Index j = 0; j < d; ++j) out(t, j) = std_normal_cdf(z(j));
            }
        }
        break;
    }
    case CopulaFamily::clayton:
        for (Eigen::Index t = 0; t < n; ++t) {
            const double v = sample_frailty(FrailtyFamily::clayton, model.theta, rng);
            for (Eigen::Index j = 0; j < d; ++j)
                out(t, j) = std::exp(-std::log1p(exponential(rng) / v) / model.theta);
        }
        break;
    case CopulaFamily::gumbel:
        for (Eigen::Index t = 0; t < n; ++t) {
            const double v = sample_frailty(FrailtyFamily::gumbel, model.theta, rng);
            for (Eigen::Index j = 0; j < d; ++j)
                out(t, j) = std::exp(-std::pow(exponential(rng) / v, 1.0 / model.theta));
        }
        break;
    case CopulaFamily::frank: {
        if (model.theta < 0.0) {
            // bivariate only: invert the conditional distribution of u2 given u1
            const double th = model.theta;
            for (Eigen::Index t = 0; t < n; ++t) {
                const double u1 = rng.uniform();
                const double w = rng.uniform();
                out(t, 0) = u1;
                out(t, 1) = -std::log1p(w * std::expm1(-th) / (w + (1.0 - w) * std::exp(-th * u1))) / th;
            }
            break;
        }
        const double p = -std::expm1(-model.theta);
        for (Eigen::Index t = 0; t < n; ++t) {
            const double v = sample_frailty(FrailtyFamily::frank, model.theta, rng);
            for (Eigen::Index j = 0; j < d; ++j)
                out(t, j) = -std::log1p(-p * std::exp(-exponential(rng) / v)) / model.theta;
        }
        break;
    }
    }
    return out.unaryExpr([](double u) { return clamp_u(u); });
}

}  // namespace cawi

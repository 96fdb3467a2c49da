#pragma once

#include "cawi/dataset.hpp"
#include "cawi/rng.hpp"

#include <span>

namespace cawi {

/// Rank-transformed features, entries strictly inside (0,1).
struct PseudoObservations {
    Matrix U;
};

/// Midranks divided by (m + 1), column by column.
PseudoObservations pseudo_observations(const Matrix& features);

/// Kendall's tau-b in O(n log n). Returns 0 if either input is constant.
double kendall_tau(std::span<const double> x, std::span<const double> y);

/// O(n^2) pair enumeration of tau-b; kept for cross-checking.
double kendall_tau_naive(std::span<const double> x, std::span<const double> y);

struct TauMatrix {
    Matrix tau;             // symmetric, unit diagonal
    double bar_tau = 0.0;   // mean of the strict upper triangle (0 when d == 1)
    bool subsampled = false;
    IndexList rows_used;    // rows the statistics were computed on
};

constexpr std::size_t kDefaultMCap = 2000;

/// Pairwise tau over the columns of U. When U has more than m_cap rows a
/// uniform subsample of m_cap rows (drawn from rng) is used instead.
TauMatrix tau_matrix(const PseudoObservations& U, std::size_t m_cap, RngStream& rng);

struct CorrelationMatrix {
    Matrix R;
    double min_eigenvalue = 1.0;
};

constexpr double kDefaultEigenFloor = 1e-8;

/// Symmetrize, clip eigenvalues below `floor`, rebuild, and rescale to unit
/// diagonal. Inputs that are already valid with min eigenvalue >= floor are
/// returned unchanged.
CorrelationMatrix nearest_correlation(const Matrix& S, double floor = kDefaultEigenFloor);

}  // namespace cawi

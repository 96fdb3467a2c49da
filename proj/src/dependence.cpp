#include "cawi/dependence.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>

namespace cawi {

namespace {

std::int64_t pairs(std::int64_t t) { return t * (t - 1) / 2; }

// Sorts v ascending and returns the number of strict inversions removed.
std::int64_t merge_count(std::vector<double>& v, std::vector<double>& scratch, std::size_t lo,
                         std::size_t hi) {
    if (hi - lo < 2) return 0;
    const std::size_t mid = lo + (hi - lo) / 2;
    std::int64_t swaps = merge_count(v, scratch, lo, mid) + merge_count(v, scratch, mid, hi);
    std::size_t i = lo;
    std::size_t j = mid;
    std::size_t k = lo;
    while (i < mid && j < hi) {
        if (v[j] < v[i]) {
            swaps += static_cast<std::int64_t>(mid - i);
            scratch[k++] = v[j++];
        } else {
            scratch[k++] = v[i++];
        }
    }
    while (i < mid) scratch[k++] = v[i++];
    while (j < hi) scratch[k++] = v[j++];
    std::copy(scratch.begin() + static_cast<std::ptrdiff_t>(lo),
              scratch.begin() + static_cast<std::ptrdiff_t>(hi),
              v.begin() + static_cast<std::ptrdiff_t>(lo));
    return swaps;
}

double tau_b(std::int64_t n0, std::int64_t n1, std::int64_t n2, std::int64_t concordant_minus_discordant) {
    if (n0 == n1 || n0 == n2) return 0.0;
    const double denom = std::sqrt(static_cast<double>(n0 - n1)) *
                         std::sqrt(static_cast<double>(n0 - n2));
    return std::clamp(static_cast<double>(concordant_minus_discordant) / denom, -1.0, 1.0);
}

void check_lengths(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size())
        throw std::invalid_argument("kendall_tau: length mismatch (" + std::to_string(x.size()) +
                                    " vs " + std::to_string(y.size()) + ")");
    if (x.size() < 2) throw std::invalid_argument("kendall_tau: need at least 2 observations");
}

// One column reduced to dense integer ranks, so every pair it joins skips the
// floating-point sort.
struct RankedColumn {
    std::vector<std::uint32_t> rank;
    std::vector<std::uint32_t> order;  // rows by ascending rank
    std::int64_t tie_pairs = 0;
};

RankedColumn rank_column(const Vector& v) {
    const auto n = static_cast<std::size_t>(v.size());
    RankedColumn c;
    c.order.resize(n);
    std::iota(c.order.begin(), c.order.end(), std::uint32_t{0});
    std::sort(c.order.begin(), c.order.end(), [&](std::uint32_t a, std::uint32_t b) {
        return v(a) < v(b) || (v(a) == v(b) && a < b);
    });
    c.rank.resize(n);
    std::uint32_t r = 0;
    std::int64_t run = 1;
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0 && v(c.order[i]) != v(c.order[i - 1])) {
            ++r;
            c.tie_pairs += pairs(run);
            run = 1;
        } else if (i > 0) {
            ++run;
        }
        c.rank[c.order[i]] = r;
    }
    c.tie_pairs += pairs(run);
    return c;
}

// Same counts as kendall_tau, on precomputed ranks.
double tau_ranked(const RankedColumn& x, const RankedColumn& y, std::vector<std::uint32_t>& ys,
                  std::vector<std::uint32_t>& tree) {
    const std::size_t n = x.order.size();
    ys.resize(n);
    std::int64_t n3 = 0;
    std::size_t start = 0;
    while (start < n) {
        std::size_t end = start + 1;
        while (end < n && x.rank[x.order[end]] == x.rank[x.order[start]]) ++end;
        for (std::size_t k = start; k < end; ++k) ys[k] = y.rank[x.order[k]];
        if (end - start > 1) {
            std::sort(ys.begin() + static_cast<std::ptrdiff_t>(start),
                      ys.begin() + static_cast<std::ptrdiff_t>(end));
            std::int64_t run = 1;
            for (std::size_t k = start + 1; k < end; ++k) {
                if (ys[k] == ys[k - 1]) {
                    ++run;
                } else {
                    n3 += pairs(run);
                    run = 1;
                }
            }
            n3 += pairs(run);
        }
        start = end;
    }
    // strict inversions: earlier entries with a larger y rank (Fenwick counts)
    tree.assign(n + 1, 0);
    std::int64_t swaps = 0;
    for (std::size_t k = 0; k < n; ++k) {
        std::int64_t not_above = 0;
        for (std::size_t i = ys[k] + 1; i > 0; i -= i & (~i + 1)) not_above += tree[i];
        swaps += static_cast<std::int64_t>(k) - not_above;
        for (std::size_t i = ys[k] + 1; i <= n; i += i & (~i + 1)) ++tree[i];
    }
    const auto n0 = pairs(static_cast<std::int64_t>(n));
    return tau_b(n0, x.tie_pairs, y.tie_pairs, n0 - x.tie_pairs - y.tie_pairs + n3 - 2 * swaps);
}

}  // namespace

PseudoObservations pseudo_observations(const Matrix& features) {
    const auto m = features.rows();
    const auto d = features.cols();
    if (m < 2) throw std::invalid_argument("pseudo_observations: need at least 2 rows");
    PseudoObservations out{Matrix(m, d)};
    const double denom = static_cast<double>(m + 1);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(m));
    for (Eigen::Index j = 0; j < d; ++j) {
        std::iota(order.begin(), order.end(), Eigen::Index{0});
        std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
            return features(a, j) < features(b, j);
        });
        std::size_t start = 0;
        while (start < order.size()) {
            std::size_t end = start + 1;
            while (end < order.size() && features(order[end], j) == features(order[start], j))
                ++end;
            // ranks start+1 .. end share their average
            const double midrank = 0.5 * static_cast<double>(start + 1 + end);
            for (std::size_t r = start; r < end; ++r) out.U(order[r], j) = midrank / denom;
            start = end;
        }
    }
    return out;
}

double kendall_tau(std::span<const double> x, std::span<const double> y) {
    check_lengths(x, y);
    const std::size_t n = x.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return x[a] < x[b] || (x[a] == x[b] && y[a] < y[b]);
    });

    std::int64_t n1 = 0;  // tied in x
    std::int64_t n3 = 0;  // tied in both
    {
        std::int64_t run_x = 1;
        std::int64_t run_xy = 1;
        for (std::size_t i = 1; i < n; ++i) {
            const bool same_x = x[order[i]] == x[order[i - 1]];
            if (same_x) {
                ++run_x;
                if (y[order[i]] == y[order[i - 1]]) {
                    ++run_xy;
                } else {
                    n3 += pairs(run_xy);
                    run_xy = 1;
                }
            } else {
                n1 += pairs(run_x);
                n3 += pairs(run_xy);
                run_x = 1;
                run_xy = 1;
            }
        }
        n1 += pairs(run_x);
        n3 += pairs(run_xy);
    }

    std::vector<double> ys(n);
    for (std::size_t i = 0; i < n; ++i) ys[i] = y[order[i]];
    std::vector<double> scratch(n);
    const std::int64_t swaps = merge_count(ys, scratch, 0, n);

    std::int64_t n2 = 0;  // tied in y
    std::int64_t run_y = 1;
    for (std::size_t i = 1; i < n; ++i) {
        if (ys[i] == ys[i - 1]) {
            ++run_y;
        } else {
            n2 += pairs(run_y);
            run_y = 1;
        }
    }
    n2 += pairs(run_y);

    const auto n0 = pairs(static_cast<std::int64_t>(n));
    return tau_b(n0, n1, n2, n0 - n1 - n2 + n3 - 2 * swaps);
}

double kendall_tau_naive(std::span<const double> x, std::span<const double> y) {
    check_lengths(x, y);
    const std::size_t n = x.size();
    std::int64_t concordant = 0;
    std::int64_t discordant = 0;
    std::int64_t ties_x = 0;
    std::int64_t ties_y = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double dx = x[i] - x[j];
            const double dy = y[i] - y[j];
            if (dx == 0.0) ++ties_x;
            if (dy == 0.0) ++ties_y;
            if (dx == 0.0 || dy == 0.0) continue;
            if ((dx > 0) == (dy > 0)) ++concordant;
            else ++discordant;
        }
    }
    return tau_b(pairs(static_cast<std::int64_t>(n)), ties_x, ties_y, concordant - discordant);
}

TauMatrix tau_matrix(const PseudoObservations& U, std::size_t m_cap, RngStream& rng) {
    if (m_cap < 50) throw std::invalid_argument("tau_matrix: m_cap must be >= 50");
    const auto m = static_cast<std::size_t>(U.U.rows());
    const auto d = U.U.cols();
    TauMatrix out;
    out.rows_used.resize(m);
    std::iota(out.rows_used.begin(), out.rows_used.end(), std::size_t{0});
    if (m > m_cap) {
        // Partial Fisher-Yates: the first m_cap slots become a uniform subset.
        for (std::size_t i = 0; i < m_cap; ++i)
            std::swap(out.rows_used[i], out.rows_used[i + rng.below(m - i)]);
        out.rows_used.resize(m_cap);
        std::sort(out.rows_used.begin(), out.rows_used.end());
        out.subsampled = true;
    }
    const Matrix sub = out.subsampled ? select_rows(U.U, out.rows_used) : U.U;

    out.tau = Matrix::Identity(d, d);
    double sum = 0.0;
    std::vector<RankedColumn> cols;
    cols.reserve(static_cast<std::size_t>(d));
    for (Eigen::Index j = 0; j < d; ++j) cols.push_back(rank_column(sub.col(j)));
    std::vector<std::uint32_t> ys, tree;
    for (Eigen::Index i = 0; i < d; ++i) {
        for (Eigen::Index j = i + 1; j < d; ++j) {
            const double t = tau_ranked(cols[static_cast<std::size_t>(i)],
                                        cols[static_cast<std::size_t>(j)], ys, tree);
            out.tau(i, j) = t;
            out.tau(j, i) = t;
            sum += t;
        }
    }
    const double n_pairs = static_cast<double>(d) * static_cast<double>(d - 1) / 2.0;
    out.bar_tau = d > 1 ? sum / n_pairs : 0.0;
    return out;
}

CorrelationMatrix nearest_correlation(const Matrix& S, double floor) {
    if (S.rows() != S.cols()) throw std::invalid_argument("nearest_correlation: matrix not square");
    if (!S.allFinite()) throw std::runtime_error("nearest_correlation: non-finite entries");
    if (!(floor >= 0.0)) throw std::invalid_argument("nearest_correlation: floor must be >= 0");
    const auto d = S.rows();
    Matrix A = 0.5 * (S + S.transpose());
    for (Eigen::Index i = 0; i < d; ++i) {
        if (std::fabs(A(i, i) - 1.0) > 1e-8)
            throw std::invalid_argument("nearest_correlation: diagonal entry differs from 1");
        A(i, i) = 1.0;
    }

    // Rescaling to unit diagonal shrinks the spectrum a little, so one
    // clip can land just under the floor; a few more passes settle it.
    constexpr double slack = 1e-12;
    constexpr int max_passes = 50;
    double min_eig = 0.0;
    for (int pass = 0; pass < max_passes; ++pass) {
        Eigen::SelfAdjointEigenSolver<Matrix> eig(A);
        if (eig.info() != Eigen::Success)
            throw std::runtime_error("nearest_correlation: eigen-decomposition failed");
        min_eig = eig.eigenvalues().minCoeff();
        if (min_eig >= floor - slack) return {A, min_eig};

        const Vector clipped = eig.eigenvalues().cwiseMax(floor);
        Matrix B = eig.eigenvectors() * clipped.asDiagonal() * eig.eigenvectors().transpose();
        const Vector inv_sqrt = B.diagonal().cwiseSqrt().cwiseInverse();
        B = inv_sqrt.asDiagonal() * B * inv_sqrt.asDiagonal();
        A = 0.5 * (B + B.transpose());
        A.diagonal().setOnes();
    }
    Eigen::SelfAdjointEigenSolver<Matrix> last(A, Eigen::EigenvaluesOnly);
    return {A, last.eigenvalues().minCoeff()};
}

}  // namespace cawi

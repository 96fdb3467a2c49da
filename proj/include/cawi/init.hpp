#pragma once

#include "cawi/copula.hpp"

#include <cstdint>

namespace cawi {

enum class MarginalKind { uniform_pm1, std_normal };

std::string_view marginal_name(MarginalKind kind);
/// Accepts "uniform", "uniform_pm1", "normal", "std_normal".
MarginalKind parse_marginal(std::string_view name);

/// G^{-1}(u) for the weight marginal law.
double marginal_quantile(MarginalKind kind, double u);

struct InitProvenance {
    CopulaFamily family = CopulaFamily::independence;
    MarginalKind marginal = MarginalKind::uniform_pm1;
    std::uint64_t seed = 0;
    std::size_t fold_index = 0;
    std::uint64_t stream_id = 0;
};

/// Frozen hidden-layer parameters: W is d x h (one column per hidden unit).
struct WeightInit {
    Matrix W;
    Vector b;
    InitProvenance provenance;

    std::size_t input_dim() const { return static_cast<std::size_t>(W.rows()); }
    std::size_t width() const { return static_cast<std::size_t>(W.cols()); }

    friend bool operator==(const WeightInit& a, const WeightInit& b) {
        return a.W == b.W && a.b == b.b;
    }
};

/// Column t of W is G^{-1} applied to the t-th copula draw. Biases are
/// Uniform(-1,1) from a child stream of `rng`, so they do not depend on how
/// many draws the copula consumed.
WeightInit sample_weight_init(const CopulaModel& model, std::size_t d, std::size_t h,
                              MarginalKind law, RngStream& rng);

/// Conventional i.i.d. U[-1,1] initialization.
WeightInit iid_baseline(std::size_t d, std::size_t h, RngStream& rng);

}  // namespace cawi

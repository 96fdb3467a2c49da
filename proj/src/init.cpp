#include "cawi/init.hpp"

#include "cawi/numerics.hpp"

#include <stdexcept>

namespace cawi {

std::string_view marginal_name(MarginalKind kind) {
    return kind == MarginalKind::uniform_pm1 ? "uniform_pm1" : "std_normal";
}

MarginalKind parse_marginal(std::string_view name) {
    if (name == "uniform" || name == "uniform_pm1") return MarginalKind::uniform_pm1;
    if (name == "normal" || name == "std_normal") return MarginalKind::std_normal;
    throw std::invalid_argument("unknown marginal law '" + std::string(name) + "'");
}

double marginal_quantile(MarginalKind kind, double u) {
    if (!(u > 0.0 && u < 1.0))
        throw std::domain_error("marginal_quantile: u must lie in (0,1)");
    return kind == MarginalKind::uniform_pm1 ? 2.0 * u - 1.0 : std_normal_quantile(u);
}

WeightInit sample_weight_init(const CopulaModel& model, std::size_t d, std::size_t h,
                              MarginalKind law, RngStream& rng) {
    if (model.d != d)
        throw std::invalid_argument("sample_weight_init: copula dimension " +
                                    std::to_string(model.d) + " does not match d = " +
                                    std::to_string(d));
    if (h < 1) throw std::invalid_argument("sample_weight_init: h must be >= 1");

    RngStream bias_rng = rng.child(static_cast<std::uint64_t>(StreamPurpose::bias));
    const Matrix draws = sample_copula(model, h, rng);  // h x d

    WeightInit init;
    init.W = draws.transpose().unaryExpr([law](double u) { return marginal_quantile(law, u); });
    init.b.resize(static_cast<Eigen::Index>(h));
    for (Eigen::Index t = 0; t < init.b.size(); ++t) init.b(t) = 2.0 * bias_rng.uniform() - 1.0;
    init.provenance.family = model.family;
    init.provenance.marginal = law;
    init.provenance.stream_id = rng.stream_id();
    return init;
}

WeightInit iid_baseline(std::size_t d, std::size_t h, RngStream& rng) {
    return sample_weight_init(CopulaModel::independence(d), d, h, MarginalKind::uniform_pm1, rng);
}

}  // namespace cawi

#include "cawi/eval.hpp"

#include "cawi/numerics.hpp"
#include "cawi/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace cawi {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string format_fixed(double value, int decimals, bool sign = false) {
    char buf[64];
    const double unit = std::pow(10.0, -decimals);
    if (std::fabs(value) < 0.5 * unit) value = 0.0;  // no "-0.0000"
    std::snprintf(buf, sizeof buf, sign ? "%+.*f" : "%.*f", decimals, value);
    return buf;
}

std::string format_general(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

std::string display_name(CopulaFamily family) {
    switch (family) {
    case CopulaFamily::independence: return "iid";
    case CopulaFamily::gaussian: return "Gaussian";
    case CopulaFamily::student_t: return "t";
    case CopulaFamily::clayton: return "Clayton";
    case CopulaFamily::frank: return "Frank";
    case CopulaFamily::gumbel: return "Gumbel";
    }
    return "?";
}

Matrix layer_output(const Matrix& X, const WeightInit& init, ActivationKind phi) {
    Matrix H = X * init.W;
    H.rowwise() += init.b.transpose();
    activate_inplace(phi, H);
    return H;
}

CopulaModel fit_on(const Matrix& X, CopulaFamily family, std::size_t m_cap,
                   const CopulaFitOptions& fit, RngStream rng) {
    if (family == CopulaFamily::independence || X.cols() < 1)
        return CopulaModel::independence(static_cast<std::size_t>(X.cols()));
    const auto U = pseudo_observations(X);
    const auto tau = tau_matrix(U, m_cap, rng);
    return fit_copula(family, U, tau, fit);
}

WeightInit draw_layer(const CopulaModel& model, std::size_t rows, std::size_t cols,
                      MarginalKind marginal, RngStream rng) {
    if (model.family == CopulaFamily::independence) return iid_baseline(rows, cols, rng);
    return sample_weight_init(model, rows, cols, marginal, rng);
}

double sample_sd(const std::vector<double>& v, double mean) {
    if (v.size() < 2) return 0.0;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

std::vector<double> default_lambda_grid() {
    std::vector<double> out;
    for (int i = -6; i <= 6; ++i) out.push_back(std::pow(10.0, i));
    return out;
}

std::vector<std::size_t> default_node_grid() {
    std::vector<std::size_t> out;
    for (std::size_t h = 3; h <= 203; h += 20) out.push_back(h);
    return out;
}

std::vector<ActivationKind> all_activations() {
    return {ActivationKind::sigmoid, ActivationKind::sine, ActivationKind::tribas,
            ActivationKind::radbas,  ActivationKind::tansig, ActivationKind::relu,
            ActivationKind::selu};
}

std::vector<CopulaFamily> all_families() {
    return {CopulaFamily::independence, CopulaFamily::gaussian, CopulaFamily::student_t,
            CopulaFamily::clayton,      CopulaFamily::frank,    CopulaFamily::gumbel};
}

void normalize(GridSpec& grid) {
    if (grid.lambdas.empty() || grid.node_counts.empty() || grid.activations.empty() ||
        grid.families.empty())
        throw std::invalid_argument("grid: every list must be nonempty");
    for (double l : grid.lambdas)
        if (!(l >= 0.0) || !std::isfinite(l))
            throw std::invalid_argument("grid: lambda values must be finite and >= 0");
    for (auto n : grid.node_counts)
        if (n < 1) throw std::invalid_argument("grid: node counts must be >= 1");
    std::vector<CopulaFamily> unique;
    for (auto f : grid.families)
        if (std::find(unique.begin(), unique.end(), f) == unique.end()) unique.push_back(f);
    if (std::find(unique.begin(), unique.end(), CopulaFamily::independence) == unique.end())
        unique.insert(unique.begin(), CopulaFamily::independence);
    grid.families = std::move(unique);
}

GridPoint grid_point(const GridSpec& grid, std::size_t index) {
    const auto n_act = grid.activations.size();
    const auto n_nodes = grid.node_counts.size();
    if (index >= grid.points()) throw std::out_of_range("grid_point: index out of range");
    return {grid.lambdas[index / (n_act * n_nodes)], grid.node_counts[(index / n_act) % n_nodes],
            grid.activations[index % n_act]};
}

std::size_t grid_index(const GridSpec& grid, std::size_t lambda_i, std::size_t node_i,
                       std::size_t act_i) {
    return (lambda_i * grid.node_counts.size() + node_i) * grid.activations.size() + act_i;
}

ArchSpec arch_at(const EvalOptions& opts, const GridPoint& point) {
    ArchSpec a = opts.arch;
    a.lambda = point.lambda;
    a.activation = point.activation;
    switch (a.kind) {
    case ArchKind::rvfl:
    case ArchKind::elm: a.h = point.nodes; break;
    case ArchKind::drvfl: a.layer_widths.assign(std::max<std::size_t>(1, opts.drvfl_layers), point.nodes); break;
    case ArchKind::bls: a.bls.r = point.nodes; break;
    }
    return a;
}

std::vector<WeightInit> sample_arch_inits(const ArchSpec& arch, const CopulaModel& model,
                                          const Matrix& X_train, MarginalKind marginal,
                                          bool all_layers, std::size_t m_cap,
                                          const CopulaFitOptions& fit, RngStream stream) {
    const auto d = static_cast<std::size_t>(X_train.cols());
    const auto shapes = init_shapes(arch, d);
    const bool refit = all_layers && model.family != CopulaFamily::independence;
    constexpr std::uint64_t kRefitTag = 1000;
    std::vector<WeightInit> inits;
    inits.reserve(shapes.size());

    switch (arch.kind) {
    case ArchKind::rvfl:
    case ArchKind::elm:
        inits.push_back(draw_layer(model, d, arch.h, marginal, stream.child(0)));
        break;
    case ArchKind::drvfl: {
        Matrix prev = X_train;
        for (std::size_t l = 0; l < shapes.size(); ++l) {
            const auto [rows, cols] = shapes[l];
            CopulaModel layer_model = CopulaModel::independence(rows);
            if (l == 0) {
                layer_model = model;
            } else if (refit) {
                prev = layer_output(prev, inits.back(), arch.activation);
                layer_model = fit_on(prev, model.family, m_cap, fit, stream.child(kRefitTag + l));
            }
            inits.push_back(draw_layer(layer_model, rows, cols, marginal, stream.child(l)));
        }
        break;
    }
    case ArchKind::bls: {
        const auto q = arch.bls.q;
        for (std::size_t i = 0; i < q; ++i)
            inits.push_back(draw_layer(model, d, arch.bls.p, marginal, stream.child(i)));
        CopulaModel enh_model = CopulaModel::independence(arch.bls.p * q);
        if (refit) {
            Matrix Z(X_train.rows(), static_cast<Eigen::Index>(arch.bls.p * q));
            for (std::size_t i = 0; i < q; ++i)
                Z.middleCols(static_cast<Eigen::Index>(i * arch.bls.p),
                             static_cast<Eigen::Index>(arch.bls.p)) =
                    layer_output(X_train, inits[i], arch.activation);
            enh_model = fit_on(Z, model.family, m_cap, fit, stream.child(kRefitTag + q));
        }
        for (std::size_t j = 0; j < arch.bls.s; ++j)
            inits.push_back(draw_layer(enh_model, arch.bls.p * q, arch.bls.r, marginal,
                                       stream.child(q + j)));
        break;
    }
    }
    return inits;
}

FoldFit fit_fold(const Dataset& data, const FoldSplit& fold, CopulaFamily family,
                 const EvalOptions& opts) {
    FoldFit out;
    out.scaler = fit_standardizer(data.features, fold.train_rows, opts.std_denominator);
    const Matrix X_train = apply_standardizer(out.scaler, select_rows(data.features, fold.train_rows));
    out.model = fit_on(X_train, family, opts.m_cap, opts.fit,
                       RngStream::derive(opts.seed, StreamPurpose::tau_subsample, fold.fold_index));
    return out;
}

const FamilyResult* EvalReport::find(CopulaFamily family) const {
    for (const auto& f : families)
        if (f.family == family) return &f;
    return nullptr;
}

FamilyResult run_cv_family(const Dataset& data, const std::vector<FoldSplit>& folds,
                           CopulaFamily family, const GridSpec& grid, const EvalOptions& opts) {
    const std::size_t K = folds.size();
    const std::size_t P = grid.points();
    if (K == 0 || P == 0) throw std::invalid_argument("run_cv: empty folds or grid");
    const auto nan = std::numeric_limits<double>::quiet_NaN();

    std::vector<std::vector<double>> acc(K, std::vector<double>(P, nan));
    std::vector<std::vector<std::string>> fold_failures(K);
    std::vector<CopulaModel> models(K);
    std::vector<double> fold_seconds(K, 0.0);

    parallel_for(K, opts.threads, [&](std::size_t f) {
        const auto& fold = folds[f];
        const auto start = Clock::now();
        FoldFit ff = fit_fold(data, fold, family, opts);
        const Matrix X_train =
            apply_standardizer(ff.scaler, select_rows(data.features, fold.train_rows));
        const Matrix X_test =
            apply_standardizer(ff.scaler, select_rows(data.features, fold.test_rows));
        const Matrix Y_train = one_hot(select_labels(data.labels, fold.train_rows), data.n_class);
        const auto y_test = select_labels(data.labels, fold.test_rows);

        for (std::size_t ni = 0; ni < grid.node_counts.size(); ++ni) {
            const auto stream =
                RngStream::derive(opts.seed, StreamPurpose::weights, fold.fold_index, ni);
            for (std::size_t ai = 0; ai < grid.activations.size(); ++ai) {
                const GridPoint base{grid.lambdas.front(), grid.node_counts[ni],
                                     grid.activations[ai]};
                const ArchSpec arch = arch_at(opts, base);
                try {
                    const auto inits = sample_arch_inits(arch, ff.model, X_train, opts.marginal,
                                                         opts.cawi_all_layers, opts.m_cap,
                                                         opts.fit, stream);
                    const Matrix A_train = build_features(arch, X_train, inits);
                    const Matrix A_test = build_features(arch, X_test, inits);
                    const RidgeSystem system(A_train, Y_train);
                    for (std::size_t li = 0; li < grid.lambdas.size(); ++li) {
                        const auto g = grid_index(grid, li, ni, ai);
                        try {
                            const Matrix theta = system.solve(grid.lambdas[li]);
                            acc[f][g] = 100.0 * accuracy(argmax_rows(A_test * theta), y_test);
                        } catch (const std::exception& e) {
                            fold_failures[f].push_back(
                                "fold " + std::to_string(f) + ", grid point " + std::to_string(g) +
                                ": " + e.what());
                        }
                    }
                } catch (const std::exception& e) {
                    fold_failures[f].push_back("fold " + std::to_string(f) + ", nodes " +
                                               std::to_string(grid.node_counts[ni]) + ", " +
                                               std::string(activation_name(grid.activations[ai])) +
                                               ": " + e.what());
                }
            }
        }
        models[f] = std::move(ff.model);
        fold_seconds[f] = seconds_since(start);
    });

    FamilyResult result;
    result.family = family;
    for (const auto& ff : fold_failures)
        result.failures.insert(result.failures.end(), ff.begin(), ff.end());

    double best = -1.0;
    for (std::size_t g = 0; g < P; ++g) {
        std::vector<double> vals(K);
        bool ok = true;
        for (std::size_t f = 0; f < K && ok; ++f) {
            if (std::isnan(acc[f][g])) ok = false;
            else vals[f] = acc[f][g];
        }
        if (!ok) continue;
        // sorted sum: equal fold multisets give bit-equal means
        std::sort(vals.begin(), vals.end());
        const double mean = std::accumulate(vals.begin(), vals.end(), 0.0) / static_cast<double>(K);
        if (mean > best) {
            best = mean;
            result.best_grid_index = g;
        }
    }
    if (best < 0.0)
        throw std::runtime_error("run_cv: every grid point failed for family " +
                                 std::string(family_name(family)));

    result.mean_accuracy = best;
    result.best = grid_point(grid, result.best_grid_index);
    for (std::size_t f = 0; f < K; ++f) result.fold_accuracies.push_back(acc[f][result.best_grid_index]);
    for (const auto& m : models) {
        result.clamped = result.clamped || m.diagnostics.clamped;
        result.subsampled = result.subsampled || m.diagnostics.subsampled;
        result.fold_diagnostics.push_back(m.diagnostics);
    }
    result.mean_train_time = std::accumulate(fold_seconds.begin(), fold_seconds.end(), 0.0) /
                             static_cast<double>(K * P);
    return result;
}

EvalReport run_cv(const Dataset& data, const GridSpec& grid_in, const EvalOptions& opts) {
    validate(data);
    GridSpec grid = grid_in;
    normalize(grid);
    validate(opts.arch);

    EvalReport report;
    report.dataset = data.name;
    report.arch = opts.arch.kind;
    report.seed = opts.seed;
    report.k = opts.k;
    report.m = data.rows();
    report.d = data.cols();
    report.n_class = data.n_class;
    report.undersized_class = has_undersized_class(data, opts.k);
    report.grid = grid;

    const auto folds = stratified_kfold(data, opts.k, opts.seed);
    for (auto family : grid.families)
        report.families.push_back(run_cv_family(data, folds, family, grid, opts));

    const auto* iid = report.find(CopulaFamily::independence);
    double best_other = -std::numeric_limits<double>::infinity();
    for (const auto& f : report.families) {
        if (f.family == CopulaFamily::independence) continue;
        if (f.mean_accuracy > best_other) {
            best_other = f.mean_accuracy;
            report.best_family = f.family;
        }
    }
    report.improvement = std::isfinite(best_other) ? best_other - iid->mean_accuracy : 0.0;
    // fold means summed in different orders can differ in the last ulp
    if (std::fabs(report.improvement) < 1e-9) report.improvement = 0.0;
    if (!std::isfinite(best_other)) report.best_family = CopulaFamily::independence;
    return report;
}

MultiSeedResult multi_seed(const Dataset& data, std::span<const std::uint64_t> seeds,
                           const GridSpec& grid, EvalOptions opts) {
    if (seeds.size() < 2) throw std::invalid_argument("multi_seed: need at least 2 seeds");
    MultiSeedResult out;
    for (auto seed : seeds) {
        opts.seed = seed;
        out.reports.push_back(run_cv(data, grid, opts));
    }
    out.summary = seed_summary(out.reports);
    return out;
}

std::vector<SeedSummaryRow> seed_summary(std::span<const EvalReport> reports) {
    std::vector<SeedSummaryRow> rows;
    if (reports.empty()) return rows;
    for (const auto& fr : reports.front().families) {
        std::vector<double> accs;
        for (const auto& r : reports) {
            const auto* f = r.find(fr.family);
            if (!f) throw std::invalid_argument("seed_summary: reports cover different families");
            accs.push_back(f->mean_accuracy);
        }
        double sum = 0.0;
        for (double a : accs) sum += a;
        const double mean = sum / static_cast<double>(accs.size());
        rows.push_back({fr.family, mean, accs.size() > 1 ? sample_sd(accs, mean) : 0.0});
    }
    return rows;
}

WilcoxonResult wilcoxon_signed_rank(std::span<const double> diffs, Alternative alternative,
                                    WilcoxonMethod method) {
    std::vector<double> nonzero;
    for (double d : diffs) {
        if (!std::isfinite(d)) throw std::invalid_argument("wilcoxon: non-finite difference");
        if (d != 0.0) nonzero.push_back(d);
    }
    if (nonzero.empty()) throw std::invalid_argument("wilcoxon: all differences are zero");
    const std::size_t n = nonzero.size();

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::fabs(nonzero[a]) < std::fabs(nonzero[b]);
    });
    std::vector<double> ranks(n);
    double tie_term = 0.0;  // sum of (t^3 - t)
    for (std::size_t start = 0; start < n;) {
        std::size_t end = start + 1;
        while (end < n && std::fabs(nonzero[order[end]]) == std::fabs(nonzero[order[start]])) ++end;
        const double midrank = 0.5 * static_cast<double>(start + 1 + end);
        for (std::size_t r = start; r < end; ++r) ranks[order[r]] = midrank;
        const double t = static_cast<double>(end - start);
        tie_term += t * t * t - t;
        start = end;
    }

    WilcoxonResult res;
    res.n_effective = n;
    for (std::size_t i = 0; i < n; ++i)
        if (nonzero[i] > 0.0) res.w_plus += ranks[i];

    double p_greater = 1.0;
    double p_less = 1.0;
    const bool exact = method == WilcoxonMethod::exact ||
                       (method == WilcoxonMethod::automatic && n <= 12);
    if (exact && n > 24) throw std::invalid_argument("wilcoxon: exact enumeration needs n <= 24");
    if (exact) {
        res.exact = true;
        const std::uint32_t patterns = 1u << n;
        std::uint32_t ge = 0;
        std::uint32_t le = 0;
        constexpr double eps = 1e-9;
        for (std::uint32_t mask = 0; mask < patterns; ++mask) {
            double w = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                if (mask & (1u << i)) w += ranks[i];
            if (w >= res.w_plus - eps) ++ge;
            if (w <= res.w_plus + eps) ++le;
        }
        p_greater = static_cast<double>(ge) / patterns;
        p_less = static_cast<double>(le) / patterns;
    } else {
        const double nn = static_cast<double>(n);
        const double mean = nn * (nn + 1.0) / 4.0;
        const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_term / 48.0;
        const double sd = std::sqrt(var);
        p_greater = 0.5 * std::erfc((res.w_plus - mean - 0.5) / sd / std::sqrt(2.0));
        p_less = std_normal_cdf((res.w_plus - mean + 0.5) / sd);
    }
    switch (alternative) {
    case Alternative::greater: res.p_value = p_greater; break;
    case Alternative::less: res.p_value = p_less; break;
    case Alternative::two_sided: res.p_value = std::min(1.0, 2.0 * std::min(p_greater, p_less)); break;
    }
    res.p_value = std::clamp(res.p_value, std::numeric_limits<double>::min(), 1.0);
    return res;
}

std::vector<TimingResult> measure_timing(const Dataset& data, std::span<const CopulaFamily> families,
                                         std::size_t reps, const EvalOptions& opts) {
    if (reps < 3) throw std::invalid_argument("measure_timing: reps must be >= 3");
    validate(data);
    IndexList all(data.rows());
    std::iota(all.begin(), all.end(), std::size_t{0});
    const auto scaler = fit_standardizer(data.features, all, opts.std_denominator);
    const Matrix X = apply_standardizer(scaler, data.features);
    const Matrix Y = one_hot(data.labels, data.n_class);

    std::vector<TimingResult> out;
    for (auto f : families) out.push_back({f, {}, 0.0, 0.0});
    // Families are interleaved inside each repetition so drift affects all alike.
    for (std::size_t rep = 0; rep <= reps; ++rep) {
        for (std::size_t fi = 0; fi < out.size(); ++fi) {
            const auto family = out[fi].family;
            const auto start = Clock::now();
            const auto model = fit_on(X, family, opts.m_cap, opts.fit,
                                      RngStream::derive(opts.seed, StreamPurpose::timing, rep, 0));
            auto inits = sample_arch_inits(opts.arch, model, X, opts.marginal, opts.cawi_all_layers,
                                           opts.m_cap, opts.fit,
                                           RngStream::derive(opts.seed, StreamPurpose::timing, rep, 1));
            const auto trained = train(opts.arch, X, Y, std::move(inits));
            const double secs = seconds_since(start);
            if (trained.theta.size() == 0) throw std::runtime_error("measure_timing: empty model");
            if (rep > 0) out[fi].seconds.push_back(secs);
        }
    }
    for (auto& r : out) {
        r.mean = std::accumulate(r.seconds.begin(), r.seconds.end(), 0.0) /
                 static_cast<double>(r.seconds.size());
        r.sd = sample_sd(r.seconds, r.mean);
    }
    return out;
}

Json report_to_json(const EvalReport& report) {
    Json j;
    j["schema"] = kReportSchema;
    j["dataset"] = report.dataset;
    j["arch"] = arch_name(report.arch);
    j["seed"] = report.seed;
    j["k"] = report.k;
    j["m"] = report.m;
    j["d"] = report.d;
    j["n_class"] = report.n_class;
    j["undersized_class"] = report.undersized_class;
    Json grid;
    grid["lambdas"] = report.grid.lambdas;
    grid["node_counts"] = report.grid.node_counts;
    Json acts = Json::array();
    for (auto a : report.grid.activations) acts.push_back(activation_name(a));
    grid["activations"] = acts;
    Json fams = Json::array();
    for (auto f : report.grid.families) fams.push_back(family_name(f));
    grid["families"] = fams;
    j["grid"] = grid;

    Json rows = Json::array();
    for (const auto& f : report.families) {
        Json r;
        r["family"] = family_name(f.family);
        r["mean_accuracy"] = f.mean_accuracy;
        r["best"] = {{"lambda", f.best.lambda},
                     {"nodes", f.best.nodes},
                     {"activation", activation_name(f.best.activation)}};
        r["best_grid_index"] = f.best_grid_index;
        r["fold_accuracies"] = f.fold_accuracies;
        r["failures"] = f.failures;
        r["clamped"] = f.clamped;
        r["subsampled"] = f.subsampled;
        Json diags = Json::array();
        for (const auto& dgn : f.fold_diagnostics)
            diags.push_back({{"bar_tau", dgn.bar_tau},
                             {"clamped", dgn.clamped},
                             {"subsampled", dgn.subsampled}});
        r["fold_diagnostics"] = diags;
        rows.push_back(std::move(r));
    }
    j["families"] = rows;
    j["best_family"] = family_name(report.best_family);
    j["improvement"] = report.improvement;
    return j;
}

EvalReport report_from_json(const Json& j) {
    try {
        if (j.at("schema").get<std::string>() != kReportSchema)
            throw std::runtime_error("report: unsupported schema '" +
                                     j.at("schema").get<std::string>() + "'");
        EvalReport r;
        r.dataset = j.at("dataset").get<std::string>();
        r.arch = parse_arch(j.at("arch").get<std::string>());
        r.seed = j.at("seed").get<std::uint64_t>();
        r.k = j.at("k").get<std::size_t>();
        r.m = j.at("m").get<std::size_t>();
        r.d = j.at("d").get<std::size_t>();
        r.n_class = j.at("n_class").get<int>();
        r.undersized_class = j.at("undersized_class").get<bool>();
        const auto& g = j.at("grid");
        r.grid.lambdas = g.at("lambdas").get<std::vector<double>>();
        r.grid.node_counts = g.at("node_counts").get<std::vector<std::size_t>>();
        r.grid.activations.clear();
        for (const auto& a : g.at("activations")) r.grid.activations.push_back(parse_activation(a.get<std::string>()));
        r.grid.families.clear();
        for (const auto& f : g.at("families")) r.grid.families.push_back(parse_family(f.get<std::string>()));
        for (const auto& row : j.at("families")) {
            FamilyResult f;
            f.family = parse_family(row.at("family").get<std::string>());
            f.mean_accuracy = row.at("mean_accuracy").get<double>();
            const auto& b = row.at("best");
            f.best = {b.at("lambda").get<double>(), b.at("nodes").get<std::size_t>(),
                      parse_activation(b.at("activation").get<std::string>())};
            f.best_grid_index = row.at("best_grid_index").get<std::size_t>();
            f.fold_accuracies = row.at("fold_accuracies").get<std::vector<double>>();
            f.failures = row.at("failures").get<std::vector<std::string>>();
            f.clamped = row.at("clamped").get<bool>();
            f.subsampled = row.at("subsampled").get<bool>();
            for (const auto& dj : row.at("fold_diagnostics")) {
                FitDiagnostics dgn;
                dgn.bar_tau = dj.at("bar_tau").get<double>();
                dgn.clamped = dj.at("clamped").get<bool>();
                dgn.subsampled = dj.at("subsampled").get<bool>();
                f.fold_diagnostics.push_back(dgn);
            }
            r.families.push_back(std::move(f));
        }
        r.best_family = parse_family(j.at("best_family").get<std::string>());
        r.improvement = j.at("improvement").get<double>();
        return r;
    } catch (const Json::exception& e) {
        throw std::runtime_error(std::string("report: ") + e.what());
    }
}

Json multi_seed_to_json(const MultiSeedResult& result) {
    Json j;
    j["schema"] = kReportSchema;
    Json reports = Json::array();
    for (const auto& r : result.reports) reports.push_back(report_to_json(r));
    j["reports"] = reports;
    Json summary = Json::array();
    for (const auto& s : result.summary)
        summary.push_back({{"family", family_name(s.family)}, {"mean", s.mean}, {"sd", s.sd}});
    j["summary"] = summary;
    return j;
}

std::string report_csv_header() {
    return "dataset,seed,arch,family,mean_accuracy,best_lambda,best_nodes,best_activation,"
           "delta_vs_iid,improvement,best_family,clamped,subsampled,failed_points\n";
}

std::string report_csv_rows(const EvalReport& report) {
    const auto* iid = report.find(CopulaFamily::independence);
    std::ostringstream out;
    for (const auto& f : report.families) {
        out << report.dataset << ',' << report.seed << ',' << arch_name(report.arch) << ','
            << family_name(f.family) << ',' << format_percent(f.mean_accuracy) << ','
            << format_general(f.best.lambda) << ',' << f.best.nodes << ','
            << activation_name(f.best.activation) << ','
            << format_signed_percent(iid ? f.mean_accuracy - iid->mean_accuracy : 0.0) << ','
            << format_signed_percent(report.improvement) << ','
            << family_name(report.best_family) << ',' << (f.clamped ? 1 : 0) << ','
            << (f.subsampled ? 1 : 0) << ',' << f.failures.size() << '\n';
    }
    return out.str();
}

std::string format_percent(double value) { return format_fixed(value, 4); }

std::string format_signed_percent(double value) { return format_fixed(value, 4, true); }

std::string format_table(std::span<const EvalReport> reports) {
    if (reports.empty()) return {};
    const auto& families = reports.front().grid.families;
    std::size_t name_width = 7;
    for (const auto& r : reports) name_width = std::max(name_width, r.dataset.size());
    constexpr int col = 11;

    std::ostringstream out;
    char buf[128];
    std::snprintf(buf, sizeof buf, "%-*s", static_cast<int>(name_width), "Dataset");
    out << buf;
    for (auto f : families) {
        std::snprintf(buf, sizeof buf, " %*s", col, display_name(f).c_str());
        out << buf;
    }
    std::snprintf(buf, sizeof buf, " %*s\n", col, "Improvement");
    out << buf;
    for (const auto& r : reports) {
        std::snprintf(buf, sizeof buf, "%-*s", static_cast<int>(name_width), r.dataset.c_str());
        out << buf;
        double best = -1.0;
        for (auto f : families)
            if (const auto* fr = r.find(f)) best = std::max(best, fr->mean_accuracy);
        for (auto f : families) {
            const auto* fr = r.find(f);
            std::string cell = fr ? format_percent(fr->mean_accuracy) : "-";
            if (fr && fr->mean_accuracy >= best - 1e-9) cell += "*";
            else cell += " ";
            std::snprintf(buf, sizeof buf, " %*s", col, cell.c_str());
            out << buf;
        }
        std::snprintf(buf, sizeof buf, " %*s\n", col, format_signed_percent(r.improvement).c_str());
        out << buf;
    }
    return out.str();
}

Dataset synthetic_dataset(const CopulaModel& model, std::size_t m, int n_class,
                          std::uint64_t seed, const std::string& name) {
    if (n_class < 2) throw std::invalid_argument("synthetic_dataset: need at least 2 classes");
    if (m < static_cast<std::size_t>(n_class))
        throw std::invalid_argument("synthetic_dataset: fewer rows than classes");
    auto rng = RngStream::derive(seed, StreamPurpose::synthetic, 0, 0);
    const Matrix U = sample_copula(model, m, rng);
    const auto d = U.cols();

    Dataset data;
    data.name = name;
    data.features = U.unaryExpr([](double u) { return std_normal_quantile(u); });
    auto coef_rng = rng.child(1);
    Vector w(d);
    for (Eigen::Index j = 0; j < d; ++j) w(j) = standard_normal(coef_rng);
    auto noise_rng = rng.child(2);
    std::vector<double> score(m);
    for (std::size_t i = 0; i < m; ++i) {
        const auto row = data.features.row(static_cast<Eigen::Index>(i));
        double s = row.dot(w);
        if (d >= 2) s += 0.75 * row(0) * row(1);
        s += std::sin(1.5 * row(d - 1));
        score[i] = s + 0.5 * standard_normal(noise_rng);
    }
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return score[a] < score[b]; });
    data.labels.assign(m, 0);
    for (std::size_t r = 0; r < m; ++r)
        data.labels[order[r]] = static_cast<int>(r * static_cast<std::size_t>(n_class) / m);
    data.n_class = n_class;
    for (int c = 0; c < n_class; ++c) data.class_names.push_back("c" + std::to_string(c));
    for (Eigen::Index j = 0; j < d; ++j) data.feature_names.push_back("x" + std::to_string(j));
    validate(data);
    return data;
}

}  // namespace cawi

#include "cawi/eval.hpp"
#include "cawi/numerics.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <set>
#include <sstream>

using namespace cawi;

namespace {

const Dataset& iris() {
    static const Dataset d = load_csv(std::string(CAWI_DATA_DIR) + "/iris.csv", std::string{});
    return d;
}

GridSpec small_grid() {
    GridSpec g;
    g.lambdas = {1e-3, 1.0, 1e3};
    g.node_counts = {23, 63};
    g.activations = {ActivationKind::sigmoid, ActivationKind::relu};
    return g;
}

GridSpec one_point(double lambda, std::size_t nodes) {
    GridSpec g;
    g.lambdas = {lambda};
    g.node_counts = {nodes};
    g.activations = {ActivationKind::sigmoid};
    g.families = {CopulaFamily::independence};
    return g;
}

// exact upper-tail probability by enumerating all 2^n sign patterns
double enumerate_p(const std::vector<double>& d, double& w_obs) {
    std::vector<double> a;
    for (double x : d)
        if (x != 0.0) a.push_back(std::fabs(x));
    const std::size_t n = a.size();
    std::vector<double> rank(n);
    for (std::size_t i = 0; i < n; ++i) {
        double below = 0, equal = 0;
        for (std::size_t j = 0; j < n; ++j) {
            below += a[j] < a[i];
            equal += a[j] == a[i];
        }
        rank[i] = below + (equal + 1) / 2.0;
    }
    w_obs = 0;
    std::size_t k = 0;
    for (double x : d)
        if (x != 0.0) {
            if (x > 0) w_obs += rank[k];
            ++k;
        }
    std::size_t hits = 0;
    for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
        double w = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (mask >> i & 1) w += rank[i];
        hits += w >= w_obs - 1e-9;
    }
    return double(hits) / double(std::size_t{1} << n);
}

Dataset comonotone(std::size_t m) {
    RngStream rng(17, 17);
    std::ostringstream csv;
    csv << "a,b,label\n";
    for (std::size_t i = 0; i < m; ++i) {
        const double x = rng.uniform();
        csv << x << ',' << std::exp(3 * x) << ',' << (x < 0.5 ? "lo" : "hi") << '\n';
    }
    return parse_csv(csv.str(), std::string{});
}

}  // namespace

TEST_CASE("grid defaults and enumeration order") {
    const auto l = default_lambda_grid();
    REQUIRE(l.size() == 13);
    for (int i = 0; i < 13; ++i) CHECK(l[i] == doctest::Approx(std::pow(10.0, i - 6)).epsilon(1e-12));
    const auto n = default_node_grid();
    REQUIRE(n.size() == 11);
    for (std::size_t i = 0; i < 11; ++i) CHECK(n[i] == 3 + 20 * i);
    CHECK(all_activations().size() == 7);
    const auto fams = all_families();
    REQUIRE(fams.size() == 6);
    CHECK(fams.front() == CopulaFamily::independence);
    CHECK(GridSpec{}.points() == 13 * 11 * 7);

    const auto g = small_grid();
    std::size_t idx = 0;
    for (std::size_t li = 0; li < 3; ++li)
        for (std::size_t ni = 0; ni < 2; ++ni)
            for (std::size_t ai = 0; ai < 2; ++ai, ++idx) {
                CHECK(grid_index(g, li, ni, ai) == idx);
                const auto p = grid_point(g, idx);
                CHECK(p.lambda == g.lambdas[li]);
                CHECK(p.nodes == g.node_counts[ni]);
                CHECK(p.activation == g.activations[ai]);
            }
    CHECK_THROWS(grid_point(g, idx));
}

TEST_CASE("normalize") {
    GridSpec g = small_grid();
    g.families = {CopulaFamily::clayton, CopulaFamily::clayton, CopulaFamily::gumbel};
    normalize(g);
    CHECK(g.families == std::vector<CopulaFamily>{CopulaFamily::independence, CopulaFamily::clayton,
                                                 CopulaFamily::gumbel});
    GridSpec bad = small_grid();
    bad.lambdas.clear();
    CHECK_THROWS(normalize(bad));
    bad = small_grid();
    bad.lambdas = {-1.0};
    CHECK_THROWS(normalize(bad));
    bad = small_grid();
    bad.node_counts = {0};
    CHECK_THROWS(normalize(bad));
}

TEST_CASE("independence family reproduces a hand-built iid RVFL") {
    EvalOptions opts;
    opts.seed = 5;
    const auto& data = iris();
    const auto grid = one_point(1.0, 23);
    const auto folds = stratified_kfold(data, opts.k, opts.seed);
    const auto res = run_cv_family(data, folds, CopulaFamily::independence, grid, opts);
    REQUIRE(res.fold_accuracies.size() == folds.size());

    const auto d = data.cols();
    double total = 0;
    for (const auto& fold : folds) {
        const auto sc = fit_standardizer(data.features, fold.train_rows);
        const Matrix Xtr = apply_standardizer(sc, select_rows(data.features, fold.train_rows));
        const Matrix Xte = apply_standardizer(sc, select_rows(data.features, fold.test_rows));
        auto rng = RngStream::derive(opts.seed, StreamPurpose::weights, fold.fold_index, 0).child(0);
        const auto w = iid_baseline(d, 23, rng);
        auto features = [&](const Matrix& X) {
            Matrix A(X.rows(), Eigen::Index(d + 23));
            for (Eigen::Index i = 0; i < X.rows(); ++i) {
                for (Eigen::Index j = 0; j < Eigen::Index(d); ++j) A(i, j) = X(i, j);
                for (Eigen::Index c = 0; c < 23; ++c) {
                    double z = w.b(c);
                    for (Eigen::Index j = 0; j < Eigen::Index(d); ++j) z += X(i, j) * w.W(j, c);
                    A(i, Eigen::Index(d) + c) = 1.0 / (1.0 + std::exp(-z));
                }
            }
            return A;
        };
        const Matrix theta = oracle::ridge(features(Xtr), one_hot(select_labels(data.labels, fold.train_rows), 3), 1.0);
        const Matrix scores = features(Xte) * theta;
        const auto truth = select_labels(data.labels, fold.test_rows);
        int hit = 0;
        for (Eigen::Index i = 0; i < scores.rows(); ++i) {
            Eigen::Index c;
            scores.row(i).maxCoeff(&c);
            hit += int(c) == truth[i];
        }
        const double acc = 100.0 * hit / double(truth.size());
        CHECK(res.fold_accuracies[fold.fold_index] == doctest::Approx(acc).epsilon(1e-12));
        total += acc;
    }
    CHECK(res.mean_accuracy == doctest::Approx(total / folds.size()).epsilon(1e-12));
}

TEST_CASE("run_cv is deterministic and thread count does not matter") {
    GridSpec g = small_grid();
    g.families = {CopulaFamily::independence, CopulaFamily::clayton, CopulaFamily::gaussian};
    EvalOptions opts;
    const auto a = report_to_json(run_cv(iris(), g, opts)).dump();
    const auto b = report_to_json(run_cv(iris(), g, opts)).dump();
    CHECK(a == b);
    opts.threads = 2;
    CHECK(report_to_json(run_cv(iris(), g, opts)).dump() == a);
    opts.threads = 1;
    opts.seed = 7;
    CHECK(report_to_json(run_cv(iris(), g, opts)).dump() != a);
}

TEST_CASE("report invariants") {
    GridSpec g = small_grid();
    EvalOptions opts;
    const auto r = run_cv(iris(), g, opts);
    REQUIRE(r.families.size() == 6);
    CHECK(r.families.front().family == CopulaFamily::independence);
    CHECK(r.m == 150);
    CHECK(r.d == 4);
    CHECK(r.n_class == 3);
    double best_other = -1;
    for (const auto& f : r.families) {
        CHECK(f.mean_accuracy >= 0.0);
        CHECK(f.mean_accuracy <= 100.0);
        CHECK(f.fold_accuracies.size() == 5);
        CHECK(f.best_grid_index < g.points());
        const auto p = grid_point(g, f.best_grid_index);
        CHECK(p.lambda == f.best.lambda);
        CHECK(p.nodes == f.best.nodes);
        CHECK(f.mean_accuracy == doctest::Approx(oracle::mean(f.fold_accuracies)).epsilon(1e-12));
        if (f.family != CopulaFamily::independence) best_other = std::max(best_other, f.mean_accuracy);
    }
    CHECK(r.improvement ==
          doctest::Approx(best_other - r.find(CopulaFamily::independence)->mean_accuracy).epsilon(1e-9));
    CHECK(r.find(r.best_family)->mean_accuracy == best_other);
    CHECK(r.find(CopulaFamily::frank) != nullptr);
}

TEST_CASE("ties go to the first grid point") {
    GridSpec g;
    g.lambdas = {1.0, 1.0};
    g.node_counts = {23};
    g.activations = {ActivationKind::sigmoid, ActivationKind::sigmoid};
    g.families = {CopulaFamily::independence};
    const auto r = run_cv(iris(), g, EvalOptions{});
    CHECK(r.families[0].best_grid_index == 0);
}

TEST_CASE("fold fitting sees training rows only") {
    auto data = iris();
    EvalOptions opts;
    const auto folds = stratified_kfold(data, 5, 42);
    const auto before = fit_fold(data, folds[2], CopulaFamily::gaussian, opts);
    for (auto r : folds[2].test_rows) data.features.row(Eigen::Index(r)).setConstant(1e6);
    const auto after = fit_fold(data, folds[2], CopulaFamily::gaussian, opts);
    CHECK(before.scaler.means == after.scaler.means);
    CHECK(before.scaler.stddevs == after.scaler.stddevs);
    CHECK(before.model.R == after.model.R);
}

TEST_CASE("comonotone features give a strongly correlated gaussian fit") {
    const auto data = comonotone(200);
    const auto folds = stratified_kfold(data, 5, 42);
    const auto ff = fit_fold(data, folds[0], CopulaFamily::gaussian, EvalOptions{});
    CHECK(ff.model.R(0, 1) >= 0.95);
}

TEST_CASE("wilcoxon fixed cases") {
    const std::vector<double> five{1, 2, 3, 4, 5};
    auto r = wilcoxon_signed_rank(five);
    CHECK(r.w_plus == 15.0);
    CHECK(r.exact);
    CHECK(r.p_value == doctest::Approx(0.03125).epsilon(1e-12));

    const std::vector<double> pm{1, -1};
    r = wilcoxon_signed_rank(pm);
    CHECK(r.w_plus == 1.5);
    CHECK(r.p_value == doctest::Approx(0.75).epsilon(1e-12));

    const std::vector<double> zero_dropped{0, 2, 3};
    CHECK(wilcoxon_signed_rank(zero_dropped).n_effective == 2);

    const std::vector<double> zeros{0, 0, 0};
    CHECK_THROWS(wilcoxon_signed_rank(zeros));

    const std::vector<double> many(83, 0.5);
    std::vector<double> distinct(83);
    for (int i = 0; i < 83; ++i) distinct[i] = 0.1 * (i + 1);
    r = wilcoxon_signed_rank(distinct);
    CHECK(r.w_plus == 3486.0);
    CHECK_FALSE(r.exact);
    CHECK(r.p_value < 1e-6);
    CHECK(wilcoxon_signed_rank(many).p_value < 1e-6);

    const std::vector<double> neg{-1, -2, -3, -4, -5};
    CHECK(wilcoxon_signed_rank(neg, Alternative::less).p_value == doctest::Approx(0.03125));
    CHECK(wilcoxon_signed_rank(neg, Alternative::two_sided).p_value == doctest::Approx(0.0625));
    std::vector<double> big(30, 1.0);
    CHECK_THROWS(wilcoxon_signed_rank(big, Alternative::greater, WilcoxonMethod::exact));
}

TEST_CASE("exact wilcoxon matches sign enumeration") {
    RngStream rng(21, 21);
    for (int rep = 0; rep < 200; ++rep) {
        const std::size_t n = 1 + rng.below(12);
        std::vector<double> d(n);
        for (auto& x : d) x = rep % 2 ? std::round(6 * (rng.uniform() - 0.4)) : rng.uniform() - 0.35;
        if (std::all_of(d.begin(), d.end(), [](double x) { return x == 0.0; })) continue;
        double w = 0;
        const double p = enumerate_p(d, w);
        const auto r = wilcoxon_signed_rank(d);
        REQUIRE(r.exact);
        REQUIRE(r.w_plus == doctest::Approx(w));
        REQUIRE(r.p_value == doctest::Approx(p).epsilon(1e-12));
    }
}

TEST_CASE("normal approximation tracks the exact law near n = 12") {
    RngStream rng(22, 22);
    double worst = 0;
    for (int rep = 0; rep < 100; ++rep) {
        const std::size_t n = 10 + rep % 3;
        std::vector<double> d(n);
        for (auto& x : d) x = rng.uniform() - 0.3;
        const auto e = wilcoxon_signed_rank(d, Alternative::greater, WilcoxonMethod::exact);
        const auto a = wilcoxon_signed_rank(d, Alternative::greater, WilcoxonMethod::normal);
        CHECK_FALSE(a.exact);
        worst = std::max(worst, std::fabs(e.p_value - a.p_value));
    }
    CHECK(worst < 0.01);
}

TEST_CASE("multi-seed summary") {
    GridSpec g = small_grid();
    g.families = {CopulaFamily::independence, CopulaFamily::frank};
    const std::vector<std::uint64_t> seeds{42, 7, 123};
    const auto res = multi_seed(iris(), seeds, g, EvalOptions{});
    REQUIRE(res.reports.size() == 3);
    std::set<std::vector<std::size_t>> fold0;
    for (auto s : seeds) fold0.insert(stratified_kfold(iris(), 5, s)[0].test_rows);
    CHECK(fold0.size() == 3);
    REQUIRE(res.summary.size() == 2);
    for (const auto& row : res.summary) {
        std::vector<double> v;
        for (const auto& r : res.reports) v.push_back(r.find(row.family)->mean_accuracy);
        const double mu = oracle::mean(v);
        CHECK(row.mean == doctest::Approx(mu).epsilon(1e-12));
        double ss = 0;
        for (double x : v) ss += (x - mu) * (x - mu);
        CHECK(row.sd == doctest::Approx(std::sqrt(ss / 2)).epsilon(1e-9));
    }
    const std::vector<std::uint64_t> one{42};
    CHECK_THROWS(multi_seed(iris(), one, g, EvalOptions{}));
    const auto j = multi_seed_to_json(res);
    CHECK(j["reports"].size() == 3);
    CHECK(j["summary"].size() == 2);
}

TEST_CASE("timing repetitions") {
    const std::vector<CopulaFamily> fams{CopulaFamily::independence, CopulaFamily::gumbel};
    EvalOptions opts;
    opts.arch.h = 23;
    const auto t = measure_timing(iris(), fams, 3, opts);
    REQUIRE(t.size() == 2);
    for (const auto& r : t) {
        CHECK(r.seconds.size() == 3);
        for (double s : r.seconds) CHECK(s >= 0.0);
        CHECK(r.mean == doctest::Approx(oracle::mean(r.seconds)));
    }
    CHECK_THROWS(measure_timing(iris(), fams, 2, opts));
}

TEST_CASE("report JSON, CSV and table") {
    GridSpec g = small_grid();
    g.families = {CopulaFamily::independence, CopulaFamily::clayton};
    const auto r = run_cv(iris(), g, EvalOptions{});
    const auto j = report_to_json(r);
    CHECK(j["schema"] == kReportSchema);
    CHECK_FALSE(j.dump().find("time") != std::string::npos);
    const auto back = report_from_json(Json::parse(j.dump()));
    CHECK(report_to_json(back).dump() == j.dump());
    auto wrong = j;
    wrong["schema"] = "other/9";
    CHECK_THROWS(report_from_json(wrong));

    const auto rows = report_csv_rows(r);
    CHECK(std::count(rows.begin(), rows.end(), '\n') == 2);
    const auto header = report_csv_header();
    CHECK(std::count(header.begin(), header.end(), ',') ==
          std::count(rows.begin(), rows.begin() + rows.find('\n'), ','));
    CHECK(rows.find(format_percent(r.families[1].mean_accuracy)) != std::string::npos);

    const std::vector<EvalReport> reports{r};
    const auto table = format_table(reports);
    std::istringstream lines(table);
    std::string head, body;
    std::getline(lines, head);
    std::getline(lines, body);
    CHECK(head.find("iid") != std::string::npos);
    CHECK(head.find("Clayton") != std::string::npos);
    CHECK(head.find("Improvement") != std::string::npos);
    CHECK(body.find(format_percent(r.families[0].mean_accuracy)) != std::string::npos);
    CHECK(body.find(format_signed_percent(r.improvement)) != std::string::npos);
    CHECK(body.find('*') != std::string::npos);
}

TEST_CASE("percent formatting") {
    CHECK(format_percent(96.0) == "96.0000");
    CHECK(format_signed_percent(0.47619) == "+0.4762");
    CHECK(format_signed_percent(-1.25) == "-1.2500");
    CHECK(format_signed_percent(-1e-12) == "+0.0000");
}

TEST_CASE("synthetic datasets are seeded and balanced") {
    CopulaModel m;
    m.family = CopulaFamily::clayton;
    m.d = 3;
    m.theta = 2.0;
    const auto a = synthetic_dataset(m, 300, 3, 9, "syn");
    const auto b = synthetic_dataset(m, 300, 3, 9, "syn");
    CHECK(a.features == b.features);
    CHECK(a.labels == b.labels);
    CHECK(a.rows() == 300);
    CHECK(a.cols() == 3);
    for (int c = 0; c < 3; ++c) CHECK(std::count(a.labels.begin(), a.labels.end(), c) == 100);
    CHECK(kendall_tau(oracle::column(a.features, 0), oracle::column(a.features, 1)) > 0.35);
    CHECK(synthetic_dataset(m, 300, 3, 10, "syn").features != a.features);
    CHECK_THROWS(synthetic_dataset(m, 2, 3, 9, "x"));
}

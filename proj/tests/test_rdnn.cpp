#include "cawi/io.hpp"
#include "cawi/numerics.hpp"
#include "cawi/rdnn.hpp"

#include "oracles.hpp"

#include <doctest.h>

using namespace cawi;

namespace {

std::vector<WeightInit> random_inits(const ArchSpec& arch, std::size_t d, RngStream& rng) {
    std::vector<WeightInit> out;
    for (auto [rows, cols] : init_shapes(arch, d)) out.push_back(iid_baseline(rows, cols, rng));
    return out;
}

WeightInit zero_init(std::size_t d, std::size_t h) {
    WeightInit w;
    w.W = Matrix::Zero(d, h);
    w.b = Vector::Zero(h);
    return w;
}

Matrix expect_features(const ArchSpec& arch, const Matrix& X, const std::vector<WeightInit>& inits) {
    auto layer = [](ActivationKind k, const Matrix& in, const WeightInit& w) {
        Matrix z = in * w.W;
        for (Eigen::Index i = 0; i < z.rows(); ++i)
            for (Eigen::Index j = 0; j < z.cols(); ++j) z(i, j) = activate(k, z(i, j) + w.b(j));
        return z;
    };
    auto hcat = [](const std::vector<Matrix>& parts) {
        Eigen::Index cols = 0;
        for (const auto& p : parts) cols += p.cols();
        Matrix out(parts.front().rows(), cols);
        Eigen::Index at = 0;
        for (const auto& p : parts) {
            out.middleCols(at, p.cols()) = p;
            at += p.cols();
        }
        return out;
    };
    switch (arch.kind) {
    case ArchKind::elm: return layer(arch.activation, X, inits[0]);
    case ArchKind::rvfl: return hcat({X, layer(arch.activation, X, inits[0])});
    case ArchKind::drvfl: {
        std::vector<Matrix> parts{X};
        Matrix prev = X;
        for (const auto& w : inits) {
            prev = layer(arch.activation, prev, w);
            parts.push_back(prev);
        }
        return hcat(parts);
    }
    case ArchKind::bls: {
        std::vector<Matrix> z;
        for (std::size_t i = 0; i < arch.bls.q; ++i) z.push_back(layer(arch.activation, X, inits[i]));
        const Matrix Z = hcat(z);
        std::vector<Matrix> parts{Z};
        for (std::size_t j = 0; j < arch.bls.s; ++j)
            parts.push_back(layer(arch.enhancement_activation, Z, inits[arch.bls.q + j]));
        return hcat(parts);
    }
    }
    return {};
}

}  // namespace

TEST_CASE("activation definitions") {
    CHECK(activate(ActivationKind::tribas, 0.0) == 1.0);
    CHECK(activate(ActivationKind::tribas, 2.0) == 0.0);
    CHECK(activate(ActivationKind::tribas, -0.25) == 0.75);
    CHECK(activate(ActivationKind::tansig, 0.0) == 0.0);
    for (double x : {-2.0, 0.5, 3.0}) CHECK(std::fabs(activate(ActivationKind::tansig, x) - std::tanh(x)) <= 1e-12);
    CHECK(activate(ActivationKind::selu, 0.0) == 0.0);
    CHECK(activate(ActivationKind::selu, -1e3) == doctest::Approx(-1.0507009873554805 * 1.6732632423543772));
    CHECK(std::fabs(activate(ActivationKind::selu, -1e3) + 1.7581) < 1e-4);
    CHECK(activate(ActivationKind::selu, 2.0) == doctest::Approx(2.0 * 1.0507009873554805));
    CHECK(activate(ActivationKind::sigmoid, 0.0) == 0.5);
    CHECK(activate(ActivationKind::radbas, 0.0) == 1.0);
    CHECK(activate(ActivationKind::radbas, 1.0) == doctest::Approx(std::exp(-1.0)));
    CHECK(activate(ActivationKind::relu, -3.0) == 0.0);
    CHECK(activate(ActivationKind::sine, 1.0) == std::sin(1.0));
    for (auto k : {ActivationKind::sigmoid, ActivationKind::sine, ActivationKind::tribas, ActivationKind::radbas,
                   ActivationKind::tansig, ActivationKind::relu, ActivationKind::selu})
        for (double x : {-1e300, -50.0, -1e-9, 0.0, 1e-9, 50.0, 1e300}) REQUIRE(std::isfinite(activate(k, x)));
}

TEST_CASE("activation parsing") {
    CHECK(parse_activation("1") == ActivationKind::sigmoid);
    CHECK(parse_activation("7") == ActivationKind::selu);
    CHECK(parse_activation("tansig") == ActivationKind::tansig);
    CHECK(parse_activation(activation_name(ActivationKind::radbas)) == ActivationKind::radbas);
    CHECK_THROWS(parse_activation("8"));
    CHECK_THROWS(parse_activation("swish"));
    CHECK(parse_arch("bls") == ArchKind::bls);
    CHECK_THROWS(parse_arch("cnn"));
}

TEST_CASE("feature construction examples") {
    Matrix X(1, 1);
    X << 5;
    ArchSpec arch;
    arch.kind = ArchKind::elm;
    arch.h = 1;
    const std::vector<WeightInit> one{zero_init(1, 1)};
    CHECK(build_features(arch, X, one)(0, 0) == 0.5);
    arch.kind = ArchKind::rvfl;
    const Matrix a = build_features(arch, X, one);
    CHECK(a.cols() == 2);
    CHECK(a(0, 0) == 5.0);
    CHECK(a(0, 1) == 0.5);

    ArchSpec bls;
    bls.kind = ArchKind::bls;
    bls.bls = {1, 1, 1, 1};
    bls.activation = ActivationKind::tansig;
    const Matrix b = build_features(bls, X, {zero_init(1, 1), zero_init(1, 1)});
    CHECK(b == Matrix::Zero(1, 2));
}

TEST_CASE("features match a direct construction for every architecture") {
    RngStream rng(1, 1);
    const Matrix X = oracle::random_matrix(13, 4, rng);
    ArchSpec arch;
    arch.h = 6;
    arch.layer_widths = {5, 3, 4};
    arch.bls = {3, 2, 2, 5};
    arch.activation = ActivationKind::radbas;
    for (auto kind : {ArchKind::rvfl, ArchKind::elm, ArchKind::drvfl, ArchKind::bls}) {
        arch.kind = kind;
        const auto inits = random_inits(arch, 4, rng);
        const Matrix A = build_features(arch, X, inits);
        CHECK(A.cols() == static_cast<Eigen::Index>(feature_width(arch, 4)));
        CHECK((A - expect_features(arch, X, inits)).cwiseAbs().maxCoeff() <= 1e-13);
    }
    arch.kind = ArchKind::rvfl;
    auto wrong = random_inits(arch, 3, rng);
    CHECK_THROWS(build_features(arch, X, wrong));
}

TEST_CASE("feature width bookkeeping over random specs") {
    RngStream rng(2, 2);
    for (int rep = 0; rep < 200; ++rep) {
        ArchSpec arch;
        arch.kind = static_cast<ArchKind>(rng.below(4));
        const std::size_t d = 1 + rng.below(20);
        arch.h = 1 + rng.below(300);
        arch.layer_widths.assign(1 + rng.below(5), 0);
        std::size_t sum = 0;
        for (auto& w : arch.layer_widths) sum += (w = 1 + rng.below(50));
        arch.bls = {1 + rng.below(10), 1 + rng.below(10), 1 + rng.below(3), 1 + rng.below(100)};
        std::size_t expect = 0;
        switch (arch.kind) {
        case ArchKind::rvfl: expect = d + arch.h; break;
        case ArchKind::elm: expect = arch.h; break;
        case ArchKind::drvfl: expect = d + sum; break;
        case ArchKind::bls: expect = arch.bls.p * arch.bls.q + arch.bls.r * arch.bls.s; break;
        }
        REQUIRE(feature_width(arch, d) == expect);
    }
}

TEST_CASE("spec validation") {
    ArchSpec arch;
    arch.h = 0;
    CHECK_THROWS(validate(arch));
    arch.h = 3;
    arch.lambda = -1;
    CHECK_THROWS(validate(arch));
    arch.lambda = 0;
    CHECK_NOTHROW(validate(arch));
    arch.kind = ArchKind::drvfl;
    arch.layer_widths = {};
    CHECK_THROWS(validate(arch));
    arch.kind = ArchKind::bls;
    arch.bls.p = 0;
    CHECK_THROWS(validate(arch));
}

TEST_CASE("ridge examples") {
    Matrix Y(2, 1);
    Y << 1, 0;
    Matrix t = ridge_solve(Matrix::Identity(2, 2), Y, 1.0);
    CHECK(t(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(t(1, 0) == 0.0);

    Matrix A(2, 1), y(2, 1);
    A << 1, 1;
    y << 1, 3;
    CHECK(ridge_solve(A, y, 0.0)(0, 0) == doctest::Approx(2.0).epsilon(1e-15));

    Matrix dup(3, 2);
    dup << 1, 1, 2, 2, 3, 3;
    CHECK_THROWS_AS(ridge_solve(dup, Matrix::Ones(3, 1), 0.0), RankDeficientError);
    CHECK_NOTHROW(ridge_solve(dup, Matrix::Ones(3, 1), 1e-8));
    CHECK_THROWS(ridge_solve(dup, Matrix::Ones(3, 1), -1.0));
    CHECK_THROWS(ridge_solve(dup, Matrix::Ones(2, 1), 1.0));
}

TEST_CASE("ridge agrees with the Gaussian-elimination oracle") {
    RngStream rng(3, 3);
    const Matrix A = oracle::random_matrix(30, 7, rng);
    const Matrix Y = oracle::random_matrix(30, 3, rng);
    CHECK(oracle::rel_frobenius(ridge_solve(A, Y, 0.1), oracle::ridge(A, Y, 0.1)) <= 1e-8);
}

TEST_CASE("primal, dual and oracle agree on random instances") {
    RngStream rng(4, 4);
    const double lambdas[] = {1e-3, 1.0, 1e3};
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t m = 10 + rng.below(91), a = 2 + rng.below(199);
        const double lambda = lambdas[rep % 3];
        const Matrix A = oracle::random_matrix(m, a, rng);
        const Matrix Y = oracle::random_matrix(m, 1 + rng.below(4), rng);
        const Matrix primal = ridge_solve(A, Y, lambda, RidgeForm::primal);
        const Matrix dual = ridge_solve(A, Y, lambda, RidgeForm::dual);
        REQUIRE(oracle::rel_frobenius(primal, dual) <= 1e-8);
        REQUIRE(oracle::rel_frobenius(ridge_solve(A, Y, lambda), oracle::ridge(A, Y, lambda)) <= 1e-8);
        const Matrix AtY = A.transpose() * Y;
        const Matrix auto_sol = ridge_solve(A, Y, lambda);
        REQUIRE((A.transpose() * A * auto_sol + lambda * auto_sol - AtY).norm() <= 1e-8 * AtY.norm());
        const RidgeSystem sys(A, Y);
        REQUIRE(sys.dual() == (a > m));
        REQUIRE(oracle::rel_frobenius(sys.solve(lambda), auto_sol) <= 1e-12);
    }
}

TEST_CASE("larger lambda never grows the solution") {
    RngStream rng(5, 5);
    for (int rep = 0; rep < 10; ++rep) {
        const Matrix A = oracle::random_matrix(40, 15 + 10 * rep, rng);
        const Matrix Y = oracle::random_matrix(40, 2, rng);
        const RidgeSystem sys(A, Y);
        double prev = 1e300;
        for (double l = 1e-6; l <= 1e6; l *= 10) {
            const double n = sys.solve(l).norm();
            REQUIRE(n <= prev);
            prev = n;
        }
    }
}

TEST_CASE("argmax ties go to the lower index") {
    Matrix s(3, 3);
    s << 1, 1, 0, 0, 2, 2, 5, 5, 5;
    CHECK(argmax_rows(s) == std::vector<int>{0, 1, 0});
    const Matrix theta = ridge_solve(Matrix::Identity(2, 2), Matrix::Identity(2, 2), 1e-10);
    CHECK(argmax_rows(Matrix::Identity(2, 2) * theta) == std::vector<int>{0, 1});
    CHECK(accuracy({0, 1, 1, 0}, {0, 1, 0, 0}) == 0.75);
    CHECK_THROWS(accuracy({0}, {0, 1}));
}

TEST_CASE("separable blobs are learned") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        RngStream rng(seed, 6);
        const int m = 200;
        Matrix X(m, 2);
        std::vector<int> y(m);
        for (int i = 0; i < m; ++i) {
            y[i] = i % 2;
            const double c = y[i] ? 2.0 : -2.0;  // centres 4 sd apart
            X(i, 0) = c + 0.5 * standard_normal(rng);
            X(i, 1) = c + 0.5 * standard_normal(rng);
        }
        // a plain linear rule separates the classes
        int lin = 0;
        for (int i = 0; i < m; ++i) lin += ((X(i, 0) + X(i, 1) > 0) == (y[i] == 1));
        REQUIRE(lin == m);

        ArchSpec arch;
        arch.h = 23;
        arch.lambda = 0.01;
        const auto scaler = fit_standardizer(X, [&] {
            IndexList r(m);
            for (int i = 0; i < m; ++i) r[i] = i;
            return r;
        }());
        const Matrix Xs = apply_standardizer(scaler, X);
        for (auto act : {ActivationKind::sigmoid, ActivationKind::sine, ActivationKind::tribas, ActivationKind::radbas,
                         ActivationKind::tansig, ActivationKind::relu, ActivationKind::selu}) {
            arch.activation = act;
            const auto model = train(arch, Xs, one_hot(y, 2), random_inits(arch, 2, rng), scaler);
            CHECK_MESSAGE(accuracy(predict(model, X), y) >= 0.95, activation_name(act));
        }
    }
}

TEST_CASE("training leaves the frozen weights untouched") {
    RngStream rng(7, 7);
    const Matrix X = oracle::random_matrix(50, 3, rng);
    std::vector<int> y(50);
    for (int i = 0; i < 50; ++i) y[i] = X(i, 0) > 0;
    for (auto kind : {ArchKind::rvfl, ArchKind::elm, ArchKind::drvfl, ArchKind::bls}) {
        ArchSpec arch;
        arch.kind = kind;
        arch.h = 9;
        arch.layer_widths = {4, 4};
        arch.bls = {2, 3, 1, 5};
        const auto inits = random_inits(arch, 3, rng);
        const auto copy = inits;
        const auto model = train(arch, X, one_hot(y, 2), inits);
        REQUIRE(inits.size() == copy.size());
        for (std::size_t i = 0; i < inits.size(); ++i) {
            CHECK(inits[i] == copy[i]);
            CHECK(model.inits[i] == copy[i]);
        }
        CHECK(model.theta.cols() == 2);
        CHECK(model.a == feature_width(arch, 3));
    }
}

TEST_CASE("trained model JSON round trip predicts identically") {
    RngStream rng(8, 8);
    const Matrix X = oracle::random_matrix(60, 4, rng);
    std::vector<int> y(60);
    for (int i = 0; i < 60; ++i) y[i] = (X(i, 0) + X(i, 1) > 0) + (X(i, 2) > 0.5);
    IndexList rows(60);
    for (int i = 0; i < 60; ++i) rows[i] = i;
    const auto scaler = fit_standardizer(X, rows);
    ArchSpec arch;
    arch.kind = ArchKind::drvfl;
    arch.layer_widths = {7, 5};
    arch.activation = ActivationKind::selu;
    arch.lambda = 0.3;
    const auto model = train(arch, apply_standardizer(scaler, X), one_hot(y, 3), random_inits(arch, 4, rng), scaler);
    const auto back = trained_model_from_json(Json::parse(trained_model_to_json(model).dump()));
    CHECK(back.theta == model.theta);
    CHECK(predict_scores(back, X) == predict_scores(model, X));
    CHECK(arch_to_json(arch_from_json(arch_to_json(arch))) == arch_to_json(arch));
}

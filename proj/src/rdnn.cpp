#include "cawi/rdnn.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <numeric>
#include <string>

namespace cawi {

namespace {

constexpr double kSeluAlpha = 1.6732632423543772;
constexpr double kSeluScale = 1.0507009873554805;

Matrix hidden(const Matrix& X, const WeightInit& init, ActivationKind phi) {
    Matrix H = X * init.W;
    H.rowwise() += init.b.transpose();
    activate_inplace(phi, H);
    return H;
}

void check_init(const WeightInit& init, std::size_t rows, std::size_t cols, std::size_t index) {
    if (init.input_dim() != rows || init.width() != cols ||
        static_cast<std::size_t>(init.b.size()) != cols)
        throw std::invalid_argument("build_features: init " + std::to_string(index) + " is " +
                                    std::to_string(init.input_dim()) + "x" +
                                    std::to_string(init.width()) + ", expected " +
                                    std::to_string(rows) + "x" + std::to_string(cols));
}

}  // namespace

std::string_view activation_name(ActivationKind kind) {
    switch (kind) {
    case ActivationKind::sigmoid: return "sigmoid";
    case ActivationKind::sine: return "sine";
    case ActivationKind::tribas: return "tribas";
    case ActivationKind::radbas: return "radbas";
    case ActivationKind::tansig: return "tansig";
    case ActivationKind::relu: return "relu";
    case ActivationKind::selu: return "selu";
    }
    return "unknown";
}

ActivationKind parse_activation(std::string_view name) {
    static constexpr ActivationKind kinds[] = {
        ActivationKind::sigmoid, ActivationKind::sine, ActivationKind::tribas,
        ActivationKind::radbas,  ActivationKind::tansig, ActivationKind::relu,
        ActivationKind::selu};
    for (std::size_t i = 0; i < std::size(kinds); ++i) {
        if (name == activation_name(kinds[i]) || name == std::to_string(i + 1)) return kinds[i];
    }
    throw std::invalid_argument("unknown activation '" + std::string(name) + "'");
}

double activate(ActivationKind kind, double x) {
    switch (kind) {
    case ActivationKind::sigmoid: return 1.0 / (1.0 + std::exp(-x));
    case ActivationKind::sine: return std::sin(x);
    case ActivationKind::tribas: return std::max(0.0, 1.0 - std::fabs(x));
    case ActivationKind::radbas: return std::exp(-x * x);
    case ActivationKind::tansig: return 2.0 / (1.0 + std::exp(-2.0 * x)) - 1.0;
    case ActivationKind::relu: return std::max(0.0, x);
    case ActivationKind::selu: return kSeluScale * (x > 0.0 ? x : kSeluAlpha * std::expm1(x));
    }
    return x;
}

void activate_inplace(ActivationKind kind, Matrix& m) {
    m = m.unaryExpr([kind](double x) { return activate(kind, x); });
}

std::string_view arch_name(ArchKind kind) {
    switch (kind) {
    case ArchKind::rvfl: return "rvfl";
    case ArchKind::elm: return "elm";
    case ArchKind::drvfl: return "drvfl";
    case ArchKind::bls: return "bls";
    }
    return "unknown";
}

ArchKind parse_arch(std::string_view name) {
    if (name == "rvfl") return ArchKind::rvfl;
    if (name == "elm") return ArchKind::elm;
    if (name == "drvfl") return ArchKind::drvfl;
    if (name == "bls") return ArchKind::bls;
    throw std::invalid_argument("unknown architecture '" + std::string(name) + "'");
}

void validate(const ArchSpec& arch) {
    if (!(arch.lambda >= 0.0) || !std::isfinite(arch.lambda))
        throw std::invalid_argument("arch: lambda must be finite and >= 0");
    switch (arch.kind) {
    case ArchKind::rvfl:
    case ArchKind::elm:
        if (arch.h < 1) throw std::invalid_argument("arch: hidden width must be >= 1");
        break;
    case ArchKind::drvfl:
        if (arch.layer_widths.empty()) throw std::invalid_argument("arch: drvfl needs >= 1 layer");
        for (auto w : arch.layer_widths)
            if (w < 1) throw std::invalid_argument("arch: drvfl layer widths must be >= 1");
        break;
    case ArchKind::bls:
        if (arch.bls.q < 1 || arch.bls.p < 1 || arch.bls.s < 1 || arch.bls.r < 1)
            throw std::invalid_argument("arch: bls q, p, s, r must be >= 1");
        break;
    }
}

std::size_t feature_width(const ArchSpec& arch, std::size_t d) {
    switch (arch.kind) {
    case ArchKind::rvfl: return d + arch.h;
    case ArchKind::elm: return arch.h;
    case ArchKind::drvfl:
        return d + std::accumulate(arch.layer_widths.begin(), arch.layer_widths.end(),
                                   std::size_t{0});
    case ArchKind::bls: return arch.bls.p * arch.bls.q + arch.bls.r * arch.bls.s;
    }
    return 0;
}

std::vector<std::pair<std::size_t, std::size_t>> init_shapes(const ArchSpec& arch, std::size_t d) {
    std::vector<std::pair<std::size_t, std::size_t>> shapes;
    switch (arch.kind) {
    case ArchKind::rvfl:
    case ArchKind::elm: shapes.emplace_back(d, arch.h); break;
    case ArchKind::drvfl: {
        std::size_t prev = d;
        for (auto w : arch.layer_widths) {
            shapes.emplace_back(prev, w);
            prev = w;
        }
        break;
    }
    case ArchKind::bls:
        for (std::size_t i = 0; i < arch.bls.q; ++i) shapes.emplace_back(d, arch.bls.p);
        for (std::size_t j = 0; j < arch.bls.s; ++j)
            shapes.emplace_back(arch.bls.p * arch.bls.q, arch.bls.r);
        break;
    }
    return shapes;
}

Matrix build_features(const ArchSpec& arch, const Matrix& X, const std::vector<WeightInit>& inits) {
    const auto d = static_cast<std::size_t>(X.cols());
    const auto shapes = init_shapes(arch, d);
    if (inits.size() != shapes.size())
        throw std::invalid_argument("build_features: expected " + std::to_string(shapes.size()) +
                                    " weight inits, got " + std::to_string(inits.size()));
    for (std::size_t i = 0; i < shapes.size(); ++i)
        check_init(inits[i], shapes[i].first, shapes[i].second, i);

    const auto m = X.rows();
    Matrix A(m, static_cast<Eigen::Index>(feature_width(arch, d)));
    switch (arch.kind) {
    case ArchKind::rvfl:
        A << X, hidden(X, inits[0], arch.activation);
        break;
    case ArchKind::elm:
        A = hidden(X, inits[0], arch.activation);
        break;
    case ArchKind::drvfl: {
        A.leftCols(X.cols()) = X;
        Eigen::Index offset = X.cols();
        Matrix prev = X;
        for (const auto& init : inits) {
            Matrix H = hidden(prev, init, arch.activation);
            A.middleCols(offset, H.cols()) = H;
            offset += H.cols();
            prev = std::move(H);
        }
        break;
    }
    case ArchKind::bls: {
        const auto pq = static_cast<Eigen::Index>(arch.bls.p * arch.bls.q);
        Matrix Z(m, pq);
        Eigen::Index offset = 0;
        for (std::size_t i = 0; i < arch.bls.q; ++i) {
            Z.middleCols(offset, static_cast<Eigen::Index>(arch.bls.p)) =
                hidden(X, inits[i], arch.activation);
            offset += static_cast<Eigen::Index>(arch.bls.p);
        }
        A.leftCols(pq) = Z;
        offset = pq;
        for (std::size_t j = 0; j < arch.bls.s; ++j) {
            A.middleCols(offset, static_cast<Eigen::Index>(arch.bls.r)) =
                hidden(Z, inits[arch.bls.q + j], arch.enhancement_activation);
            offset += static_cast<Eigen::Index>(arch.bls.r);
        }
        break;
    }
    }
    return A;
}

RidgeSystem::RidgeSystem(const Matrix& A, const Matrix& Y) : dual_(A.cols() > A.rows()) {
    if (A.rows() != Y.rows())
        throw std::invalid_argument("ridge_solve: A and Y row counts differ");
    if (dual_) {
        gram_ = A * A.transpose();
        rhs_ = Y;
        a_transpose_ = A.transpose();
    } else {
        gram_ = A.transpose() * A;
        rhs_ = A.transpose() * Y;
    }
}

Matrix RidgeSystem::solve(double lambda) const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
        throw std::invalid_argument("ridge_solve: lambda must be finite and >= 0");
    Matrix G = gram_;
    G.diagonal().array() += lambda;
    Eigen::LLT<Matrix> llt(G);
    if (llt.info() != Eigen::Success)
        throw RankDeficientError("ridge_solve: Gram matrix is not positive definite at lambda = " +
                                 std::to_string(lambda));
    Matrix sol = llt.solve(rhs_);
    if (dual_) sol = a_transpose_ * sol;
    if (!sol.allFinite())
        throw RankDeficientError("ridge_solve: non-finite solution at lambda = " +
                                 std::to_string(lambda));
    return sol;
}

Matrix ridge_solve(const Matrix& A, const Matrix& Y, double lambda, RidgeForm form) {
    if (form == RidgeForm::automatic) return RidgeSystem(A, Y).solve(lambda);
    if (A.rows() != Y.rows())
        throw std::invalid_argument("ridge_solve: A and Y row counts differ");
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
        throw std::invalid_argument("ridge_solve: lambda must be finite and >= 0");
    const bool dual = form == RidgeForm::dual;
    Matrix G = dual ? Matrix(A * A.transpose()) : Matrix(A.transpose() * A);
    G.diagonal().array() += lambda;
    Eigen::LLT<Matrix> llt(G);
    if (llt.info() != Eigen::Success)
        throw RankDeficientError("ridge_solve: Gram matrix is not positive definite");
    return dual ? Matrix(A.transpose() * llt.solve(Y)) : Matrix(llt.solve(A.transpose() * Y));
}

TrainedModel train(const ArchSpec& arch, const Matrix& X_train, const Matrix& Y_onehot,
                   std::vector<WeightInit> inits, ScalerParams scaler) {
    validate(arch);
    TrainedModel model;
    model.arch = arch;
    model.d = static_cast<std::size_t>(X_train.cols());
    model.a = feature_width(arch, model.d);
    const Matrix A = build_features(arch, X_train, inits);
    model.theta = ridge_solve(A, Y_onehot, arch.lambda);
    model.inits = std::move(inits);
    model.scaler = std::move(scaler);
    return model;
}

Matrix predict_scores(const TrainedModel& model, const Matrix& X) {
    if (static_cast<std::size_t>(X.cols()) != model.d)
        throw std::invalid_argument("predict: expected " + std::to_string(model.d) +
                                    " feature columns, got " + std::to_string(X.cols()));
    const bool scale = model.scaler.means.size() > 0;
    const Matrix A = build_features(model.arch, scale ? apply_standardizer(model.scaler, X) : X,
                                    model.inits);
    return A * model.theta;
}

std::vector<int> argmax_rows(const Matrix& scores) {
    std::vector<int> out(static_cast<std::size_t>(scores.rows()), 0);
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
        Eigen::Index best = 0;
        for (Eigen::Index j = 1; j < scores.cols(); ++j)
            if (scores(i, j) > scores(i, best)) best = j;
        out[static_cast<std::size_t>(i)] = static_cast<int>(best);
    }
    return out;
}

std::vector<int> predict(const TrainedModel& model, const Matrix& X) {
    return argmax_rows(predict_scores(model, X));
}

double accuracy(const std::vector<int>& predicted, const std::vector<int>& truth) {
    if (predicted.size() != truth.size() || truth.empty())
        throw std::invalid_argument("accuracy: size mismatch or empty input");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) hits += predicted[i] == truth[i];
    return static_cast<double>(hits) / static_cast<double>(truth.size());
}

}  // namespace cawi

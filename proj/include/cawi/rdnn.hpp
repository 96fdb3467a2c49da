#pragma once

#include "cawi/dataset.hpp"
#include "cawi/init.hpp"

#include <optional>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace cawi {

enum class ActivationKind { sigmoid, sine, tribas, radbas, tansig, relu, selu };

std::string_view activation_name(ActivationKind kind);
/// Accepts names or the 1-based numeric codes 1..7 (sigmoid .. selu).
ActivationKind parse_activation(std::string_view name);

double activate(ActivationKind kind, double x);
void activate_inplace(ActivationKind kind, Matrix& m);

enum class ArchKind { rvfl, elm, drvfl, bls };

std::string_view arch_name(ArchKind kind);
ArchKind parse_arch(std::string_view name);

struct BlsShape {
    std::size_t q = 10;   // feature windows
    std::size_t p = 10;   // nodes per feature window
    std::size_t s = 1;    // enhancement windows
    std::size_t r = 100;  // nodes per enhancement window
};

struct ArchSpec {
    ArchKind kind = ArchKind::rvfl;
    std::size_t h = 103;                                  // rvfl / elm
    std::vector<std::size_t> layer_widths{103, 103, 103}; // drvfl
    BlsShape bls;
    ActivationKind activation = ActivationKind::sigmoid;         // phi
    ActivationKind enhancement_activation = ActivationKind::tansig;  // psi (bls)
    double lambda = 1.0;
};

void validate(const ArchSpec& arch);

/// Width of the readout input A for d input features.
std::size_t feature_width(const ArchSpec& arch, std::size_t d);

/// One (rows, cols) entry per random layer or window, in the order
/// build_features consumes them.
std::vector<std::pair<std::size_t, std::size_t>> init_shapes(const ArchSpec& arch, std::size_t d);

/// Readout input A for the architecture (see init_shapes for the layout of `inits`).
Matrix build_features(const ArchSpec& arch, const Matrix& X, const std::vector<WeightInit>& inits);

/// Raised when lambda = 0 and the Gram matrix is singular.
class RankDeficientError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class RidgeForm { automatic, primal, dual };

/// argmin ||A Theta - Y||^2 + lambda ||Theta||^2 via Cholesky of the primal
/// (a <= m) or dual Gram matrix.
Matrix ridge_solve(const Matrix& A, const Matrix& Y, double lambda,
                   RidgeForm form = RidgeForm::automatic);

/// Caches the Gram matrix so several lambdas can be solved for one A.
class RidgeSystem {
public:
    RidgeSystem(const Matrix& A, const Matrix& Y);
    Matrix solve(double lambda) const;
    bool dual() const { return dual_; }

private:
    bool dual_;
    Matrix a_transpose_;  // dual form only
    Matrix gram_;
    Matrix rhs_;
};

struct TrainedModel {
    ArchSpec arch;
    std::vector<WeightInit> inits;
    Matrix theta;         // a x n_class
    ScalerParams scaler;  // empty means inputs are used as given
    std::size_t d = 0;
    std::size_t a = 0;
};

/// X_train must already be standardized with `scaler`.
TrainedModel train(const ArchSpec& arch, const Matrix& X_train, const Matrix& Y_onehot,
                   std::vector<WeightInit> inits, ScalerParams scaler = {});

/// Score matrix for raw inputs (the stored scaler is applied first).
Matrix predict_scores(const TrainedModel& model, const Matrix& X);

/// Row-wise argmax; ties go to the lowest class index.
std::vector<int> argmax_rows(const Matrix& scores);

std::vector<int> predict(const TrainedModel& model, const Matrix& X);

double accuracy(const std::vector<int>& predicted, const std::vector<int>& truth);

}  // namespace cawi

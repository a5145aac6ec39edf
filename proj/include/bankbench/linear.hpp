#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include <nlohmann/json.hpp>

#include "bankbench/features.hpp"

namespace bankbench {

/// L2-regularised logistic regression over a fixed feature set.
struct LogisticModel {
    std::vector<double> weights;
    double bias = 0.0;
    double C = 1.0;  ///< inverse regularisation strength
};

/// Overflow-safe logistic function.
double sigmoid(double z);
/// log(1 + exp(z)) without overflow.
double softplus(double z);

/// sigma(w.x + b). Throws std::invalid_argument on a dimension mismatch.
double predict_proba(const LogisticModel& model, const SparseVector& x);

/// mean BCE + ||w||^2 / (2 C n); the bias is not penalised.
double logreg_loss(const LogisticModel& model, std::span<const SparseVector> xs, std::span<const int> ys);

struct LogregGradient {
    std::vector<double> weights;
    double bias = 0.0;
    double loss = 0.0;
};

/// Analytic gradient of logreg_loss (value included).
LogregGradient gradient(const LogisticModel& model, std::span<const SparseVector> xs, std::span<const int> ys);

struct LogregOptions {
    double C = 1.0;
    int max_iter = 1000;
    double tol = 1e-6;  ///< stop when the gradient's inf-norm drops below
};

struct LogregTrace {
    int iterations = 0;
    bool converged = false;
    std::vector<double> losses;  ///< loss after each accepted step, starting with the initial loss
};

/// Full-batch gradient descent from zero with a backtracking (Armijo) line
/// search; the trial step is the Barzilai-Borwein estimate from the last
/// accepted move. Throws std::invalid_argument for single-class data or
/// C <= 0, std::runtime_error (with the iteration) on a non-finite loss.
LogisticModel train_logreg(std::span<const SparseVector> xs, std::span<const int> ys, const LogregOptions& opts,
                           LogregTrace* trace = nullptr);

void to_json(nlohmann::json& j, const LogisticModel& m);
void from_json(const nlohmann::json& j, LogisticModel& m);

}  // namespace bankbench

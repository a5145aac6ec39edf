#include "bankbench/linear.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace bankbench {

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

namespace {

void check_dims(const LogisticModel& model, const SparseVector& x) {
    if (x.dim != model.weights.size()) {
        throw std::invalid_argument("dimension mismatch: model has " + std::to_string(model.weights.size()) +
                                    " weights, vector has dim " + std::to_string(x.dim));
    }
}

double logit(const LogisticModel& model, const SparseVector& x) { return x.dot(model.weights) + model.bias; }

double penalty_scale(double C, std::size_t n) {
    // 1 / (C n); C = inf switches the penalty off
    return std::isinf(C) ? 0.0 : 1.0 / (C * static_cast<double>(n));
}

double squared_norm(const std::vector<double>& w) {
    double s = 0.0;
    for (double v : w) s += v * v;
    return s;
}

void check_training_input(std::span<const SparseVector> xs, std::span<const int> ys) {
    if (xs.size() != ys.size()) throw std::invalid_argument("vectors/labels length mismatch");
    bool pos = false, neg = false;
    for (int y : ys) {
        if (y == 1) {
            pos = true;
        } else if (y == 0) {
            neg = true;
        } else {
            throw std::invalid_argument("labels must be 0/1");
        }
    }
    if (!pos || !neg) throw std::invalid_argument("logistic regression needs both classes");
}

}  // namespace

double predict_proba(const LogisticModel& model, const SparseVector& x) {
    check_dims(model, x);
    return sigmoid(logit(model, x));
}

double logreg_loss(const LogisticModel& model, std::span<const SparseVector> xs, std::span<const int> ys) {
    double total = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        check_dims(model, xs[i]);
        const double z = logit(model, xs[i]);
        total += softplus(z) - static_cast<double>(ys[i]) * z;
    }
    const auto n = static_cast<double>(xs.size());
    return total / n + 0.5 * penalty_scale(model.C, xs.size()) * squared_norm(model.weights);
}

LogregGradient gradient(const LogisticModel& model, std::span<const SparseVector> xs, std::span<const int> ys) {
    LogregGradient g;
    g.weights.assign(model.weights.size(), 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        check_dims(model, xs[i]);
        const double z = logit(model, xs[i]);
        total += softplus(z) - static_cast<double>(ys[i]) * z;
        const double r = sigmoid(z) - static_cast<double>(ys[i]);
        const auto& x = xs[i];
        for (std::size_t k = 0; k < x.indices.size(); ++k) g.weights[x.indices[k]] += r * x.values[k];
        g.bias += r;
    }
    const auto n = static_cast<double>(xs.size());
    const double lam = penalty_scale(model.C, xs.size());
    for (std::size_t j = 0; j < g.weights.size(); ++j) g.weights[j] = g.weights[j] / n + lam * model.weights[j];
    g.bias /= n;
    g.loss = total / n + 0.5 * lam * squared_norm(model.weights);
    return g;
}

LogisticModel train_logreg(std::span<const SparseVector> xs, std::span<const int> ys, const LogregOptions& opts,
                           LogregTrace* trace) {
    check_training_input(xs, ys);
    if (!(opts.C > 0.0)) throw std::invalid_argument("C must be positive");
    const std::size_t dim = xs.front().dim;

    LogisticModel model;
    model.weights.assign(dim, 0.0);
    model.C = opts.C;

    auto grad = gradient(model, xs, ys);
    LogregTrace local;
    LogregTrace& tr = trace ? *trace : local;
    tr = LogregTrace{};
    tr.losses.push_back(grad.loss);

    double step = 1.0;
    LogisticModel trial = model;
    for (int it = 0; it < opts.max_iter; ++it) {
        double inf_norm = std::abs(grad.bias);
        double g2 = grad.bias * grad.bias;
        for (double v : grad.weights) {
            inf_norm = std::max(inf_norm, std::abs(v));
            g2 += v * v;
        }
        if (inf_norm < opts.tol) {
            tr.converged = true;
            break;
        }

        double t = step;
        double trial_loss = 0.0;
        bool accepted = false;
        while (t > 1e-20) {
            for (std::size_t j = 0; j < dim; ++j) trial.weights[j] = model.weights[j] - t * grad.weights[j];
            trial.bias = model.bias - t * grad.bias;
            trial_loss = logreg_loss(trial, xs, ys);
            if (!std::isfinite(trial_loss)) {
                throw std::runtime_error("logistic regression: non-finite loss at iteration " + std::to_string(it));
            }
            if (trial_loss <= grad.loss - 1e-4 * t * g2) {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) break;  // no descent possible at machine precision

        auto next = gradient(trial, xs, ys);
        // Barzilai-Borwein step for the next trial
        double ss = 0.0, sy = 0.0;
        for (std::size_t j = 0; j < dim; ++j) {
            const double s = trial.weights[j] - model.weights[j];
            const double y = next.weights[j] - grad.weights[j];
            ss += s * s;
            sy += s * y;
        }
        {
            const double s = trial.bias - model.bias;
            const double y = next.bias - grad.bias;
            ss += s * s;
            sy += s * y;
        }
        step = sy > 0.0 ? ss / sy : 2.0 * t;
        model = trial;
        grad = std::move(next);
        tr.iterations = it + 1;
        tr.losses.push_back(grad.loss);
    }
    if (!tr.converged) {
        double inf_norm = std::abs(grad.bias);
        for (double v : grad.weights) inf_norm = std::max(inf_norm, std::abs(v));
        tr.converged = inf_norm < opts.tol;
    }
    return model;
}

void to_json(nlohmann::json& j, const LogisticModel& m) {
    j = nlohmann::json{{"weights", m.weights}, {"bias", m.bias}, {"C", std::isinf(m.C) ? 1e308 : m.C}};
}

void from_json(const nlohmann::json& j, LogisticModel& m) {
    j.at("weights").get_to(m.weights);
    j.at("bias").get_to(m.bias);
    j.at("C").get_to(m.C);
    if (m.C >= 1e308) m.C = std::numeric_limits<double>::infinity();
}

}  // namespace bankbench

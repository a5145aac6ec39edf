#include "bankbench/neural.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "bankbench/linear.hpp"
#include "bankbench/metrics.hpp"

namespace bankbench {

MlpModel::MlpModel(std::size_t input_dim, std::size_t hidden, double dropout)
    : input_dim_(input_dim), hidden_(hidden), dropout_(dropout), params_(hidden * (input_dim + 2) + 1, 0.0) {
    if (input_dim == 0 || hidden == 0) throw std::invalid_argument("MLP dimensions must be positive");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw std::invalid_argument("dropout must lie in [0, 1)");
}

MlpModel MlpModel::he_init(std::size_t input_dim, std::size_t hidden, double dropout, Rng& rng) {
    MlpModel m(input_dim, hidden, dropout);
    const double r1 = std::sqrt(6.0 / static_cast<double>(input_dim));
    const double r2 = std::sqrt(6.0 / static_cast<double>(hidden));
    auto& p = m.params_;
    const std::size_t w1 = hidden * input_dim;
    for (std::size_t i = 0; i < w1; ++i) p[i] = rng.uniform(-r1, r1);
    for (std::size_t i = 0; i < hidden; ++i) p[w1 + hidden + i] = rng.uniform(-r2, r2);
    return m;
}

bool MlpModel::is_weight(std::size_t i) const {
    const std::size_t w1 = hidden_ * input_dim_;
    return i < w1 || (i >= w1 + hidden_ && i < w1 + 2 * hidden_);
}

DropoutMask draw_mask(const MlpModel& model, Rng& rng) {
    const double p = model.dropout();
    DropoutMask mask(model.hidden());
    const double keep_scale = 1.0 / (1.0 - p);
    for (double& m : mask) m = rng.bernoulli(1.0 - p) ? keep_scale : 0.0;
    return mask;
}

namespace {

void check_input(const MlpModel& model, std::span<const double> x) {
    if (x.size() != model.input_dim()) {
        throw std::invalid_argument("MLP input has dim " + std::to_string(x.size()) + ", expected " +
                                    std::to_string(model.input_dim()));
    }
}

// Hidden pre-activations into `pre`, returns the output logit.
double run(const MlpModel& model, std::span<const double> x, const DropoutMask& mask, std::vector<double>& pre) {
    const std::size_t in = model.input_dim(), hid = model.hidden();
    const auto W1 = model.W1();
    const auto b1 = model.b1();
    const auto W2 = model.W2();
    pre.resize(hid);
    double z = model.b2();
    for (std::size_t j = 0; j < hid; ++j) {
        const double* row = W1.data() + j * in;
        double s = b1[j];
        for (std::size_t i = 0; i < in; ++i) s += row[i] * x[i];
        pre[j] = s;
        double a = s > 0.0 ? s : 0.0;
        if (!mask.empty()) a *= mask[j];
        z += W2[j] * a;
    }
    return z;
}

void check_batch(const MlpModel& model, const MlpBatch& batch, std::span<const DropoutMask> masks) {
    if (batch.xs.size() != batch.ys.size()) throw std::invalid_argument("MLP batch: xs/ys length mismatch");
    if (batch.xs.empty()) throw std::invalid_argument("MLP batch is empty");
    if (!masks.empty() && masks.size() != batch.xs.size()) throw std::invalid_argument("one mask per row expected");
    for (const auto& x : batch.xs) check_input(model, x);
}

double penalty(const MlpModel& model) {
    double s = 0.0;
    for (double w : model.W1()) s += w * w;
    for (double w : model.W2()) s += w * w;
    return s;
}

}  // namespace

double forward_logit_masked(const MlpModel& model, std::span<const double> x, const DropoutMask& mask) {
    check_input(model, x);
    if (!mask.empty() && mask.size() != model.hidden()) throw std::invalid_argument("mask size mismatch");
    std::vector<double> pre;
    return run(model, x, mask, pre);
}

double forward_logit(const MlpModel& model, std::span<const double> x, MlpMode mode, Rng* rng) {
    if (mode == MlpMode::train && model.dropout() > 0.0) {
        if (!rng) throw std::invalid_argument("train-mode dropout needs an rng");
        return forward_logit_masked(model, x, draw_mask(model, *rng));
    }
    return forward_logit_masked(model, x, {});
}

double forward(const MlpModel& model, std::span<const double> x, MlpMode mode, Rng* rng) {
    return sigmoid(forward_logit(model, x, mode, rng));
}

double mlp_loss(const MlpModel& model, const MlpBatch& batch, double lambda, std::span<const DropoutMask> masks) {
    check_batch(model, batch, masks);
    std::vector<double> pre;
    static const DropoutMask none;
    double total = 0.0;
    for (std::size_t r = 0; r < batch.xs.size(); ++r) {
        const double z = run(model, batch.xs[r], masks.empty() ? none : masks[r], pre);
        total += softplus(z) - static_cast<double>(batch.ys[r]) * z;
    }
    return total / static_cast<double>(batch.xs.size()) + 0.5 * lambda * penalty(model);
}

MlpGradient backward(const MlpModel& model, const MlpBatch& batch, double lambda, std::span<const DropoutMask> masks) {
    check_batch(model, batch, masks);
    const std::size_t in = model.input_dim(), hid = model.hidden();
    const std::size_t off_b1 = hid * in, off_w2 = off_b1 + hid, off_b2 = off_w2 + hid;
    const auto W2 = model.W2();
    const auto n = static_cast<double>(batch.xs.size());

    MlpGradient g;
    g.params.assign(model.n_params(), 0.0);
    std::vector<double> pre;
    static const DropoutMask none;
    double total = 0.0;
    for (std::size_t r = 0; r < batch.xs.size(); ++r) {
        const auto& mask = masks.empty() ? none : masks[r];
        const auto x = batch.xs[r];
        const double z = run(model, x, mask, pre);
        const double y = static_cast<double>(batch.ys[r]);
        total += softplus(z) - y * z;
        const double dz = (sigmoid(z) - y) / n;
        g.params[off_b2] += dz;
        for (std::size_t j = 0; j < hid; ++j) {
            if (pre[j] <= 0.0) continue;
            const double scale = mask.empty() ? 1.0 : mask[j];
            if (scale == 0.0) continue;
            g.params[off_w2 + j] += dz * pre[j] * scale;
            const double dh = dz * W2[j] * scale;
            g.params[off_b1 + j] += dh;
            double* row = g.params.data() + j * in;
            for (std::size_t i = 0; i < in; ++i) row[i] += dh * x[i];
        }
    }
    if (lambda != 0.0) {
        const auto p = model.params();
        for (std::size_t i = 0; i < off_b1; ++i) g.params[i] += lambda * p[i];
        for (std::size_t j = 0; j < hid; ++j) g.params[off_w2 + j] += lambda * p[off_w2 + j];
    }
    g.loss = total / n + 0.5 * lambda * penalty(model);
    return g;
}

AdamState AdamState::for_model(const MlpModel& model, double lr, double weight_decay) {
    AdamState s;
    s.m.assign(model.n_params(), 0.0);
    s.v.assign(model.n_params(), 0.0);
    s.lr = lr;
    s.weight_decay = weight_decay;
    return s;
}

void adam_step(AdamState& state, MlpModel& model, std::span<const double> grads) {
    const std::size_t n = model.n_params();
    if (grads.size() != n || state.m.size() != n || state.v.size() != n) {
        throw std::invalid_argument("adam_step: shape mismatch");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(grads[i])) {
            throw std::invalid_argument("adam_step: non-finite gradient at parameter " + std::to_string(i));
        }
    }
    ++state.step;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    auto p = model.params();
    for (std::size_t i = 0; i < n; ++i) {
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grads[i];
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grads[i] * grads[i];
        const double m_hat = state.m[i] / bc1;
        const double v_hat = state.v[i] / bc2;
        p[i] -= state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
}

void to_json(nlohmann::json& j, const MlpHyperparams& h) {
    j = nlohmann::json{{"lr", h.lr},
                       {"weight_decay", h.weight_decay},
                       {"hidden", h.hidden},
                       {"dropout", h.dropout},
                       {"batch_size", h.batch_size},
                       {"max_epochs", h.max_epochs},
                       {"patience", h.patience}};
}

void from_json(const nlohmann::json& j, MlpHyperparams& h) {
    h = MlpHyperparams{};
    if (j.contains("lr")) j.at("lr").get_to(h.lr);
    if (j.contains("weight_decay")) j.at("weight_decay").get_to(h.weight_decay);
    if (j.contains("hidden")) j.at("hidden").get_to(h.hidden);
    if (j.contains("dropout")) j.at("dropout").get_to(h.dropout);
    if (j.contains("batch_size")) j.at("batch_size").get_to(h.batch_size);
    if (j.contains("max_epochs")) j.at("max_epochs").get_to(h.max_epochs);
    if (j.contains("patience")) j.at("patience").get_to(h.patience);
}

bool operator==(const MlpEpoch& a, const MlpEpoch& b) {
    auto same = [](double x, double y) { return x == y || (std::isnan(x) && std::isnan(y)); };
    return a.epoch == b.epoch && same(a.train_loss, b.train_loss) && same(a.val_auc, b.val_auc);
}

std::vector<double> predict_mlp(const MlpModel& model, std::span<const std::vector<double>> xs) {
    std::vector<double> out;
    out.reserve(xs.size());
    for (const auto& x : xs) out.push_back(forward(model, x, MlpMode::eval));
    return out;
}

MlpResult train_mlp(std::span<const std::vector<double>> train_x, std::span<const int> train_y,
                    std::span<const std::vector<double>> val_x, std::span<const int> val_y, const MlpHyperparams& hp,
                    std::uint64_t seed) {
    if (train_x.empty()) throw std::invalid_argument("train_mlp: empty training set");
    if (train_x.size() != train_y.size() || val_x.size() != val_y.size()) {
        throw std::invalid_argument("train_mlp: xs/ys length mismatch");
    }
    if (hp.batch_size == 0 || hp.max_epochs < 0 || hp.patience < 1 || hp.lr < 0.0 || hp.weight_decay < 0.0) {
        throw std::invalid_argument("train_mlp: invalid hyperparameters");
    }
    Rng rng(seed);
    MlpResult result;
    result.model = MlpModel::he_init(train_x.front().size(), hp.hidden, hp.dropout, rng);
    MlpModel& model = result.model;
    AdamState adam = AdamState::for_model(model, hp.lr, hp.weight_decay);

    const bool use_val = !val_y.empty() && std::count(val_y.begin(), val_y.end(), 1) > 0 &&
                         std::count(val_y.begin(), val_y.end(), 0) > 0;
    RankedPredictions val_preds;
    val_preds.labels.assign(val_y.begin(), val_y.end());

    MlpModel best = model;
    result.log.best_val_auc = -1.0;
    int since_best = 0;

    std::vector<std::size_t> order(train_x.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<DropoutMask> masks;
    MlpBatch batch;
    for (int epoch = 1; epoch <= hp.max_epochs; ++epoch) {
        rng.shuffle(order);
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += hp.batch_size) {
            const std::size_t end = std::min(order.size(), start + hp.batch_size);
            batch.xs.clear();
            batch.ys.clear();
            masks.clear();
            for (std::size_t r = start; r < end; ++r) {
                batch.xs.emplace_back(train_x[order[r]]);
                batch.ys.push_back(train_y[order[r]]);
                if (model.dropout() > 0.0) masks.push_back(draw_mask(model, rng));
            }
            const auto g = backward(model, batch, adam.weight_decay, masks);
            if (!std::isfinite(g.loss)) {
                throw std::runtime_error("train_mlp: non-finite loss in epoch " + std::to_string(epoch));
            }
            adam_step(adam, model, g.params);
            loss_sum += g.loss * static_cast<double>(end - start);
        }
        MlpEpoch rec;
        rec.epoch = epoch;
        rec.train_loss = loss_sum / static_cast<double>(order.size());
        rec.val_auc = std::nan("");
        if (use_val) {
            val_preds.scores = predict_mlp(model, val_x);
            rec.val_auc = roc_auc(val_preds);
        }
        result.log.epochs.push_back(rec);
        if (!use_val) {
            result.log.best_epoch = epoch;
            continue;
        }
        if (rec.val_auc > result.log.best_val_auc) {
            result.log.best_val_auc = rec.val_auc;
            result.log.best_epoch = epoch;
            best = model;
            since_best = 0;
        } else if (++since_best >= hp.patience) {
            result.log.early_stopped = true;
            break;
        }
    }
    if (use_val) {
        model = best;
    } else {
        result.log.best_val_auc = std::nan("");
    }
    return result;
}

nlohmann::ordered_json mlp_to_json(const MlpModel& model) {
    nlohmann::ordered_json j;
    j["input_dim"] = model.input_dim();
    j["hidden"] = model.hidden();
    j["dropout"] = model.dropout();
    j["params"] = std::vector<double>(model.params().begin(), model.params().end());
    return j;
}

MlpModel mlp_from_json(const nlohmann::json& j) {
    MlpModel m(j.at("input_dim").get<std::size_t>(), j.at("hidden").get<std::size_t>(), j.at("dropout").get<double>());
    const auto params = j.at("params").get<std::vector<double>>();
    if (params.size() != m.n_params()) throw std::runtime_error("mlp.json: parameter count does not match architecture");
    std::copy(params.begin(), params.end(), m.params().begin());
    return m;
}

}  // namespace bankbench

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "bankbench/rng.hpp"

namespace bankbench {

enum class MlpMode { train, eval };

/// input -> ReLU hidden layer (dropout) -> sigmoid output. All parameters
/// live in one flat vector: W1 (hidden x input, row-major), b1, W2, b2.
class MlpModel {
public:
    MlpModel() = default;
    MlpModel(std::size_t input_dim, std::size_t hidden, double dropout);

    /// He-style uniform(+-sqrt(6 / fan_in)) weights, zero biases.
    static MlpModel he_init(std::size_t input_dim, std::size_t hidden, double dropout, Rng& rng);

    [[nodiscard]] std::size_t input_dim() const { return input_dim_; }
    [[nodiscard]] std::size_t hidden() const { return hidden_; }
    [[nodiscard]] double dropout() const { return dropout_; }
    [[nodiscard]] std::size_t n_params() const { return params_.size(); }

    std::span<double> params() { return params_; }
    [[nodiscard]] std::span<const double> params() const { return params_; }

    [[nodiscard]] std::span<const double> W1() const { return {params_.data(), hidden_ * input_dim_}; }
    [[nodiscard]] std::span<const double> b1() const { return {params_.data() + hidden_ * input_dim_, hidden_}; }
    [[nodiscard]] std::span<const double> W2() const { return {params_.data() + hidden_ * (input_dim_ + 1), hidden_}; }
    [[nodiscard]] double b2() const { return params_.back(); }

    /// True for entries of W1 and W2 (the penalised part).
    [[nodiscard]] bool is_weight(std::size_t param_index) const;

    friend bool operator==(const MlpModel&, const MlpModel&) = default;

private:
    std::size_t input_dim_ = 0;
    std::size_t hidden_ = 0;
    double dropout_ = 0.0;
    std::vector<double> params_;
};

/// Per-unit dropout multipliers for one sample: 0 or 1/(1-p). Empty = no dropout.
using DropoutMask = std::vector<double>;

/// Draws an inverted-dropout mask for the model's hidden layer.
DropoutMask draw_mask(const MlpModel& model, Rng& rng);

/// Pre-sigmoid output. In train mode with p > 0 `rng` is required and a mask
/// is drawn; eval mode is deterministic. Throws on a dimension mismatch.
double forward_logit(const MlpModel& model, std::span<const double> x, MlpMode mode, Rng* rng = nullptr);
double forward(const MlpModel& model, std::span<const double> x, MlpMode mode, Rng* rng = nullptr);

/// Same as forward_logit with an explicit mask (empty = none).
double forward_logit_masked(const MlpModel& model, std::span<const double> x, const DropoutMask& mask);

/// A batch as row views; labels are 0/1.
struct MlpBatch {
    std::vector<std::span<const double>> xs;
    std::vector<int> ys;
};

/// mean BCE + (lambda/2)(|W1|^2 + |W2|^2). masks empty or one per row.
double mlp_loss(const MlpModel& model, const MlpBatch& batch, double lambda, std::span<const DropoutMask> masks = {});

struct MlpGradient {
    std::vector<double> params;  ///< same layout as MlpModel::params
    double loss = 0.0;
};

/// Exact gradient of mlp_loss under the given masks.
MlpGradient backward(const MlpModel& model, const MlpBatch& batch, double lambda,
                     std::span<const DropoutMask> masks = {});

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    std::uint64_t step = 0;
    double lr = 1e-3;
    double weight_decay = 0.0;  ///< lambda handed to backward (coupled L2)
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    static AdamState for_model(const MlpModel& model, double lr, double weight_decay);
};

/// Bias-corrected Adam update in place. Throws std::invalid_argument on a
/// non-finite gradient or a shape mismatch; the model is left untouched then.
void adam_step(AdamState& state, MlpModel& model, std::span<const double> grads);

struct MlpHyperparams {
    double lr = 1e-3;
    double weight_decay = 1e-4;
    std::size_t hidden = 32;
    double dropout = 0.2;
    std::size_t batch_size = 64;
    int max_epochs = 200;
    int patience = 10;
};

void to_json(nlohmann::json& j, const MlpHyperparams& h);
void from_json(const nlohmann::json& j, MlpHyperparams& h);

struct MlpEpoch {
    int epoch = 0;  ///< 1-based
    double train_loss = 0.0;
    double val_auc = 0.0;  ///< NaN without a usable validation set

    friend bool operator==(const MlpEpoch& a, const MlpEpoch& b);
};

struct MlpTrainingLog {
    std::vector<MlpEpoch> epochs;
    int best_epoch = 0;
    double best_val_auc = 0.0;
    bool early_stopped = false;

    friend bool operator==(const MlpTrainingLog&, const MlpTrainingLog&) = default;
};

struct MlpResult {
    MlpModel model;
    MlpTrainingLog log;
};

/// Mini-batch Adam with per-epoch seeded shuffling. With a validation set
/// holding both classes the checkpoint with the best validation AUC is
/// returned and training stops after `patience` epochs without improvement;
/// otherwise exactly `max_epochs` epochs run and the last state is returned.
/// Throws std::invalid_argument on an empty training set.
MlpResult train_mlp(std::span<const std::vector<double>> train_x, std::span<const int> train_y,
                    std::span<const std::vector<double>> val_x, std::span<const int> val_y, const MlpHyperparams& hp,
                    std::uint64_t seed);

std::vector<double> predict_mlp(const MlpModel& model, std::span<const std::vector<double>> xs);

nlohmann::ordered_json mlp_to_json(const MlpModel& model);
MlpModel mlp_from_json(const nlohmann::json& j);

}  // namespace bankbench

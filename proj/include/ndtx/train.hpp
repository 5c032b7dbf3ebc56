#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ndtx/dataset.hpp"
#include "ndtx/error.hpp"
#include "ndtx/rng.hpp"

namespace ndtx {

/// Parameters of a network as a list of dense blocks (biases are n x 1).
using ParamBlocks = std::vector<Eigen::MatrixXd>;

struct LossGradient {
    double loss = 0.0;
    ParamBlocks gradients;
};

struct AdamConfig {
    double step_size = 0.001;
    double decay1 = 0.9;
    double decay2 = 0.999;
    double epsilon = 1e-8;
};

struct TrainConfig {
    int epochs = 100;
    int batch_size = 32;
    AdamConfig adam;
    int patience = 10;
    // Improvement means validation loss < best - min_delta.
    double min_delta = 0.0;
    bool shuffle = true;

    void validate() const;
};

struct TrainHistory {
    std::vector<double> train_loss;
    std::vector<double> valid_loss;
    int stopped_epoch = 0;  // 1-based, last epoch run
    int best_epoch = 0;     // 1-based
    double best_valid_loss = 0.0;
};

/// Ties between class scores closer than this resolve to the lower class id. Keeps
/// network predictions aligned with tree predictions when leaf distributions tie and
/// rounding perturbs the logits by a few ulps.
inline constexpr double kArgmaxTieTolerance = 1e-12;

Label argmax_column(const Eigen::Ref<const Eigen::VectorXd>& scores);

/// Column-stacked features (n_features x rows) for a view.
Eigen::MatrixXd design_matrix(const DatasetView& rows);
std::vector<Label> view_labels(const DatasetView& rows);

/// Numerically stable column softmax.
Eigen::MatrixXd softmax_columns(const Eigen::MatrixXd& logits);

/// Mean cross-entropy of column softmax; fills dlogits = (P - Y) / batch.
double softmax_cross_entropy(const Eigen::MatrixXd& logits, std::span<const Label> y,
                             Eigen::MatrixXd* probs, Eigen::MatrixXd* dlogits);

class Adam {
public:
    Adam(const AdamConfig& cfg, const ParamBlocks& shape_like);
    void step(ParamBlocks& params, const ParamBlocks& grads);

private:
    AdamConfig cfg_;
    ParamBlocks m_, v_;
    long t_ = 0;
};

/// Shared mini-batch loop. `Model` provides blocks(), set_blocks(ParamBlocks) and is
/// accepted by `loss_fn(model, X, y) -> LossGradient`.
template <class Model, class LossFn>
TrainHistory fit_minibatch(Model& model, LossFn&& loss_fn, const DatasetView& train_rows,
                           const DatasetView& valid_rows, const TrainConfig& cfg, Rng& rng) {
    cfg.validate();
    if (train_rows.size() == 0 || valid_rows.size() == 0)
        throw DataError("training and validation views must be non-empty");

    const Eigen::MatrixXd x_train = design_matrix(train_rows);
    const std::vector<Label> y_train = view_labels(train_rows);
    const Eigen::MatrixXd x_valid = design_matrix(valid_rows);
    const std::vector<Label> y_valid = view_labels(valid_rows);

    ParamBlocks params = model.blocks();
    ParamBlocks best = params;
    Adam adam(cfg.adam, params);

    TrainHistory hist;
    hist.best_valid_loss = std::numeric_limits<double>::infinity();
    std::vector<Eigen::Index> order(train_rows.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<Eigen::Index>(i);

    const auto n = static_cast<Eigen::Index>(order.size());
    const auto batch = static_cast<Eigen::Index>(cfg.batch_size);
    Eigen::MatrixXd xb;
    std::vector<Label> yb;
    int wait = 0;
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        if (cfg.shuffle) std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        for (Eigen::Index start = 0; start < n; start += batch) {
            const Eigen::Index len = std::min(batch, n - start);
            xb.resize(x_train.rows(), len);
            yb.resize(static_cast<std::size_t>(len));
            for (Eigen::Index j = 0; j < len; ++j) {
                xb.col(j) = x_train.col(order[start + j]);
                yb[j] = y_train[order[start + j]];
            }
            LossGradient lg = loss_fn(model, xb, yb);
            if (!std::isfinite(lg.loss))
                throw NumericError("non-finite training loss at epoch " + std::to_string(epoch));
            loss_sum += lg.loss * static_cast<double>(len);
            adam.step(params, lg.gradients);
            model.set_blocks(params);
        }
        hist.train_loss.push_back(loss_sum / static_cast<double>(n));

        const double valid = loss_fn(model, x_valid, y_valid).loss;
        if (!std::isfinite(valid))
            throw NumericError("non-finite validation loss at epoch " + std::to_string(epoch));
        hist.valid_loss.push_back(valid);
        hist.stopped_epoch = epoch;
        if (valid < hist.best_valid_loss - cfg.min_delta) {
            hist.best_valid_loss = valid;
            hist.best_epoch = epoch;
            best = params;
            wait = 0;
        } else if (++wait >= cfg.patience) {
            break;
        }
    }
    model.set_blocks(best);
    return hist;
}

}  // namespace ndtx

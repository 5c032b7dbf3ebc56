#include "ndtx/train.hpp"

#include <algorithm>

namespace ndtx {

void TrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("batch size must be >= 1");
    if (patience < 1) throw ConfigError("patience must be >= 1");
    if (!(adam.step_size > 0.0)) throw ConfigError("Adam step size must be positive");
    if (!(adam.decay1 >= 0.0 && adam.decay1 < 1.0) || !(adam.decay2 >= 0.0 && adam.decay2 < 1.0))
        throw ConfigError("Adam decay rates must lie in [0, 1)");
    if (!(adam.epsilon > 0.0)) throw ConfigError("Adam epsilon must be positive");
    if (!(min_delta >= 0.0)) throw ConfigError("min_delta must be non-negative");
}

Label argmax_column(const Eigen::Ref<const Eigen::VectorXd>& scores) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < scores.size(); ++c) {
        const double margin = kArgmaxTieTolerance * std::max(1.0, std::abs(scores[best]));
        if (scores[c] > scores[best] + margin) best = c;
    }
    return static_cast<Label>(best);
}

Eigen::MatrixXd design_matrix(const DatasetView& rows) {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.n_features()), static_cast<Eigen::Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const auto r = rows.row(k);
        for (std::size_t f = 0; f < r.size(); ++f) x(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(k)) = r[f];
    }
    return x;
}

std::vector<Label> view_labels(const DatasetView& rows) {
    std::vector<Label> y(rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k) y[k] = rows.label(k);
    return y;
}

Eigen::MatrixXd softmax_columns(const Eigen::MatrixXd& logits) {
    Eigen::MatrixXd p(logits.rows(), logits.cols());
    for (Eigen::Index j = 0; j < logits.cols(); ++j) {
        const double mx = logits.col(j).maxCoeff();
        p.col(j) = (logits.col(j).array() - mx).exp();
        p.col(j) /= p.col(j).sum();
    }
    return p;
}

double softmax_cross_entropy(const Eigen::MatrixXd& logits, std::span<const Label> y, Eigen::MatrixXd* probs,
                             Eigen::MatrixXd* dlogits) {
    const Eigen::Index batch = logits.cols();
    if (batch == 0) throw DataError("empty batch");
    if (static_cast<std::size_t>(batch) != y.size()) throw DataError("label count does not match batch");
    double loss = 0.0;
    Eigen::MatrixXd p(logits.rows(), batch);
    for (Eigen::Index j = 0; j < batch; ++j) {
        const Label label = y[static_cast<std::size_t>(j)];
        if (label < 0 || label >= logits.rows()) throw DataError("label out of range for output layer");
        const double mx = logits.col(j).maxCoeff();
        const Eigen::VectorXd shifted = logits.col(j).array() - mx;
        const double log_z = std::log(shifted.array().exp().sum());
        loss += log_z - shifted[label];
        p.col(j) = (shifted.array() - log_z).exp();
    }
    if (dlogits) {
        *dlogits = p;
        for (Eigen::Index j = 0; j < batch; ++j) (*dlogits)(y[static_cast<std::size_t>(j)], j) -= 1.0;
        *dlogits /= static_cast<double>(batch);
    }
    if (probs) *probs = std::move(p);
    return loss / static_cast<double>(batch);
}

Adam::Adam(const AdamConfig& cfg, const ParamBlocks& shape_like) : cfg_(cfg) {
    for (const auto& b : shape_like) {
        m_.push_back(Eigen::MatrixXd::Zero(b.rows(), b.cols()));
        v_.push_back(Eigen::MatrixXd::Zero(b.rows(), b.cols()));
    }
}

void Adam::step(ParamBlocks& params, const ParamBlocks& grads) {
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.decay1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.decay2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        m_[i] = cfg_.decay1 * m_[i] + (1.0 - cfg_.decay1) * grads[i];
        v_[i] = cfg_.decay2 * v_[i] + (1.0 - cfg_.decay2) * grads[i].cwiseProduct(grads[i]);
        params[i].array() -=
            cfg_.step_size * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + cfg_.epsilon);
    }
}

}  // namespace ndtx

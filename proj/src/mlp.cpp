#include "ndtx/mlp.hpp"

#include <cmath>

namespace ndtx {

const char* activation_name(Activation a) { return a == Activation::tanh ? "tanh" : "relu"; }

Mlp::Mlp(std::size_t n_features, int class_count, const MlpArchitecture& arch, Rng& rng)
    : arch_(arch), n_features_(n_features), class_count_(class_count) {
    if (arch.depth < 1 || arch.width < 1) throw ConfigError("MLP depth and width must be >= 1");
    if (n_features < 1 || class_count < 2) throw ConfigError("MLP needs >= 1 input and >= 2 classes");
    std::vector<Eigen::Index> sizes{static_cast<Eigen::Index>(n_features)};
    for (int i = 0; i < arch.depth; ++i) sizes.push_back(arch.width);
    sizes.push_back(class_count);
    for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
        const double limit = std::sqrt(6.0 / static_cast<double>(sizes[i] + sizes[i + 1]));
        std::uniform_real_distribution<double> unif(-limit, limit);
        Eigen::MatrixXd w(sizes[i + 1], sizes[i]);
        for (Eigen::Index r = 0; r < w.rows(); ++r)
            for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = unif(rng);
        blocks_.push_back(std::move(w));
        blocks_.push_back(Eigen::MatrixXd::Zero(sizes[i + 1], 1));
    }
}

void Mlp::set_blocks(const ParamBlocks& blocks) {
    if (blocks.size() != blocks_.size()) throw DataError("MLP block count mismatch");
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        if (blocks[i].rows() != blocks_[i].rows() || blocks[i].cols() != blocks_[i].cols())
            throw DataError("MLP block shape mismatch");
    }
    blocks_ = blocks;
}

namespace {

Eigen::MatrixXd activate(const Eigen::MatrixXd& z, Activation a) {
    if (a == Activation::tanh) return z.unaryExpr([](double v) { return std::tanh(v); });
    return z.cwiseMax(0.0);
}

// Derivative expressed through the activation output.
Eigen::ArrayXXd activation_slope(const Eigen::MatrixXd& h, Activation a) {
    if (a == Activation::tanh) return 1.0 - h.array().square();
    return (h.array() > 0.0).cast<double>();
}

}  // namespace

Eigen::MatrixXd Mlp::logits(const Eigen::MatrixXd& x) const {
    if (static_cast<std::size_t>(x.rows()) != n_features_) throw DataError("MLP input dimension mismatch");
    Eigen::MatrixXd h = x;
    const std::size_t layers = blocks_.size() / 2;
    for (std::size_t i = 0; i < layers; ++i) {
        Eigen::MatrixXd z = (blocks_[2 * i] * h).colwise() + blocks_[2 * i + 1].col(0);
        h = i + 1 < layers ? activate(z, arch_.activation) : std::move(z);
    }
    return h;
}

Eigen::MatrixXd Mlp::predict_proba(const Eigen::MatrixXd& x) const { return softmax_columns(logits(x)); }

std::vector<Label> Mlp::predict(const Eigen::MatrixXd& x) const {
    const Eigen::MatrixXd o = logits(x);
    std::vector<Label> out(static_cast<std::size_t>(o.cols()));
    for (Eigen::Index j = 0; j < o.cols(); ++j) out[j] = argmax_column(o.col(j));
    return out;
}

LossGradient Mlp::loss_and_gradients(const Eigen::MatrixXd& x, std::span<const Label> y) const {
    if (static_cast<std::size_t>(x.rows()) != n_features_) throw DataError("MLP input dimension mismatch");
    const std::size_t layers = blocks_.size() / 2;
    std::vector<Eigen::MatrixXd> acts{x};
    for (std::size_t i = 0; i < layers; ++i) {
        Eigen::MatrixXd z = (blocks_[2 * i] * acts.back()).colwise() + blocks_[2 * i + 1].col(0);
        acts.push_back(i + 1 < layers ? activate(z, arch_.activation) : std::move(z));
    }
    LossGradient out;
    Eigen::MatrixXd delta;
    out.loss = softmax_cross_entropy(acts.back(), y, nullptr, &delta);
    out.gradients.resize(blocks_.size());
    for (std::size_t i = layers; i-- > 0;) {
        out.gradients[2 * i] = delta * acts[i].transpose();
        out.gradients[2 * i + 1] = delta.rowwise().sum();
        if (i > 0) {
            delta = ((blocks_[2 * i].transpose() * delta).array() * activation_slope(acts[i], arch_.activation))
                        .matrix();
        }
    }
    return out;
}

TrainHistory train(Mlp& net, const DatasetView& train_rows, const DatasetView& valid_rows,
                   const TrainConfig& cfg, Rng& rng) {
    auto loss_fn = [](const Mlp& m, const Eigen::MatrixXd& x, std::span<const Label> y) {
        return m.loss_and_gradients(x, y);
    };
    return fit_minibatch(net, loss_fn, train_rows, valid_rows, cfg, rng);
}

}  // namespace ndtx

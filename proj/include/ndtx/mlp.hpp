#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ndtx/train.hpp"

namespace ndtx {

enum class Activation { tanh, relu };

const char* activation_name(Activation a);

struct MlpArchitecture {
    int depth = 1;  // hidden layers
    int width = 2;  // units per hidden layer
    Activation activation = Activation::tanh;

    bool operator==(const MlpArchitecture&) const = default;
};

/// Fully connected classifier with `depth` equal-width hidden layers and a softmax
/// output, initialized Glorot-uniform.
class Mlp {
public:
    Mlp(std::size_t n_features, int class_count, const MlpArchitecture& arch, Rng& rng);

    const MlpArchitecture& architecture() const noexcept { return arch_; }
    std::size_t n_features() const noexcept { return n_features_; }
    int class_count() const noexcept { return class_count_; }

    /// W_0, b_0, W_1, b_1, ..., output layer last.
    ParamBlocks blocks() const { return blocks_; }
    void set_blocks(const ParamBlocks& blocks);

    Eigen::MatrixXd logits(const Eigen::MatrixXd& x) const;
    Eigen::MatrixXd predict_proba(const Eigen::MatrixXd& x) const;
    std::vector<Label> predict(const Eigen::MatrixXd& x) const;
    LossGradient loss_and_gradients(const Eigen::MatrixXd& x, std::span<const Label> y) const;

private:
    MlpArchitecture arch_;
    std::size_t n_features_;
    int class_count_;
    ParamBlocks blocks_;
};

TrainHistory train(Mlp& net, const DatasetView& train_rows, const DatasetView& valid_rows,
                   const TrainConfig& cfg, Rng& rng);

}  // namespace ndtx

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ndtx/dataset.hpp"
#include "ndtx/train.hpp"
#include "ndtx/tree.hpp"

namespace ndtx {

/// Root exponent linking the two smoothness constants: gamma2 = gamma1^(1/q).
inline constexpr double kGammaRootExponent = 1.1;

/// gamma1^(1/1.1). Throws ConfigError for gamma1 <= 0.
double gamma2_of(double gamma1);

struct NdtProvenance {
    std::string tree_hash;
    double gamma = 0.0;
    std::uint64_t seed = 0;
};

/// Tree-shaped network with two tanh(gamma * z) hidden layers:
///   h1 = tanh(gamma1 (W1 x + b1))     split layer, K-1 units
///   h2 = tanh(gamma2 (W2 h1 + b2))    leaf layer,  K units
///   o  = W3 h2 + b3                   class logits, C units
/// Inputs and activations are column vectors; batches are one sample per column.
class NdtModel {
public:
    static constexpr std::size_t kBlockCount = 6;

    NdtModel() = default;
    NdtModel(Eigen::MatrixXd w1, Eigen::VectorXd b1, Eigen::MatrixXd w2, Eigen::VectorXd b2,
             Eigen::MatrixXd w3, Eigen::VectorXd b3, double gamma1, double gamma2);

    std::size_t n_features() const { return static_cast<std::size_t>(w1_.cols()); }
    std::size_t split_units() const { return static_cast<std::size_t>(w1_.rows()); }
    std::size_t leaf_units() const { return static_cast<std::size_t>(w2_.rows()); }
    int class_count() const { return static_cast<int>(w3_.rows()); }
    double gamma1() const noexcept { return gamma1_; }
    double gamma2() const noexcept { return gamma2_; }

    const Eigen::MatrixXd& w1() const { return w1_; }
    const Eigen::VectorXd& b1() const { return b1_; }
    const Eigen::MatrixXd& w2() const { return w2_; }
    const Eigen::VectorXd& b2() const { return b2_; }
    const Eigen::MatrixXd& w3() const { return w3_; }
    const Eigen::VectorXd& b3() const { return b3_; }

    /// Trainable blocks in the fixed order W1, b1, W2, b2, W3, b3. Gammas are not among them.
    ParamBlocks blocks() const;
    void set_blocks(const ParamBlocks& blocks);
    static const char* block_name(std::size_t i);

    NdtProvenance provenance;

private:
    Eigen::MatrixXd w1_, w2_, w3_;
    Eigen::VectorXd b1_, b2_, b3_;
    double gamma1_ = 1.0;
    double gamma2_ = 1.0;
};

/// Weights copied from the tree: W1[k, f_k] = 1, b1[k] = -t_k; W2 = path matrix,
/// b2[l] = -(len(l) - 1); W3[c, l] = p(c|l)/2, b3[c] = sum_l p(c|l)/2.
/// With crisp +-1 activations the logits equal the reached leaf's class distribution.
NdtModel compile_from_tree(const DecisionTree& t, double gamma1, double gamma2);

struct NdtActivations {
    Eigen::MatrixXd z1, h1, z2, h2, logits, probs;
};

/// X is n_features x batch. Rejects dimension mismatches and non-finite inputs.
NdtActivations forward(const NdtModel& m, const Eigen::MatrixXd& x);

/// Mean categorical cross-entropy of softmax(logits); gradients in block order.
LossGradient loss_and_gradients(const NdtModel& m, const Eigen::MatrixXd& x, std::span<const Label> y);

/// Class per column of X; ties within kArgmaxTieTolerance resolve to the lower class id.
std::vector<Label> predict(const NdtModel& m, const Eigen::MatrixXd& x);

/// Mini-batch Adam with early stopping; the model ends on its best-validation parameters.
TrainHistory train(NdtModel& m, const DatasetView& train_rows, const DatasetView& valid_rows,
                   const TrainConfig& cfg, Rng& rng);

/// JSON with row-major matrices, gammas and provenance.
std::string model_to_json(const NdtModel& m);
NdtModel model_from_json(const std::string& text);

}  // namespace ndtx

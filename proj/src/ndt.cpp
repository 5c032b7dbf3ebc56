#include "ndtx/ndt.hpp"

#include <cmath>

#include <json.hpp>

#include "ndtx/error.hpp"

namespace ndtx {

using nlohmann::json;

double gamma2_of(double gamma1) {
    if (!(gamma1 > 0.0) || !std::isfinite(gamma1)) throw ConfigError("gamma must be a positive real");
    return std::pow(gamma1, 1.0 / kGammaRootExponent);
}

namespace {

bool all_finite(const Eigen::MatrixXd& m) { return m.allFinite(); }

Eigen::MatrixXd tanh_scaled(const Eigen::MatrixXd& z, double gamma) {
    return (gamma * z).unaryExpr([](double v) { return std::tanh(v); });
}

}  // namespace

NdtModel::NdtModel(Eigen::MatrixXd w1, Eigen::VectorXd b1, Eigen::MatrixXd w2, Eigen::VectorXd b2,
                   Eigen::MatrixXd w3, Eigen::VectorXd b3, double gamma1, double gamma2)
    : w1_(std::move(w1)),
      w2_(std::move(w2)),
      w3_(std::move(w3)),
      b1_(std::move(b1)),
      b2_(std::move(b2)),
      b3_(std::move(b3)),
      gamma1_(gamma1),
      gamma2_(gamma2) {
    if (!(gamma1_ > 0.0) || !(gamma2_ > 0.0) || !std::isfinite(gamma1_) || !std::isfinite(gamma2_))
        throw ConfigError("NDT gammas must be positive and finite");
    if (w1_.rows() < 1 || w1_.cols() < 1) throw DataError("NDT split layer is empty");
    if (b1_.size() != w1_.rows() || w2_.cols() != w1_.rows() || b2_.size() != w2_.rows() ||
        w3_.cols() != w2_.rows() || b3_.size() != w3_.rows())
        throw DataError("NDT layer shapes are inconsistent");
    if (w3_.rows() < 1) throw DataError("NDT output layer is empty");
    for (const auto& b : blocks()) {
        if (!all_finite(b)) throw NumericError("NDT parameters contain non-finite values");
    }
}

ParamBlocks NdtModel::blocks() const { return {w1_, b1_, w2_, b2_, w3_, b3_}; }

void NdtModel::set_blocks(const ParamBlocks& blocks) {
    if (blocks.size() != kBlockCount) throw DataError("NDT expects 6 parameter blocks");
    const ParamBlocks current = this->blocks();
    for (std::size_t i = 0; i < kBlockCount; ++i) {
        if (blocks[i].rows() != current[i].rows() || blocks[i].cols() != current[i].cols())
            throw DataError(std::string("shape mismatch for block ") + block_name(i));
    }
    w1_ = blocks[0];
    b1_ = blocks[1];
    w2_ = blocks[2];
    b2_ = blocks[3];
    w3_ = blocks[4];
    b3_ = blocks[5];
}

const char* NdtModel::block_name(std::size_t i) {
    static const char* names[kBlockCount] = {"W1", "b1", "W2", "b2", "W3", "b3"};
    return i < kBlockCount ? names[i] : "?";
}

NdtModel compile_from_tree(const DecisionTree& t, double gamma1, double gamma2) {
    const StructureIndex s = enumerate_structure(t);
    const auto inner = static_cast<Eigen::Index>(s.inner_nodes.size());
    const auto leaves = static_cast<Eigen::Index>(s.leaves.size());
    const auto d = static_cast<Eigen::Index>(t.n_features());
    const auto classes = static_cast<Eigen::Index>(t.class_count());

    Eigen::MatrixXd w1 = Eigen::MatrixXd::Zero(inner, d);
    Eigen::VectorXd b1(inner);
    for (Eigen::Index k = 0; k < inner; ++k) {
        const TreeNode& n = t.node(s.inner_nodes[k]);
        w1(k, n.feature) = 1.0;
        b1[k] = -n.threshold;
    }

    Eigen::MatrixXd w2(leaves, inner);
    Eigen::VectorXd b2(leaves);
    for (Eigen::Index l = 0; l < leaves; ++l) {
        for (Eigen::Index k = 0; k < inner; ++k) w2(l, k) = s.at(l, k);
        b2[l] = -(s.path_length[l] - 1);
    }

    Eigen::MatrixXd w3(classes, leaves);
    Eigen::VectorXd b3 = Eigen::VectorXd::Zero(classes);
    for (Eigen::Index l = 0; l < leaves; ++l) {
        const auto& probs = t.node(s.leaves[l]).class_probs;
        for (Eigen::Index c = 0; c < classes; ++c) {
            w3(c, l) = probs[c] / 2.0;
            b3[c] += probs[c] / 2.0;
        }
    }
    NdtModel m(std::move(w1), std::move(b1), std::move(w2), std::move(b2), std::move(w3), std::move(b3),
               gamma1, gamma2);
    m.provenance.tree_hash = tree_hash(t);
    m.provenance.gamma = gamma1;
    return m;
}

NdtActivations forward(const NdtModel& m, const Eigen::MatrixXd& x) {
    if (static_cast<std::size_t>(x.rows()) != m.n_features())
        throw DataError("input has " + std::to_string(x.rows()) + " features, model expects " +
                        std::to_string(m.n_features()));
    if (!x.allFinite()) throw DataError("input contains non-finite values");
    NdtActivations a;
    a.z1 = (m.w1() * x).colwise() + m.b1();
    a.h1 = tanh_scaled(a.z1, m.gamma1());
    a.z2 = (m.w2() * a.h1).colwise() + m.b2();
    a.h2 = tanh_scaled(a.z2, m.gamma2());
    a.logits = (m.w3() * a.h2).colwise() + m.b3();
    a.probs = softmax_columns(a.logits);
    return a;
}

LossGradient loss_and_gradients(const NdtModel& m, const Eigen::MatrixXd& x, std::span<const Label> y) {
    if (x.cols() == 0) throw DataError("empty batch");
    NdtActivations a = forward(m, x);
    Eigen::MatrixXd dlogits;
    LossGradient out;
    out.loss = softmax_cross_entropy(a.logits, y, nullptr, &dlogits);

    const Eigen::MatrixXd dw3 = dlogits * a.h2.transpose();
    const Eigen::VectorXd db3 = dlogits.rowwise().sum();
    // d tanh(g z)/dz = g (1 - tanh^2)
    const Eigen::MatrixXd dz2 =
        ((m.w3().transpose() * dlogits).array() * (m.gamma2() * (1.0 - a.h2.array().square()))).matrix();
    const Eigen::MatrixXd dw2 = dz2 * a.h1.transpose();
    const Eigen::VectorXd db2 = dz2.rowwise().sum();
    const Eigen::MatrixXd dz1 =
        ((m.w2().transpose() * dz2).array() * (m.gamma1() * (1.0 - a.h1.array().square()))).matrix();
    const Eigen::MatrixXd dw1 = dz1 * x.transpose();
    const Eigen::VectorXd db1 = dz1.rowwise().sum();
    out.gradients = {dw1, db1, dw2, db2, dw3, db3};
    return out;
}

std::vector<Label> predict(const NdtModel& m, const Eigen::MatrixXd& x) {
    const NdtActivations a = forward(m, x);
    std::vector<Label> out(static_cast<std::size_t>(x.cols()));
    for (Eigen::Index j = 0; j < x.cols(); ++j) out[j] = argmax_column(a.logits.col(j));
    return out;
}

TrainHistory train(NdtModel& m, const DatasetView& train_rows, const DatasetView& valid_rows,
                   const TrainConfig& cfg, Rng& rng) {
    if (train_rows.n_features() != m.n_features()) throw DataError("training data does not match model inputs");
    if (train_rows.class_count() != m.class_count()) throw DataError("training data class count mismatch");
    const double g1 = m.gamma1(), g2 = m.gamma2();
    auto loss_fn = [](const NdtModel& model, const Eigen::MatrixXd& x, std::span<const Label> y) {
        return loss_and_gradients(model, x, y);
    };
    TrainHistory h = fit_minibatch(m, loss_fn, train_rows, valid_rows, cfg, rng);
    if (m.gamma1() != g1 || m.gamma2() != g2) throw NumericError("smoothness constants changed in training");
    return h;
}

namespace {

json matrix_json(const Eigen::MatrixXd& mat) {
    std::vector<double> data;
    data.reserve(static_cast<std::size_t>(mat.size()));
    for (Eigen::Index r = 0; r < mat.rows(); ++r)
        for (Eigen::Index c = 0; c < mat.cols(); ++c) data.push_back(mat(r, c));
    return {{"rows", mat.rows()}, {"cols", mat.cols()}, {"data", std::move(data)}};
}

Eigen::MatrixXd matrix_from_json(const json& j) {
    const auto rows = j.at("rows").get<Eigen::Index>();
    const auto cols = j.at("cols").get<Eigen::Index>();
    const auto data = j.at("data").get<std::vector<double>>();
    if (rows < 0 || cols < 0 || static_cast<std::size_t>(rows * cols) != data.size())
        throw DataError("matrix dimensions do not match data length");
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[static_cast<std::size_t>(r * cols + c)];
    return m;
}

}  // namespace

std::string model_to_json(const NdtModel& m) {
    json layers;
    const ParamBlocks b = m.blocks();
    for (std::size_t i = 0; i < b.size(); ++i) layers[NdtModel::block_name(i)] = matrix_json(b[i]);
    json doc = {{"format", "ndtx-model"},
                {"version", 1},
                {"gamma1", m.gamma1()},
                {"gamma2", m.gamma2()},
                {"n_features", m.n_features()},
                {"class_count", m.class_count()},
                {"layers", std::move(layers)},
                {"provenance",
                 {{"tree_hash", m.provenance.tree_hash}, {"gamma", m.provenance.gamma}, {"seed", m.provenance.seed}}}};
    return doc.dump(2);
}

NdtModel model_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(std::string("model JSON does not parse: ") + e.what());
    }
    try {
        if (doc.value("format", "") != "ndtx-model") throw DataError("not an ndtx-model document");
        const auto& layers = doc.at("layers");
        auto vec = [](const Eigen::MatrixXd& m) -> Eigen::VectorXd {
            if (m.cols() != 1) throw DataError("bias block must be a column");
            return m.col(0);
        };
        NdtModel m(matrix_from_json(layers.at("W1")), vec(matrix_from_json(layers.at("b1"))),
                   matrix_from_json(layers.at("W2")), vec(matrix_from_json(layers.at("b2"))),
                   matrix_from_json(layers.at("W3")), vec(matrix_from_json(layers.at("b3"))),
                   doc.at("gamma1").get<double>(), doc.at("gamma2").get<double>());
        if (doc.contains("provenance")) {
            const auto& p = doc["provenance"];
            m.provenance.tree_hash = p.value("tree_hash", "");
            m.provenance.gamma = p.value("gamma", 0.0);
            m.provenance.seed = p.value("seed", std::uint64_t{0});
        }
        return m;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed model JSON: ") + e.what());
    }
}

}  // namespace ndtx

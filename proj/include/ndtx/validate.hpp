#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ndtx/ndt.hpp"
#include "ndtx/tree.hpp"

namespace ndtx {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct AgreementProbe {
    std::size_t probes = 0;
    std::size_t agreeing = 0;
    double fraction() const { return probes ? static_cast<double>(agreeing) / static_cast<double>(probes) : 0.0; }
};

/// Uniform probes over a box spanning the tree's thresholds (one unit of slack per
/// side), rejecting points within `margin` of any split threshold on its feature.
/// Counts probes where the network argmax equals predict_tree.
AgreementProbe crisp_agreement(const NdtModel& m, const DecisionTree& t, std::size_t probes, double margin,
                               Rng& rng);

/// Largest entrywise |analytic - numeric| / max(|analytic|, |numeric|, floor) over all
/// blocks, numeric by central differences with the given step.
double gradient_check(const NdtModel& m, const Eigen::MatrixXd& x, std::span<const Label> y, double step = 1e-5,
                      double floor = 1e-6);

/// Tree-vs-model equivalence for a stored model: provenance hash matches and the
/// crisp agreement at margin 10/gamma1 reaches 99.9%.
CheckResult check_model_against_tree(const NdtModel& m, const DecisionTree& t, std::uint64_t seed);

/// Crisp equivalence, gradient correctness and metric oracle checks on generated
/// fixtures.
std::vector<CheckResult> run_builtin_checks(std::uint64_t seed);

}  // namespace ndtx

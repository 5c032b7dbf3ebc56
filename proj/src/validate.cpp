#include "ndtx/validate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "ndtx/error.hpp"
#include "ndtx/metrics.hpp"

namespace ndtx {

AgreementProbe crisp_agreement(const NdtModel& m, const DecisionTree& t, std::size_t probes, double margin,
                               Rng& rng) {
    const std::size_t d = t.n_features();
    if (m.n_features() != d) throw DataError("model and tree disagree on the number of features");
    std::vector<double> lo(d, -1.0), hi(d, 1.0);
    std::vector<std::vector<double>> thresholds(d);
    for (const auto& n : t.nodes()) {
        if (n.is_leaf) continue;
        thresholds[n.feature].push_back(n.threshold);
    }
    for (std::size_t f = 0; f < d; ++f) {
        if (thresholds[f].empty()) continue;
        const auto [mn, mx] = std::minmax_element(thresholds[f].begin(), thresholds[f].end());
        lo[f] = *mn - 1.0;
        hi[f] = *mx + 1.0;
    }
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Eigen::MatrixXd x(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(probes));
    std::vector<double> point(d);
    for (std::size_t p = 0; p < probes; ++p) {
        for (;;) {
            bool clear = true;
            for (std::size_t f = 0; f < d && clear; ++f) {
                point[f] = lo[f] + (hi[f] - lo[f]) * unif(rng);
                for (double th : thresholds[f]) {
                    if (std::abs(point[f] - th) <= margin) {
                        clear = false;
                        break;
                    }
                }
            }
            if (clear) break;
        }
        for (std::size_t f = 0; f < d; ++f) x(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(p)) = point[f];
    }
    const std::vector<Label> net = predict(m, x);
    AgreementProbe out;
    out.probes = probes;
    for (std::size_t p = 0; p < probes; ++p) {
        const Eigen::VectorXd col = x.col(static_cast<Eigen::Index>(p));
        out.agreeing += net[p] == predict_tree(t, std::span<const double>(col.data(), d)).label;
    }
    return out;
}

double gradient_check(const NdtModel& m, const Eigen::MatrixXd& x, std::span<const Label> y, double step,
                      double floor) {
    const LossGradient analytic = loss_and_gradients(m, x, y);
    ParamBlocks blocks = m.blocks();
    NdtModel probe = m;
    double worst = 0.0;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        for (Eigen::Index i = 0; i < blocks[b].size(); ++i) {
            const double saved = blocks[b].data()[i];
            blocks[b].data()[i] = saved + step;
            probe.set_blocks(blocks);
            const double up = loss_and_gradients(probe, x, y).loss;
            blocks[b].data()[i] = saved - step;
            probe.set_blocks(blocks);
            const double down = loss_and_gradients(probe, x, y).loss;
            blocks[b].data()[i] = saved;
            const double numeric = (up - down) / (2.0 * step);
            const double a = analytic.gradients[b].data()[i];
            const double denom = std::max({std::abs(a), std::abs(numeric), floor});
            worst = std::max(worst, std::abs(a - numeric) / denom);
        }
    }
    return worst;
}

CheckResult check_model_against_tree(const NdtModel& m, const DecisionTree& t, std::uint64_t seed) {
    CheckResult r{"model-tree crisp equivalence", false, {}};
    std::ostringstream detail;
    const std::string hash = tree_hash(t);
    if (!m.provenance.tree_hash.empty() && m.provenance.tree_hash != hash) {
        detail << "provenance tree hash " << m.provenance.tree_hash << " != " << hash << "; ";
    }
    if (m.n_features() != t.n_features() || m.class_count() != t.class_count() || m.leaf_units() != t.leaf_count()) {
        detail << "model shape does not match tree";
        r.detail = detail.str();
        return r;
    }
    Rng rng(child_seed(seed, "validate-model", 0));
    const AgreementProbe a = crisp_agreement(m, t, 1000, 10.0 / m.gamma1(), rng);
    detail << "agreement " << a.agreeing << "/" << a.probes;
    r.passed = a.fraction() >= 0.999 && detail.str().find("hash") == std::string::npos;
    r.detail = detail.str();
    return r;
}

namespace {

CheckResult check_crisp_equivalence(std::uint64_t seed) {
    CheckResult r{"crisp equivalence (gamma=100)", true, {}};
    std::ostringstream detail;
    double worst = 1.0;
    for (std::uint64_t k = 0; k < 5; ++k) {
        Rng data_rng(child_seed(seed, "validate-crisp-data", k));
        const Dataset d = generate_gaussian_pair(200, 3, 1.5, data_rng);
        const auto rows = all_rows(d);
        const DecisionTree t = fit_tree({&d, rows}, {static_cast<int>(2 + k), 1});
        if (t.degenerate()) continue;
        const NdtModel m = compile_from_tree(t, 100.0, 100.0);
        Rng probe_rng(child_seed(seed, "validate-crisp-probe", k));
        const AgreementProbe a = crisp_agreement(m, t, 1000, 10.0 / 100.0, probe_rng);
        worst = std::min(worst, a.fraction());
    }
    r.passed = worst >= 0.999;
    detail << "min agreement " << worst;
    r.detail = detail.str();
    return r;
}

CheckResult check_gradients(std::uint64_t seed) {
    CheckResult r{"gradient check (central differences)", true, {}};
    double worst = 0.0;
    for (std::uint64_t k = 0; k < 20; ++k) {
        Rng rng(child_seed(seed, "validate-grad", k));
        const Dataset d = generate_gaussian_pair(40, 3, 1.0, rng);
        const auto rows = all_rows(d);
        const DecisionTree t = fit_tree({&d, rows}, {3, 1});
        if (t.degenerate()) continue;
        std::uniform_real_distribution<double> gamma_dist(0.5, 2.0);
        NdtModel m = compile_from_tree(t, gamma_dist(rng), gamma_dist(rng));
        std::normal_distribution<double> noise(0.0, 0.1);
        ParamBlocks b = m.blocks();
        for (auto& blk : b)
            for (Eigen::Index i = 0; i < blk.size(); ++i) blk.data()[i] += noise(rng);
        m.set_blocks(b);
        Eigen::MatrixXd x(3, 8);
        std::normal_distribution<double> unit(0.0, 1.0);
        for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = unit(rng);
        std::vector<Label> y(8);
        for (auto& v : y) v = static_cast<Label>(rng() % 2);
        worst = std::max(worst, gradient_check(m, x, y));
    }
    r.passed = worst < 1e-4;
    r.detail = "max relative error " + std::to_string(worst);
    return r;
}

CheckResult check_metric_oracles(std::uint64_t seed) {
    CheckResult r{"metric oracles (kappa, exact Wilcoxon)", true, {}};
    Rng rng(child_seed(seed, "validate-metrics", 0));
    std::size_t failures = 0;
    for (int k = 0; k < 100; ++k) {
        const int classes = 2 + static_cast<int>(rng() % 3);
        const std::size_t n = 5 + rng() % 40;
        std::vector<Label> a(n), b(n);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = static_cast<Label>(rng() % classes);
            b[i] = static_cast<Label>(rng() % classes);
        }
        // Contingency-table form.
        std::vector<std::vector<double>> table(classes, std::vector<double>(classes, 0.0));
        for (std::size_t i = 0; i < n; ++i) table[a[i]][b[i]] += 1.0;
        double diag = 0.0, chance = 0.0;
        for (int c = 0; c < classes; ++c) {
            double row = 0.0, col = 0.0;
            for (int e = 0; e < classes; ++e) {
                row += table[c][e];
                col += table[e][c];
            }
            diag += table[c][c];
            chance += row * col;
        }
        const double nn = static_cast<double>(n);
        const double po = diag / nn, pe = chance / (nn * nn);
        const double expected = pe >= 1.0 ? 1.0 : (po - pe) / (1.0 - pe);
        if (std::abs(cohens_kappa(a, b, classes) - expected) > 1e-12) ++failures;
    }
    for (int k = 0; k < 50; ++k) {
        const std::size_t m = 1 + static_cast<std::size_t>(k) % kWilcoxonExactMax;
        PairedSample s;
        for (std::size_t i = 0; i < m; ++i) {
            s.xs.push_back(static_cast<double>(rng() % 7) - 3.0);
            s.ys.push_back(0.0);
        }
        if (std::all_of(s.xs.begin(), s.xs.end(), [](double v) { return v == 0.0; })) s.xs[0] = 1.0;
        const WilcoxonResult w = wilcoxon_signed_rank(s);
        std::vector<double> mags;
        for (double v : s.xs) {
            if (v != 0.0) mags.push_back(std::abs(v));
        }
        // Mid-ranks by counting.
        std::vector<double> ranks;
        for (double v : mags) {
            double below = 0, equal = 0;
            for (double u : mags) {
                below += u < v;
                equal += u == v;
            }
            ranks.push_back(below + (equal + 1.0) / 2.0);
        }
        double total = 0.0;
        for (double rk : ranks) total += rk;
        std::size_t extreme = 0;
        const std::size_t patterns = std::size_t{1} << ranks.size();
        for (std::size_t mask = 0; mask < patterns; ++mask) {
            double plus = 0.0;
            for (std::size_t i = 0; i < ranks.size(); ++i) {
                if (mask >> i & 1U) plus += ranks[i];
            }
            if (std::min(plus, total - plus) <= w.statistic) ++extreme;
        }
        const double p = static_cast<double>(extreme) / static_cast<double>(patterns);
        if (std::abs(p - w.p_value) > 1e-12) ++failures;
    }
    r.passed = failures == 0;
    r.detail = std::to_string(failures) + " mismatches";
    return r;
}

}  // namespace

std::vector<CheckResult> run_builtin_checks(std::uint64_t seed) {
    return {check_crisp_equivalence(seed), check_gradients(seed), check_metric_oracles(seed)};
}

}  // namespace ndtx

// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include "ndtx/dataset.hpp"
#include "ndtx/explore.hpp"
#include "ndtx/metrics.hpp"
#include "ndtx/ndt.hpp"
#include "ndtx/tree.hpp"
#include "ndtx/validate.hpp"

using namespace ndtx;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

int failures = 0;

void criterion(int id, const char* name, double limit_seconds, const std::function<Outcome()>& body) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o{false, ""};
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::ostringstream time;
    time.precision(3);
    time << secs;
    if (limit_seconds > 0 && secs >= limit_seconds) {
        o.pass = false;
        o.detail += " (over the " + std::to_string(static_cast<int>(limit_seconds)) + " s budget)";
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << id << "] " << name << ": " << o.detail << " runtime=" << time.str()
              << "s" << std::endl;
    failures += !o.pass;
}

std::string fmt(double v) {
    std::ostringstream s;
    s.precision(6);
    s << v;
    return s.str();
}

std::vector<Dataset> crisp_fixtures() {
    std::vector<Dataset> out;
    for (std::uint64_t s = 0; s < 6; ++s) {
        Rng rng(child_seed(1, "acceptance-gauss", s));
        out.push_back(generate_gaussian_pair(200 + 100 * s, 1 + s % 5, 0.5 + 0.5 * static_cast<double>(s), rng));
    }
    for (std::uint64_t s = 0; s < 3; ++s) {
        Rng rng(child_seed(1, "acceptance-rules", s));
        out.push_back(generate_threshold_rules(500, 3 + s, 0.02, rng, s == 0 ? 0 : 20));
    }
    // Three classes with random labels: deep, impure trees with tied leaves.
    Rng rng(child_seed(1, "acceptance-random", 0));
    std::normal_distribution<double> unit(0.0, 1.0);
    std::vector<double> x;
    std::vector<Label> y;
    for (int i = 0; i < 300; ++i) {
        for (int f = 0; f < 4; ++f) x.push_back(unit(rng));
        y.push_back(static_cast<Label>(rng() % 3));
    }
    out.emplace_back(x, 4, y, std::vector<std::string>{}, 3);
    return out;
}

Outcome crisp_equivalence() {
    double worst = 1.0;
    std::size_t trees = 0;
    const auto fixtures = crisp_fixtures();
    for (std::size_t k = 0; k < fixtures.size(); ++k) {
        const Dataset& d = fixtures[k];
        const auto rows = all_rows(d);
        for (int depth = 1; depth <= 8; ++depth) {
            const DecisionTree t = fit_tree({&d, rows}, {depth, 1});
            if (t.degenerate()) continue;
            const NdtModel m = compile_from_tree(t, 100.0, 100.0);
            Rng rng(child_seed(1, "acceptance-probe", k * 16 + static_cast<std::size_t>(depth)));
            worst = std::min(worst, crisp_agreement(m, t, 1000, 10.0 / 100.0, rng).fraction());
            ++trees;
        }
    }
    return {worst >= 0.999, "trees=" + std::to_string(trees) + " min_agreement=" + fmt(worst) + " (need >= 0.999)"};
}

// Central differences computed here, not through the library's checker.
Outcome gradient_correctness() {
    double worst = 0.0;
    for (std::uint64_t k = 0; k < 20; ++k) {
        Rng rng(child_seed(2, "acceptance-grad", k));
        const std::size_t d = 2 + k % 3;
        const Dataset data = generate_gaussian_pair(60, d, 1.0, rng);
        const auto rows = all_rows(data);
        const DecisionTree t = fit_tree({&data, rows}, {2 + static_cast<int>(k % 3), 1});
        if (t.degenerate()) continue;
        std::uniform_real_distribution<double> g(0.3, 3.0);
        NdtModel m = compile_from_tree(t, g(rng), g(rng));
        ParamBlocks p = m.blocks();
        std::normal_distribution<double> noise(0.0, 0.2);
        for (auto& b : p)
            for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] += noise(rng);
        m.set_blocks(p);
        Eigen::MatrixXd x(static_cast<Eigen::Index>(d), 10);
        for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = 2.0 * noise(rng) * 5.0;
        std::vector<Label> y(10);
        for (auto& v : y) v = static_cast<Label>(rng() % 2);
        const LossGradient an = loss_and_gradients(m, x, y);
        for (std::size_t b = 0; b < p.size(); ++b) {
            for (Eigen::Index i = 0; i < p[b].size(); ++i) {
                const double keep = p[b].data()[i];
                NdtModel probe = m;
                p[b].data()[i] = keep + 1e-5;
                probe.set_blocks(p);
                const double up = loss_and_gradients(probe, x, y).loss;
                p[b].data()[i] = keep - 1e-5;
                probe.set_blocks(p);
                const double down = loss_and_gradients(probe, x, y).loss;
                p[b].data()[i] = keep;
                const double fd = (up - down) / 2e-5;
                const double a = an.gradients[b].data()[i];
                worst = std::max(worst, std::abs(fd - a) / std::max({std::abs(fd), std::abs(a), 1e-6}));
            }
        }
    }
    return {worst < 1e-4, "models=20 max_relative_error=" + fmt(worst) + " (need < 1e-4)"};
}

Outcome metric_oracles() {
    Rng rng(child_seed(3, "acceptance-metrics", 0));
    std::size_t kappa_bad = 0, wilcoxon_bad = 0;
    for (int k = 0; k < 100; ++k) {
        const int c = 2 + static_cast<int>(rng() % 4);
        std::vector<Label> a(3 + rng() % 60), b(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            a[i] = static_cast<Label>(rng() % c);
            b[i] = rng() % 3 ? a[i] : static_cast<Label>(rng() % c);
        }
        std::vector<std::vector<double>> table(c, std::vector<double>(c, 0.0));
        for (std::size_t i = 0; i < a.size(); ++i) table[a[i]][b[i]] += 1.0;
        const double n = static_cast<double>(a.size());
        double po = 0.0, pe = 0.0;
        for (int i = 0; i < c; ++i) {
            double row = 0.0, col = 0.0;
            for (int j = 0; j < c; ++j) {
                row += table[i][j];
                col += table[j][i];
            }
            po += table[i][i] / n;
            pe += (row / n) * (col / n);
        }
        const double expected = pe == 1.0 ? 1.0 : (po - pe) / (1.0 - pe);
        kappa_bad += std::abs(cohens_kappa(a, b, c) - expected) > 1e-12;
    }
    for (int k = 0; k < 50; ++k) {
        const std::size_t m = 1 + static_cast<std::size_t>(k) % 12;
        PairedSample s;
        for (std::size_t i = 0; i < m; ++i) {
            s.xs.push_back(static_cast<double>(rng() % 11) / 10.0);
            s.ys.push_back(static_cast<double>(rng() % 11) / 10.0);
        }
        if (s.xs == s.ys) s.xs[0] += 1.0;
        std::vector<double> diff, mags;
        for (std::size_t i = 0; i < m; ++i) {
            const double v = s.xs[i] - s.ys[i];
            if (v != 0.0) {
                diff.push_back(v);
                mags.push_back(std::abs(v));
            }
        }
        std::vector<double> rank(mags.size());
        double total = 0.0, w_plus = 0.0;
        for (std::size_t i = 0; i < mags.size(); ++i) {
            double below = 0, equal = 0;
            for (double u : mags) {
                below += u < mags[i];
                equal += u == mags[i];
            }
            rank[i] = below + (equal + 1.0) / 2.0;
            total += rank[i];
            if (diff[i] > 0) w_plus += rank[i];
        }
        const double w = std::min(w_plus, total - w_plus);
        std::size_t extreme = 0;
        const std::size_t patterns = std::size_t{1} << rank.size();
        for (std::size_t mask = 0; mask < patterns; ++mask) {
            double sp = 0.0;
            for (std::size_t i = 0; i < rank.size(); ++i)
                if (mask >> i & 1U) sp += rank[i];
            extreme += std::min(sp, total - sp) <= w + 1e-9;
        }
        const double expected = static_cast<double>(extreme) / static_cast<double>(patterns);
        const WilcoxonResult r = wilcoxon_signed_rank(s);
        wilcoxon_bad += std::abs(r.p_value - expected) > 1e-12 || r.statistic != w;
    }
    return {kappa_bad == 0 && wilcoxon_bad == 0, "kappa_mismatches=" + std::to_string(kappa_bad) +
                                                     "/100 wilcoxon_mismatches=" + std::to_string(wilcoxon_bad) + "/50"};
}

Outcome gamma_relation() {
    const auto grid = default_gamma_grid();
    bool decreasing = true;
    for (std::size_t i = 1; i < grid.size(); ++i) decreasing = decreasing && grid[i] < grid[i - 1];
    double worst = 0.0;
    for (double g : grid) {
        const long double oracle = std::exp(std::log(static_cast<long double>(g)) / 1.1L);
        worst = std::max(worst, static_cast<double>(std::abs((gamma2_of(g) - oracle) / oracle)));
    }
    const bool shape = grid.size() == 36 && grid.front() == 9000.0 && grid.back() == 1.0 && decreasing;
    return {shape && worst < 5e-7, "grid_size=" + std::to_string(grid.size()) + " first=" + fmt(grid.front()) +
                                       " last=" + fmt(grid.back()) + " strictly_decreasing=" +
                                       (decreasing ? "yes" : "no") + " max_relative_error=" + fmt(worst)};
}

Outcome synthetic_trend() {
    Rng rng(child_seed(5, "acceptance-trend", 0));
    const Dataset d = generate_gaussian_pair(1000, 3, 2.0, rng);
    ExploreConfig cfg;
    cfg.depth = 4;
    cfg.n_reps = 10;
    cfg.grid = {9000, 1000, 100, 10, 5, 3, 1};
    cfg.master_seed = 5;
    const ExplorationResult r = run_exploration(d, cfg);
    const double gap = r.summary_at(r.gamma_star).mean_accuracy - r.mean_dt_accuracy;
    const TestOutcome& t = r.significance.tests.at(0);
    const bool ok = gap >= 0.03 && r.gamma_star <= 10.0 && !t.degenerate && t.reject;
    return {ok, "gap=" + fmt(gap) + " (need >= 0.03) gamma_star=" + fmt(r.gamma_star) + " (need <= 10) wilcoxon_p=" +
                    fmt(t.test.p_value) + " reject=" + (t.reject ? "yes" : "no")};
}

Outcome rigid_dataset() {
    Rng rng(child_seed(6, "acceptance-rules", 0));
    const Dataset d = generate_threshold_rules(1000, 3, 0.02, rng);
    ExploreConfig cfg;
    cfg.depth.reset();
    cfg.n_reps = 5;
    cfg.master_seed = 1;
    const ExplorationResult r = run_exploration(d, cfg);
    const double delta = r.summary_at(r.gamma_star).mean_accuracy - r.mean_dt_accuracy;
    const bool ok = delta <= 0.01 && r.diagnosis == Diagnosis::rigid_sufficient;
    return {ok, "depth=" + std::to_string(r.depth) + " delta=" + fmt(delta) + " (need <= 0.01) gamma_star=" +
                    fmt(r.gamma_star) + " diagnosis=" + diagnosis_name(r.diagnosis)};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Outcome determinism() {
    const fs::path base = fs::temp_directory_path() / "ndtx_acceptance_determinism";
    fs::remove_all(base);
    const std::string args = " explore --data synthetic --reps 5 --seed 7 --gammas 1000,100,10,3,1 --nn-baseline"
                             " --epochs 20 --out ";
    for (const char* run : {"first", "second"}) {
        const std::string cmd = std::string("\"") + NDTX_CLI_PATH + "\"" + args + (base / run).string() + " >/dev/null";
        if (std::system(cmd.c_str()) != 0) return {false, std::string("CLI run '") + run + "' failed"};
    }
    std::string detail;
    bool same = true;
    for (const char* f : {"result.json", "accuracy_vs_gamma.csv", "kappa_vs_gamma.csv"}) {
        const std::string a = slurp(base / "first" / f), b = slurp(base / "second" / f);
        const bool eq = !a.empty() && a == b;
        same = same && eq;
        detail += std::string(f) + (eq ? "=identical " : "=DIFFERENT ");
    }
    fs::remove_all(base);
    return {same, detail};
}

Outcome nn_baseline() {
    // Two clusters eight standard deviations apart: separable in practice.
    Rng rng(child_seed(8, "acceptance-nn", 0));
    const Dataset d = generate_gaussian_pair(200, 2, 8.0, rng);
    const NnBaselineResult r = nn_baseline_cv(d, TrainConfig{}, 5, 8);
    const bool ok = nn_architecture_grid().size() == 36 && r.scores.size() == 36 && r.mean_test_accuracy >= 0.95;
    return {ok, "configurations=" + std::to_string(r.scores.size()) + " best=" + std::to_string(r.best.depth) + "x" +
                    std::to_string(r.best.width) + "-" + activation_name(r.best.activation) +
                    " mean_test_accuracy=" + fmt(r.mean_test_accuracy) + " (need >= 0.95)"};
}

}  // namespace

int main() {
    criterion(1, "crisp equivalence at gamma=100", 10, crisp_equivalence);
    criterion(2, "gradient correctness", 60, gradient_correctness);
    criterion(3, "metric oracles", 0, metric_oracles);
    criterion(4, "gamma relation and default grid", 0, gamma_relation);
    criterion(5, "synthetic trend reproduction", 900, synthetic_trend);
    criterion(6, "rigid rule dataset", 600, rigid_dataset);
    criterion(7, "determinism of explore artifacts", 0, determinism);
    criterion(8, "network baseline grid", 0, nn_baseline);
    std::cout << (failures ? "ACCEPTANCE FAILED: " : "ACCEPTANCE PASSED: ") << (8 - failures) << "/8 criteria" << std::endl;
    return failures ? 1 : 0;
}

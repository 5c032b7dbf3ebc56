#include "ndtx/explore.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ndtx/error.hpp"
#include "ndtx/ndt.hpp"
#include "parallel.hpp"

namespace ndtx {

std::vector<double> default_gamma_grid() {
    std::vector<double> grid;
    for (double decade : {1000.0, 100.0, 10.0, 1.0}) {
        for (int k = 9; k >= 1; --k) grid.push_back(k * decade);
    }
    return grid;
}

void validate_gamma_grid(const std::vector<double>& grid) {
    if (grid.empty()) throw ConfigError("gamma grid is empty");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] > 0.0) || !std::isfinite(grid[i])) throw ConfigError("gamma values must be positive");
        if (i > 0 && !(grid[i] < grid[i - 1])) throw ConfigError("gamma grid must be strictly decreasing");
    }
}

const char* diagnosis_name(Diagnosis d) {
    switch (d) {
        case Diagnosis::relaxation_beneficial: return "RelaxationBeneficial";
        case Diagnosis::rigid_sufficient: return "RigidSufficient";
        case Diagnosis::rigid_but_sensitive: return "RigidButSensitive";
        case Diagnosis::inconclusive: return "Inconclusive";
    }
    return "Inconclusive";
}

const GammaSummary& ExplorationResult::summary_at(double gamma) const {
    for (const auto& s : per_gamma) {
        if (s.gamma == gamma) return s;
    }
    throw ConfigError("gamma not in grid");
}

namespace {

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;
};

MeanStd mean_std(const std::vector<double>& v) {
    MeanStd out;
    if (v.empty()) return out;
    out.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    if (v.size() > 1) {
        double ss = 0.0;
        for (double x : v) ss += (x - out.mean) * (x - out.mean);
        out.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
    }
    return out;
}

int decade_of(double gamma) { return static_cast<int>(std::floor(std::log10(gamma) + 1e-9)); }

struct PreparedRepetition {
    RepetitionSummary summary;
    SplitSpec split;
    DecisionTree tree;
    std::vector<Label> dt_test_pred;
    std::vector<Label> test_truth;
};

}  // namespace

std::vector<GammaSummary> aggregate(const std::vector<RunRecord>& records, const std::vector<double>& grid) {
    std::vector<GammaSummary> out;
    out.reserve(grid.size());
    for (double g : grid) {
        std::vector<double> acc, kap;
        GammaSummary s;
        s.gamma = g;
        s.gamma2 = gamma2_of(g);
        for (const auto& r : records) {
            if (r.gamma == g) {
                acc.push_back(r.ndt_accuracy);
                kap.push_back(r.kappa);
            }
        }
        const auto a = mean_std(acc);
        const auto k = mean_std(kap);
        s.mean_accuracy = a.mean;
        s.std_accuracy = a.std;
        s.mean_kappa = k.mean;
        s.std_kappa = k.std;
        s.n = acc.size();
        out.push_back(s);
    }
    return out;
}

double select_gamma_star(const ExplorationResult& r) {
    if (r.per_gamma.empty()) throw ConfigError("exploration result has no per-gamma summaries");
    // Largest gamma first so a strict comparison keeps the most rigid model on ties.
    std::vector<const GammaSummary*> by_gamma;
    for (const auto& s : r.per_gamma) by_gamma.push_back(&s);
    std::stable_sort(by_gamma.begin(), by_gamma.end(),
                     [](const GammaSummary* a, const GammaSummary* b) { return a->gamma > b->gamma; });
    const GammaSummary* best = by_gamma.front();
    for (const auto* s : by_gamma) {
        if (s->mean_accuracy > best->mean_accuracy) best = s;
    }
    return best->gamma;
}

namespace {

TestOutcome paired_test(std::string name, std::vector<double> xs, std::vector<double> ys, double alpha) {
    TestOutcome t;
    t.comparison = std::move(name);
    try {
        t.test = wilcoxon_signed_rank({std::move(xs), std::move(ys)});
        t.reject = t.test.p_value < alpha;
    } catch (const DegenerateError&) {
        t.degenerate = true;
        t.test.n_used = 0;
        t.test.p_value = 1.0;
    }
    return t;
}

}  // namespace

SignificanceReport significance_report(const ExplorationResult& r) {
    if (r.usable_repetitions() < 2)
        throw DataError("significance tests need at least 2 usable repetitions");
    SignificanceReport rep;
    rep.alpha = r.config.alpha;

    std::vector<std::size_t> reps;
    std::vector<double> dt, ndt;
    for (const auto& rs : r.repetitions) {
        if (rs.degenerate) continue;
        reps.push_back(rs.repetition);
        dt.push_back(rs.dt_accuracy);
    }
    for (std::size_t rep_id : reps) {
        for (const auto& rec : r.records) {
            if (rec.repetition == rep_id && rec.gamma == r.gamma_star) ndt.push_back(rec.ndt_accuracy);
        }
    }
    if (ndt.size() != dt.size()) throw DataError("missing NDT records at gamma*");
    rep.tests.push_back(paired_test("NDT(gamma*) vs DT", ndt, dt, rep.alpha));

    if (r.nn) {
        std::vector<double> nn_acc, ndt_p, dt_p;
        for (std::size_t i = 0; i < reps.size(); ++i) {
            const auto it = std::find(r.nn->repetitions.begin(), r.nn->repetitions.end(), reps[i]);
            if (it == r.nn->repetitions.end()) continue;
            nn_acc.push_back(r.nn->test_accuracy[static_cast<std::size_t>(it - r.nn->repetitions.begin())]);
            ndt_p.push_back(ndt[i]);
            dt_p.push_back(dt[i]);
        }
        rep.tests.push_back(paired_test("NDT(gamma*) vs NN", ndt_p, nn_acc, rep.alpha));
        rep.tests.push_back(paired_test("NN vs DT", nn_acc, dt_p, rep.alpha));
    }
    return rep;
}

Diagnosis interpret(const ExplorationResult& r, const InterpretThresholds& th) {
    if (r.per_gamma.empty()) return Diagnosis::inconclusive;
    const auto& grid = r.config.grid;
    const double gs = r.gamma_star;
    const GammaSummary& star = r.summary_at(gs);
    const double delta = star.mean_accuracy - r.mean_dt_accuracy;
    const double kappa_star = star.mean_kappa;

    const double g_max = *std::max_element(grid.begin(), grid.end());
    const double g_min = *std::min_element(grid.begin(), grid.end());
    const bool in_lowest_decade = decade_of(gs) == decade_of(g_min);
    const bool in_highest_decade = decade_of(gs) == decade_of(g_max);

    // Agreement only falls while relaxing: walking from the largest gamma down to
    // gamma*, no point rises more than the tolerance above the running minimum, and
    // the end point sits clearly below the start.
    std::vector<const GammaSummary*> walk;
    for (const auto& s : r.per_gamma) {
        if (s.gamma >= gs) walk.push_back(&s);
    }
    std::sort(walk.begin(), walk.end(), [](const auto* a, const auto* b) { return a->gamma > b->gamma; });
    bool kappa_decreasing = walk.size() >= 2;
    double running_min = walk.empty() ? 0.0 : walk.front()->mean_kappa;
    for (const auto* s : walk) {
        if (s->mean_kappa > running_min + th.kappa_monotone_tol) kappa_decreasing = false;
        running_min = std::min(running_min, s->mean_kappa);
    }
    if (kappa_decreasing && !(kappa_star < walk.front()->mean_kappa - th.kappa_monotone_tol))
        kappa_decreasing = false;

    if (delta > th.delta_gain && in_lowest_decade && kappa_decreasing) return Diagnosis::relaxation_beneficial;
    if (delta <= th.delta_gain && in_highest_decade) return Diagnosis::rigid_sufficient;
    if (delta > th.delta_gain && kappa_star >= th.kappa_high) return Diagnosis::rigid_but_sensitive;
    return Diagnosis::inconclusive;
}

std::vector<MlpArchitecture> nn_architecture_grid() {
    std::vector<MlpArchitecture> grid;
    for (int depth : {1, 2, 3})
        for (int width : {2, 3, 4, 5, 6, 7})
            for (Activation a : {Activation::tanh, Activation::relu}) grid.push_back({depth, width, a});
    return grid;
}

NnBaselineResult nn_baseline_cv(const Dataset& d, const TrainConfig& cfg, std::size_t n_reps,
                                std::uint64_t master_seed, std::size_t workers, const SplitFractions& fractions) {
    if (n_reps < 1) throw ConfigError("NN baseline needs at least one repetition");
    cfg.validate();
    const auto archs = nn_architecture_grid();
    std::vector<SplitSpec> splits(n_reps);
    for (std::size_t i = 0; i < n_reps; ++i) splits[i] = subsample_iteration(d, i, master_seed, fractions);

    const std::size_t items = n_reps * archs.size();
    std::vector<double> valid_acc(items), test_acc(items);
    detail::parallel_for(items, workers, [&](std::size_t item) {
        const std::size_t rep = item / archs.size();
        const std::size_t a = item % archs.size();
        const SplitSpec& sp = splits[rep];
        Rng init_rng(child_seed(master_seed, "nn-init", item));
        Rng train_rng(child_seed(master_seed, "nn-train", item));
        Mlp net(d.n_features(), d.class_count(), archs[a], init_rng);
        const DatasetView tr{&d, sp.train_idx}, va{&d, sp.valid_idx}, te{&d, sp.test_idx};
        train(net, tr, va, cfg, train_rng);
        valid_acc[item] = accuracy(net.predict(design_matrix(va)), view_labels(va));
        test_acc[item] = accuracy(net.predict(design_matrix(te)), view_labels(te));
    });

    NnBaselineResult out;
    std::size_t best = 0;
    for (std::size_t a = 0; a < archs.size(); ++a) {
        ArchitectureScore s{archs[a], 0.0, 0.0};
        for (std::size_t rep = 0; rep < n_reps; ++rep) {
            s.mean_valid_accuracy += valid_acc[rep * archs.size() + a];
            s.mean_test_accuracy += test_acc[rep * archs.size() + a];
        }
        s.mean_valid_accuracy /= static_cast<double>(n_reps);
        s.mean_test_accuracy /= static_cast<double>(n_reps);
        out.scores.push_back(s);
        if (s.mean_valid_accuracy > out.scores[best].mean_valid_accuracy) best = a;
    }
    out.best = archs[best];
    out.mean_test_accuracy = out.scores[best].mean_test_accuracy;
    for (std::size_t rep = 0; rep < n_reps; ++rep) {
        out.repetitions.push_back(rep);
        out.test_accuracy.push_back(test_acc[rep * archs.size() + best]);
    }
    return out;
}

ExplorationResult run_exploration(const Dataset& d, const ExploreConfig& cfg) {
    validate_gamma_grid(cfg.grid);
    if (cfg.n_reps < 1) throw ConfigError("need at least one repetition");
    cfg.train.validate();
    if (cfg.depth && *cfg.depth < 1) throw ConfigError("tree depth must be >= 1");

    ExplorationResult r;
    r.config = cfg;
    if (cfg.depth) {
        r.depth = *cfg.depth;
    } else {
        Rng cv_rng(child_seed(cfg.master_seed, "depth-cv", 0));
        r.depth_selection = select_depth_cv(d, cfg.depth_grid, cfg.cv_folds, cv_rng, cfg.min_leaf);
        r.depth = r.depth_selection->depth;
    }

    // Per repetition: split, seed tree, and the tree's test predictions reused for every gamma.
    std::vector<PreparedRepetition> preps(cfg.n_reps);
    detail::parallel_for(cfg.n_reps, cfg.workers, [&](std::size_t i) {
        PreparedRepetition& p = preps[i];
        p.summary.repetition = i;
        p.summary.split_seed = child_seed(cfg.master_seed, "split", i);
        p.split = subsample_iteration(d, i, cfg.master_seed, cfg.fractions);
        p.tree = fit_tree({&d, p.split.train_idx}, {r.depth, cfg.min_leaf});
        const DatasetView test{&d, p.split.test_idx};
        p.dt_test_pred = predict_tree(p.tree, test);
        p.test_truth = view_labels(test);
        p.summary.dt_accuracy = accuracy(p.dt_test_pred, p.test_truth);
        p.summary.leaves = p.tree.leaf_count();
        p.summary.depth = p.tree.depth();
        p.summary.degenerate = p.tree.degenerate();
    });

    std::vector<std::size_t> usable;
    for (const auto& p : preps) {
        r.repetitions.push_back(p.summary);
        if (p.summary.degenerate) {
            ++r.degenerate_repetitions;
        } else {
            usable.push_back(p.summary.repetition);
        }
    }
    if (usable.empty()) throw DegenerateError("every repetition produced a single-leaf seed tree");

    const std::size_t n_gamma = cfg.grid.size();
    std::vector<RunRecord> records(usable.size() * n_gamma);
    detail::parallel_for(records.size(), cfg.workers, [&](std::size_t item) {
        const PreparedRepetition& p = preps[usable[item / n_gamma]];
        const std::size_t g = item % n_gamma;
        RunRecord& rec = records[item];
        rec.repetition = p.summary.repetition;
        rec.gamma = cfg.grid[g];
        rec.gamma2 = gamma2_of(rec.gamma);
        rec.dt_accuracy = p.summary.dt_accuracy;
        rec.train_seed = child_seed(cfg.master_seed, "train", p.summary.repetition * n_gamma + g);

        NdtModel m = compile_from_tree(p.tree, rec.gamma, rec.gamma2);
        m.provenance.seed = rec.train_seed;
        Rng rng(rec.train_seed);
        const TrainHistory h = train(m, {&d, p.split.train_idx}, {&d, p.split.valid_idx}, cfg.train, rng);
        rec.best_epoch = h.best_epoch;
        rec.stopped_epoch = h.stopped_epoch;
        rec.best_valid_loss = h.best_valid_loss;

        const std::vector<Label> pred = predict(m, design_matrix({&d, p.split.test_idx}));
        rec.ndt_accuracy = accuracy(pred, p.test_truth);
        rec.kappa = cohens_kappa(pred, p.dt_test_pred, d.class_count());
        rec.kappa_degenerate = kappa_degenerate(pred, p.dt_test_pred, d.class_count());
    });
    r.records = std::move(records);

    r.per_gamma = aggregate(r.records, cfg.grid);
    double dt_sum = 0.0;
    for (const auto& rs : r.repetitions) {
        if (!rs.degenerate) dt_sum += rs.dt_accuracy;
    }
    r.mean_dt_accuracy = dt_sum / static_cast<double>(usable.size());
    r.gamma_star = select_gamma_star(r);

    if (cfg.nn_baseline) r.nn = nn_baseline_cv(d, cfg.train, cfg.n_reps, cfg.master_seed, cfg.workers, cfg.fractions);
    if (r.usable_repetitions() >= 2) r.significance = significance_report(r);
    r.significance.alpha = cfg.alpha;
    r.diagnosis = interpret(r, cfg.thresholds);
    return r;
}

}  // namespace ndtx

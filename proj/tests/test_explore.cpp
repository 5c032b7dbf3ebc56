#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ndtx/error.hpp"
#include "ndtx/explore.hpp"

using namespace ndtx;

namespace {

// Result shell with the given curves over the default grid.
ExplorationResult shaped(const std::vector<double>& acc, const std::vector<double>& kappa, double dt) {
    ExplorationResult r;
    r.config.grid = default_gamma_grid();
    REQUIRE(acc.size() == r.config.grid.size());
    for (std::size_t i = 0; i < acc.size(); ++i) {
        GammaSummary s;
        s.gamma = r.config.grid[i];
        s.mean_accuracy = acc[i];
        s.mean_kappa = kappa[i];
        s.n = 30;
        r.per_gamma.push_back(s);
    }
    r.mean_dt_accuracy = dt;
    r.gamma_star = select_gamma_star(r);
    return r;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

ExploreConfig small_config() {
    ExploreConfig c;
    c.depth = 3;
    c.grid = {100.0, 10.0, 1.0};
    c.n_reps = 3;
    c.train.epochs = 5;
    c.master_seed = 17;
    return c;
}

}  // namespace

TEST_SUITE("explore") {

TEST_CASE("default gamma grid") {
    const auto g = default_gamma_grid();
    CHECK(g.size() == 36);
    CHECK(g.front() == 9000.0);
    CHECK(g.back() == 1.0);
    for (std::size_t i = 1; i < g.size(); ++i) CHECK(g[i] < g[i - 1]);
    CHECK(std::count(g.begin(), g.end(), 100.0) == 1);
    CHECK_NOTHROW(validate_gamma_grid(g));
    CHECK_THROWS_AS(validate_gamma_grid({}), ConfigError);
    CHECK_THROWS_AS(validate_gamma_grid({1.0, 10.0}), ConfigError);
    CHECK_THROWS_AS(validate_gamma_grid({10.0, 10.0}), ConfigError);
    CHECK_THROWS_AS(validate_gamma_grid({10.0, 0.0}), ConfigError);
}

TEST_CASE("aggregation is the per-gamma mean and sample deviation") {
    std::vector<RunRecord> recs;
    const double acc[3][2] = {{0.7, 0.8}, {0.9, 0.6}, {0.8, 0.7}};
    for (std::size_t rep = 0; rep < 3; ++rep) {
        for (std::size_t g = 0; g < 2; ++g) {
            RunRecord r;
            r.repetition = rep;
            r.gamma = g == 0 ? 50.0 : 5.0;
            r.ndt_accuracy = acc[rep][g];
            r.kappa = 1.0 - acc[rep][g];
            recs.push_back(r);
        }
    }
    const auto s = aggregate(recs, {50.0, 5.0});
    REQUIRE(s.size() == 2);
    CHECK(s[0].gamma == 50.0);
    CHECK(s[0].n == 3);
    CHECK(s[0].mean_accuracy == doctest::Approx(0.8));
    CHECK(s[0].std_accuracy == doctest::Approx(0.1));
    CHECK(s[1].mean_accuracy == doctest::Approx(0.7));
    CHECK(s[1].std_accuracy == doctest::Approx(0.1));
    CHECK(s[1].mean_kappa == doctest::Approx(0.3));
    CHECK(s[0].gamma2 == doctest::Approx(std::pow(50.0, 1.0 / 1.1)));
}

TEST_CASE("gamma star selection") {
    std::vector<double> rising, flat(36, 0.8), kappa(36, 0.9);
    for (int i = 0; i < 36; ++i) rising.push_back(0.5 + 0.01 * i);
    CHECK(shaped(rising, kappa, 0.5).gamma_star == 1.0);
    CHECK(shaped(flat, kappa, 0.5).gamma_star == 9000.0);
    std::vector<double> two_peaks = flat;
    two_peaks[5] = 0.85;
    two_peaks[30] = 0.85;
    CHECK(shaped(two_peaks, kappa, 0.5).gamma_star == default_gamma_grid()[5]);
}

TEST_CASE("interpretation of three curve shapes") {
    const auto grid = default_gamma_grid();
    SUBCASE("accuracy rising while agreement falls") {
        std::vector<double> acc, kap;
        for (double g : grid) {
            const double soft = 1.0 - std::log10(g) / std::log10(9000.0);  // 0 at 9000, 1 at 1
            acc.push_back(0.787 + 0.083 * soft);
            kap.push_back(1.0 - 0.179 * soft);
        }
        // A slight dip at the two smallest values, as seen in practice.
        acc[34] = acc[33] - 0.002;
        acc[35] = acc[33] - 0.004;
        const ExplorationResult r = shaped(acc, kap, 0.787);
        CHECK(r.gamma_star == 3.0);
        CHECK(interpret(r) == Diagnosis::relaxation_beneficial);
    }
    SUBCASE("flat accuracy, best near the rigid end") {
        std::vector<double> acc(36, 0.795), kap(36, 0.97);
        acc[1] = 0.800;  // 8000
        const ExplorationResult r = shaped(acc, kap, 0.803);
        CHECK(r.gamma_star == 8000.0);
        CHECK(interpret(r) == Diagnosis::rigid_sufficient);
    }
    SUBCASE("gain at the smallest gamma with oscillating agreement") {
        std::vector<double> acc, kap;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            acc.push_back(0.905 + 0.0007 * static_cast<double>(i));
            kap.push_back(i % 2 ? 0.85 : 0.95);
        }
        kap[35] = 0.845;
        const ExplorationResult r = shaped(acc, kap, 0.9045);
        CHECK(r.gamma_star == 1.0);
        CHECK(interpret(r) == Diagnosis::rigid_but_sensitive);
    }
    SUBCASE("gain with low, oscillating agreement is inconclusive") {
        std::vector<double> acc, kap;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            acc.push_back(0.7 + 0.001 * static_cast<double>(i));
            kap.push_back(i % 2 ? 0.5 : 0.7);
        }
        const ExplorationResult r = shaped(acc, kap, 0.6);
        CHECK(interpret(r) == Diagnosis::inconclusive);
    }
    SUBCASE("no gain but best in the middle of the grid") {
        std::vector<double> acc(36, 0.8), kap(36, 0.9);
        acc[18] = 0.805;
        CHECK(interpret(shaped(acc, kap, 0.8)) == Diagnosis::inconclusive);
    }
    CHECK(std::string(diagnosis_name(Diagnosis::relaxation_beneficial)) == "RelaxationBeneficial");
    CHECK(std::string(diagnosis_name(Diagnosis::rigid_sufficient)) == "RigidSufficient");
    CHECK(std::string(diagnosis_name(Diagnosis::rigid_but_sensitive)) == "RigidButSensitive");
    CHECK(std::string(diagnosis_name(Diagnosis::inconclusive)) == "Inconclusive");
}

TEST_CASE("network baseline grid") {
    const auto g = nn_architecture_grid();
    CHECK(g.size() == 36);
    std::set<std::tuple<int, int, int>> unique;
    for (const auto& a : g) {
        CHECK(a.depth >= 1);
        CHECK(a.depth <= 3);
        CHECK(a.width >= 2);
        CHECK(a.width <= 7);
        unique.insert({a.depth, a.width, static_cast<int>(a.activation)});
    }
    CHECK(unique.size() == 36);
}

TEST_CASE("small exploration end to end") {
    Rng rng(3);
    const Dataset d = generate_gaussian_pair(200, 3, 2.0, rng);
    const ExploreConfig cfg = small_config();
    const ExplorationResult r = run_exploration(d, cfg);
    CHECK(r.depth == 3);
    CHECK_FALSE(r.depth_selection.has_value());
    CHECK(r.repetitions.size() == 3);
    CHECK(r.degenerate_repetitions == 0);
    CHECK(r.records.size() == 9);
    CHECK(r.per_gamma.size() == 3);
    for (std::size_t i = 0; i < r.records.size(); ++i) {
        CHECK(r.records[i].repetition == i / 3);
        CHECK(r.records[i].gamma == cfg.grid[i % 3]);
    }
    double dt = 0.0;
    for (const auto& s : r.repetitions) dt += s.dt_accuracy;
    CHECK(r.mean_dt_accuracy == doctest::Approx(dt / 3.0));
    CHECK(r.gamma_star == select_gamma_star(r));
    REQUIRE(r.significance.tests.size() == 1);
    CHECK(r.significance.tests[0].comparison == "NDT(gamma*) vs DT");
    CHECK(r.diagnosis == interpret(r, cfg.thresholds));

    ExploreConfig parallel = cfg;
    parallel.workers = 3;
    CHECK(result_to_json(run_exploration(d, parallel), "{}") == result_to_json(r, "{}"));
}

TEST_CASE("depth by cross-validation") {
    Rng rng(5);
    const Dataset d = generate_threshold_rules(400, 3, 0.0, rng);
    ExploreConfig cfg = small_config();
    cfg.depth.reset();
    const ExplorationResult r = run_exploration(d, cfg);
    REQUIRE(r.depth_selection.has_value());
    CHECK(r.depth == r.depth_selection->depth);
    CHECK(r.depth >= 1);
    CHECK(r.depth <= 10);
}

TEST_CASE("single-leaf seed trees") {
    // Constant feature: no split exists, every repetition is degenerate.
    std::vector<double> x(40, 1.0);
    std::vector<Label> y;
    for (int i = 0; i < 40; ++i) y.push_back(i % 2);
    const Dataset d(x, 1, y, {}, 2);
    CHECK_THROWS_AS(run_exploration(d, small_config()), DegenerateError);
}

TEST_CASE("configuration errors") {
    Rng rng(3);
    const Dataset d = generate_gaussian_pair(100, 2, 2.0, rng);
    ExploreConfig c = small_config();
    c.n_reps = 0;
    CHECK_THROWS_AS(run_exploration(d, c), ConfigError);
    c = small_config();
    c.grid = {1.0, 10.0};
    CHECK_THROWS_AS(run_exploration(d, c), ConfigError);
    c = small_config();
    c.train.batch_size = 0;
    CHECK_THROWS_AS(run_exploration(d, c), ConfigError);
}

TEST_CASE("network baseline uses every architecture on every repetition") {
    Rng rng(3);
    const Dataset d = generate_gaussian_pair(120, 2, 3.0, rng);
    TrainConfig tc;
    tc.epochs = 2;
    const NnBaselineResult nn = nn_baseline_cv(d, tc, 2, 9);
    CHECK(nn.scores.size() == 36);
    CHECK(nn.test_accuracy.size() == 2);
    double best_valid = -1.0;
    for (const auto& s : nn.scores) best_valid = std::max(best_valid, s.mean_valid_accuracy);
    for (const auto& s : nn.scores) {
        if (s.arch == nn.best) CHECK(s.mean_valid_accuracy == best_valid);
    }
    CHECK(nn.mean_test_accuracy == doctest::Approx((nn.test_accuracy[0] + nn.test_accuracy[1]) / 2.0));
}

TEST_CASE("artifacts") {
    namespace fs = std::filesystem;
    Rng rng(3);
    const Dataset d = generate_gaussian_pair(200, 3, 2.0, rng);
    const ExplorationResult r = run_exploration(d, small_config());
    const std::string run_config = R"({"seed":17,"reps":3,"data":"synthetic"})";
    const fs::path dir = fs::temp_directory_path() / "ndtx_artifacts_test";
    fs::remove_all(dir);
    write_artifacts(r, run_config, dir.string());
    for (const char* f : {"result.json", "accuracy_vs_gamma.csv", "kappa_vs_gamma.csv", "report.txt"})
        CHECK(fs::exists(dir / f));

    const auto doc = nlohmann::json::parse(slurp(dir / "result.json"));
    CHECK(doc["run_config"]["seed"] == 17);
    CHECK(doc["config"]["master_seed"] == 17);
    CHECK(doc["gamma_star"] == r.gamma_star);
    CHECK(doc["records"].size() == r.records.size());

    std::istringstream csv(slurp(dir / "accuracy_vs_gamma.csv"));
    std::string line;
    std::getline(csv, line);
    CHECK(line.rfind("# run_config: {", 0) == 0);
    std::getline(csv, line);
    CHECK(line == "gamma,mean_accuracy,std_accuracy");
    std::vector<double> gammas;
    while (std::getline(csv, line)) gammas.push_back(std::stod(line.substr(0, line.find(','))));
    CHECK(gammas == small_config().grid);
    CHECK(slurp(dir / "kappa_vs_gamma.csv").find("gamma,mean_kappa,std_kappa\n") != std::string::npos);

    const std::string report = slurp(dir / "report.txt");
    for (const char* key : {"gamma_star:", "delta:", "kappa_star:", "diagnosis:", "p=", "degenerate skipped:"})
        CHECK(report.find(key) != std::string::npos);
    fs::remove_all(dir);

    // A regular file where the directory should be: nothing is left behind.
    const fs::path blocker = fs::temp_directory_path() / "ndtx_artifacts_blocker";
    { std::ofstream(blocker) << "x"; }
    CHECK_THROWS_AS(write_artifacts(r, run_config, blocker.string()), ConfigError);
    fs::remove(blocker);
}

}  // TEST_SUITE

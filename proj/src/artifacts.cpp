#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "format.hpp"
#include "ndtx/error.hpp"
#include "ndtx/explore.hpp"

namespace ndtx {

using nlohmann::json;
using detail::format_real;

namespace {

json parse_run_config(const std::string& text) {
    if (text.empty()) return json::object();
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("run configuration is not valid JSON: ") + e.what());
    }
}

json config_json(const ExploreConfig& c) {
    return {{"depth", c.depth ? json(*c.depth) : json("auto")},
            {"depth_grid", c.depth_grid},
            {"cv_folds", c.cv_folds},
            {"min_leaf", c.min_leaf},
            {"gamma_grid", c.grid},
            {"n_reps", c.n_reps},
            {"master_seed", c.master_seed},
            {"train",
             {{"epochs", c.train.epochs},
              {"batch_size", c.train.batch_size},
              {"patience", c.train.patience},
              {"min_delta", c.train.min_delta},
              {"shuffle", c.train.shuffle},
              {"adam",
               {{"step_size", c.train.adam.step_size},
                {"decay1", c.train.adam.decay1},
                {"decay2", c.train.adam.decay2},
                {"epsilon", c.train.adam.epsilon}}}}},
            {"fractions", {{"train", c.fractions.train}, {"valid", c.fractions.valid}, {"test", c.fractions.test}}},
            {"thresholds",
             {{"delta_gain", c.thresholds.delta_gain},
              {"kappa_high", c.thresholds.kappa_high},
              {"kappa_monotone_tol", c.thresholds.kappa_monotone_tol}}},
            {"alpha", c.alpha},
            {"nn_baseline", c.nn_baseline}};
}

json test_json(const TestOutcome& t) {
    json j = {{"comparison", t.comparison}, {"degenerate", t.degenerate}, {"reject_h0", t.reject}};
    if (!t.degenerate) {
        j["statistic"] = t.test.statistic;
        j["w_plus"] = t.test.w_plus;
        j["w_minus"] = t.test.w_minus;
        j["p_value"] = t.test.p_value;
        j["method"] = t.test.method == WilcoxonMethod::exact ? "exact" : "normal";
    }
    j["n_used"] = t.test.n_used;
    j["n_zero_dropped"] = t.test.n_zero;
    return j;
}

std::string config_comment(const std::string& run_config_json) {
    return "# run_config: " + parse_run_config(run_config_json).dump() + "\n";
}

}  // namespace

std::string result_to_json(const ExplorationResult& r, const std::string& run_config_json) {
    json reps = json::array();
    for (const auto& s : r.repetitions) {
        reps.push_back({{"repetition", s.repetition},
                        {"split_seed", s.split_seed},
                        {"degenerate", s.degenerate},
                        {"dt_accuracy", s.dt_accuracy},
                        {"leaves", s.leaves},
                        {"depth", s.depth}});
    }
    json records = json::array();
    for (const auto& rec : r.records) {
        records.push_back({{"repetition", rec.repetition},
                           {"gamma", rec.gamma},
                           {"gamma2", rec.gamma2},
                           {"dt_accuracy", rec.dt_accuracy},
                           {"ndt_accuracy", rec.ndt_accuracy},
                           {"kappa", rec.kappa},
                           {"kappa_degenerate", rec.kappa_degenerate},
                           {"best_epoch", rec.best_epoch},
                           {"stopped_epoch", rec.stopped_epoch},
                           {"best_valid_loss", rec.best_valid_loss},
                           {"train_seed", rec.train_seed}});
    }
    json per_gamma = json::array();
    for (const auto& s : r.per_gamma) {
        per_gamma.push_back({{"gamma", s.gamma},
                             {"gamma2", s.gamma2},
                             {"mean_accuracy", s.mean_accuracy},
                             {"std_accuracy", s.std_accuracy},
                             {"mean_kappa", s.mean_kappa},
                             {"std_kappa", s.std_kappa},
                             {"n", s.n}});
    }
    json tests = json::array();
    for (const auto& t : r.significance.tests) tests.push_back(test_json(t));

    json depth_sel = nullptr;
    if (r.depth_selection) {
        depth_sel = {{"grid", r.depth_selection->grid},
                     {"mean_accuracy", r.depth_selection->mean_accuracy},
                     {"selected", r.depth_selection->depth},
                     {"folds", r.config.cv_folds}};
    }
    json nn = nullptr;
    if (r.nn) {
        json scores = json::array();
        for (const auto& s : r.nn->scores) {
            scores.push_back({{"depth", s.arch.depth},
                              {"width", s.arch.width},
                              {"activation", activation_name(s.arch.activation)},
                              {"mean_valid_accuracy", s.mean_valid_accuracy},
                              {"mean_test_accuracy", s.mean_test_accuracy}});
        }
        nn = {{"configurations", r.nn->scores.size()},
              {"best",
               {{"depth", r.nn->best.depth},
                {"width", r.nn->best.width},
                {"activation", activation_name(r.nn->best.activation)}}},
              {"mean_test_accuracy", r.nn->mean_test_accuracy},
              {"test_accuracy", r.nn->test_accuracy},
              {"scores", std::move(scores)}};
    }
    const GammaSummary& star = r.summary_at(r.gamma_star);
    json doc = {{"format", "ndtx-exploration"},
                {"version", 1},
                {"run_config", parse_run_config(run_config_json)},
                {"config", config_json(r.config)},
                {"depth", r.depth},
                {"depth_selection", std::move(depth_sel)},
                {"gamma_star", r.gamma_star},
                {"mean_dt_accuracy", r.mean_dt_accuracy},
                {"mean_ndt_accuracy_at_gamma_star", star.mean_accuracy},
                {"delta", star.mean_accuracy - r.mean_dt_accuracy},
                {"kappa_star", star.mean_kappa},
                {"diagnosis", diagnosis_name(r.diagnosis)},
                {"degenerate_repetitions", r.degenerate_repetitions},
                {"significance", {{"alpha", r.significance.alpha}, {"tests", std::move(tests)}}},
                {"nn_baseline", std::move(nn)},
                {"per_gamma", std::move(per_gamma)},
                {"repetitions", std::move(reps)},
                {"records", std::move(records)}};
    return doc.dump(2) + "\n";
}

std::string accuracy_series_csv(const ExplorationResult& r, const std::string& run_config_json) {
    std::string out = config_comment(run_config_json);
    out += "gamma,mean_accuracy,std_accuracy\n";
    for (const auto& s : r.per_gamma)
        out += format_real(s.gamma) + "," + format_real(s.mean_accuracy) + "," + format_real(s.std_accuracy) + "\n";
    return out;
}

std::string kappa_series_csv(const ExplorationResult& r, const std::string& run_config_json) {
    std::string out = config_comment(run_config_json);
    out += "gamma,mean_kappa,std_kappa\n";
    for (const auto& s : r.per_gamma)
        out += format_real(s.gamma) + "," + format_real(s.mean_kappa) + "," + format_real(s.std_kappa) + "\n";
    return out;
}

std::string report_text(const ExplorationResult& r, const std::string& run_config_json) {
    const GammaSummary& star = r.summary_at(r.gamma_star);
    std::ostringstream o;
    o << "ndtx exploration report\n";
    o << "run_config: " << parse_run_config(run_config_json).dump() << "\n";
    o << "master_seed: " << r.config.master_seed << "\n";
    o << "tree_depth: " << r.depth << (r.depth_selection ? " (selected by " : " (fixed)");
    if (r.depth_selection) o << r.config.cv_folds << "-fold CV over 1.." << r.depth_selection->grid.back() << ")";
    o << "\n";
    o << "repetitions: " << r.repetitions.size() << " (degenerate skipped: " << r.degenerate_repetitions << ")\n";
    o << "gamma_star: " << format_real(r.gamma_star) << "\n";
    o << "mean_dt_accuracy: " << format_real(r.mean_dt_accuracy) << "\n";
    o << "mean_ndt_accuracy_at_gamma_star: " << format_real(star.mean_accuracy) << "\n";
    o << "delta: " << format_real(star.mean_accuracy - r.mean_dt_accuracy) << "\n";
    o << "kappa_star: " << format_real(star.mean_kappa) << "\n";
    o << "diagnosis: " << diagnosis_name(r.diagnosis) << "\n";
    if (r.nn) {
        o << "nn_baseline: depth=" << r.nn->best.depth << " width=" << r.nn->best.width
          << " activation=" << activation_name(r.nn->best.activation)
          << " mean_test_accuracy=" << format_real(r.nn->mean_test_accuracy) << " configurations=" << r.nn->scores.size()
          << "\n";
    }
    o << "wilcoxon (two-sided, alpha=" << format_real(r.significance.alpha) << "):\n";
    if (r.significance.tests.empty()) o << "  not run (fewer than 2 usable repetitions)\n";
    for (const auto& t : r.significance.tests) {
        o << "  " << t.comparison << ": ";
        if (t.degenerate) {
            o << "degenerate (no nonzero paired differences)\n";
        } else {
            o << "p=" << format_real(t.test.p_value) << " W=" << format_real(t.test.statistic)
              << " m=" << t.test.n_used << " zeros_dropped=" << t.test.n_zero
              << " method=" << (t.test.method == WilcoxonMethod::exact ? "exact" : "normal")
              << " reject_h0=" << (t.reject ? "yes" : "no") << "\n";
        }
    }
    return o.str();
}

void write_artifacts(const ExplorationResult& r, const std::string& run_config_json, const std::string& out_dir) {
    namespace fs = std::filesystem;
    const fs::path dir(out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw ConfigError("cannot create output directory '" + out_dir + "'");

    const std::pair<const char*, std::string> files[] = {
        {"result.json", result_to_json(r, run_config_json)},
        {"accuracy_vs_gamma.csv", accuracy_series_csv(r, run_config_json)},
        {"kappa_vs_gamma.csv", kappa_series_csv(r, run_config_json)},
        {"report.txt", report_text(r, run_config_json)},
    };
    std::vector<fs::path> written;
    for (const auto& [name, content] : files) {
        const fs::path p = dir / name;
        std::ofstream out(p, std::ios::binary | std::ios::trunc);
        if (out) out << content;
        if (!out) {
            out.close();
            fs::remove(p, ec);
            for (const auto& w : written) fs::remove(w, ec);
            throw ConfigError("cannot write '" + p.string() + "'");
        }
        written.push_back(p);
    }
}

}  // namespace ndtx

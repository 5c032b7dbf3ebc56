#include "ndtx/ndtx.h"

#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "ndtx/dataset.hpp"
#include "ndtx/error.hpp"
#include "ndtx/explore.hpp"
#include "ndtx/ndt.hpp"
#include "ndtx/tree.hpp"
#include "ndtx/validate.hpp"

struct ndtx_dataset {
    ndtx::Dataset value;
};
struct ndtx_tree {
    ndtx::DecisionTree value;
};
struct ndtx_model {
    ndtx::NdtModel value;
};
struct ndtx_result {
    ndtx::ExplorationResult value;
    std::string run_config_json;
};

namespace {

using nlohmann::json;

thread_local std::string g_last_error;

template <class Fn>
ndtx_status guarded(Fn&& fn) noexcept {
    try {
        g_last_error.clear();
        fn();
        return NDTX_OK;
    } catch (const ndtx::Error& e) {
        g_last_error = e.what();
        return static_cast<ndtx_status>(e.kind());
    } catch (const json::exception& e) {
        g_last_error = std::string("invalid JSON: ") + e.what();
        return NDTX_ERR_CONFIG;
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
        return NDTX_ERR_INTERNAL;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return NDTX_ERR_INTERNAL;
    } catch (...) {
        g_last_error = "unknown error";
        return NDTX_ERR_INTERNAL;
    }
}

void require(const void* p, const char* what) {
    if (!p) throw ndtx::ConfigError(std::string(what) + " must not be NULL");
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key) || j[key].is_null()) return fallback;
    try {
        return j[key].get<T>();
    } catch (const json::exception&) {
        throw ndtx::ConfigError(std::string("configuration key '") + key + "' has the wrong type");
    }
}

// Resolves defaults into an ExploreConfig and returns the resolved configuration
// object that gets embedded in the artifacts.
std::pair<ndtx::ExploreConfig, json> resolve_run_config(const char* text) {
    json in = text && *text ? json::parse(text) : json::object();
    if (!in.is_object()) throw ndtx::ConfigError("configuration must be a JSON object");
    if (!in.contains("seed") || !in["seed"].is_number_integer())
        throw ndtx::ConfigError("configuration needs an integer 'seed'");

    ndtx::ExploreConfig cfg;
    cfg.master_seed = in["seed"].get<std::uint64_t>();
    if (in.contains("depth") && in["depth"].is_string()) {
        if (in["depth"].get<std::string>() != "auto") throw ndtx::ConfigError("depth must be an integer or 'auto'");
        cfg.depth.reset();
    } else {
        cfg.depth = get_or<int>(in, "depth", 4);
    }
    const int cv_max = get_or<int>(in, "cv_max_depth", 10);
    if (cv_max < 1) throw ndtx::ConfigError("cv_max_depth must be >= 1");
    cfg.depth_grid.clear();
    for (int k = 1; k <= cv_max; ++k) cfg.depth_grid.push_back(k);
    cfg.cv_folds = get_or<int>(in, "cv_folds", 5);
    if (in.contains("gammas")) cfg.grid = in["gammas"].get<std::vector<double>>();
    ndtx::validate_gamma_grid(cfg.grid);
    const auto reps = get_or<long long>(in, "reps", 30);
    if (reps < 1) throw ndtx::ConfigError("reps must be >= 1");
    cfg.n_reps = static_cast<std::size_t>(reps);
    cfg.train.epochs = get_or<int>(in, "epochs", cfg.train.epochs);
    cfg.train.batch_size = get_or<int>(in, "batch", cfg.train.batch_size);
    cfg.train.patience = get_or<int>(in, "patience", cfg.train.patience);
    cfg.train.validate();
    cfg.nn_baseline = get_or<bool>(in, "nn_baseline", false);
    const auto workers = get_or<long long>(in, "workers", 1);
    if (workers < 1) throw ndtx::ConfigError("workers must be >= 1");
    cfg.workers = static_cast<std::size_t>(workers);

    json resolved = in;
    resolved.erase("workers");
    resolved["seed"] = cfg.master_seed;
    resolved["depth"] = cfg.depth ? json(*cfg.depth) : json("auto");
    resolved["cv_max_depth"] = cv_max;
    resolved["cv_folds"] = cfg.cv_folds;
    resolved["gammas"] = cfg.grid;
    resolved["reps"] = cfg.n_reps;
    resolved["epochs"] = cfg.train.epochs;
    resolved["batch"] = cfg.train.batch_size;
    resolved["patience"] = cfg.train.patience;
    resolved["nn_baseline"] = cfg.nn_baseline;
    return {std::move(cfg), std::move(resolved)};
}

}  // namespace

extern "C" {

const char* ndtx_version(void) { return "1.0.0"; }

const char* ndtx_last_error(void) { return g_last_error.c_str(); }

const char* ndtx_status_name(ndtx_status status) {
    switch (status) {
        case NDTX_OK: return "ok";
        case NDTX_ERR_CONFIG: return "config";
        case NDTX_ERR_DATA: return "data";
        case NDTX_ERR_NUMERIC: return "numeric";
        case NDTX_ERR_INTERNAL: break;
    }
    return "internal";
}

void ndtx_string_free(char* s) { std::free(s); }

ndtx_status ndtx_dataset_load_csv(const char* path, const char* target_name, size_t target_index,
                                  ndtx_categoricals policy, ndtx_dataset** out) {
    return guarded([&] {
        require(path, "path");
        require(out, "out");
        *out = nullptr;
        ndtx::ColumnRef target = target_name ? ndtx::ColumnRef(std::string(target_name)) : ndtx::ColumnRef(target_index);
        ndtx::CsvOptions opts;
        opts.categoricals =
            policy == NDTX_CATEGORICALS_ONEHOT ? ndtx::CategoricalPolicy::one_hot : ndtx::CategoricalPolicy::drop;
        *out = new ndtx_dataset{ndtx::load_csv(path, target, opts)};
    });
}

ndtx_status ndtx_dataset_from_arrays(const double* features, size_t n_rows, size_t n_features, const int* labels,
                                     int class_count, ndtx_dataset** out) {
    return guarded([&] {
        require(features, "features");
        require(labels, "labels");
        require(out, "out");
        *out = nullptr;
        std::vector<double> x(features, features + n_rows * n_features);
        std::vector<ndtx::Label> y(labels, labels + n_rows);
        *out = new ndtx_dataset{ndtx::Dataset(std::move(x), n_features, std::move(y), {}, class_count)};
    });
}

ndtx_status ndtx_dataset_gaussian_pair(size_t n, size_t d, double separation, uint64_t seed, ndtx_dataset** out) {
    return guarded([&] {
        require(out, "out");
        *out = nullptr;
        ndtx::Rng rng(ndtx::child_seed(seed, "gaussian-pair", 0));
        *out = new ndtx_dataset{ndtx::generate_gaussian_pair(n, d, separation, rng)};
    });
}

ndtx_status ndtx_dataset_threshold_rules(size_t n, size_t d, double label_noise, size_t levels, uint64_t seed, ndtx_dataset** out) {
    return guarded([&] {
        require(out, "out");
        *out = nullptr;
        ndtx::Rng rng(ndtx::child_seed(seed, "threshold-rules", 0));
        *out = new ndtx_dataset{ndtx::generate_threshold_rules(n, d, label_noise, rng, levels)};
    });
}

ndtx_status ndtx_dataset_write_csv(const ndtx_dataset* d, const char* path) {
    return guarded([&] {
        require(d, "dataset");
        require(path, "path");
        ndtx::write_csv(d->value, path);
    });
}

size_t ndtx_dataset_rows(const ndtx_dataset* d) { return d ? d->value.size() : 0; }
size_t ndtx_dataset_features(const ndtx_dataset* d) { return d ? d->value.n_features() : 0; }
int ndtx_dataset_classes(const ndtx_dataset* d) { return d ? d->value.class_count() : 0; }
void ndtx_dataset_free(ndtx_dataset* d) { delete d; }

ndtx_status ndtx_select_depth(const ndtx_dataset* d, int max_depth, int folds, uint64_t seed, int* depth) {
    return guarded([&] {
        require(d, "dataset");
        require(depth, "depth");
        if (max_depth < 1) throw ndtx::ConfigError("max_depth must be >= 1");
        std::vector<int> grid;
        for (int k = 1; k <= max_depth; ++k) grid.push_back(k);
        ndtx::Rng rng(ndtx::child_seed(seed, "depth-cv", 0));
        *depth = ndtx::select_depth_cv(d->value, grid, folds, rng).depth;
    });
}

ndtx_status ndtx_tree_fit(const ndtx_dataset* d, int max_depth, int min_leaf, ndtx_tree** out) {
    return guarded([&] {
        require(d, "dataset");
        require(out, "out");
        *out = nullptr;
        const auto rows = ndtx::all_rows(d->value);
        *out = new ndtx_tree{ndtx::fit_tree({&d->value, rows}, {max_depth, min_leaf})};
    });
}

ndtx_status ndtx_tree_from_json(const char* text, ndtx_tree** out) {
    return guarded([&] {
        require(text, "json");
        require(out, "out");
        *out = nullptr;
        *out = new ndtx_tree{ndtx::tree_from_json(text)};
    });
}

ndtx_status ndtx_tree_to_json(const ndtx_tree* t, char** text) {
    return guarded([&] {
        require(t, "tree");
        require(text, "out");
        *text = dup_string(ndtx::tree_to_json(t->value));
    });
}

ndtx_status ndtx_tree_predict(const ndtx_tree* t, const double* x, size_t n_features, int* label, int* leaf) {
    return guarded([&] {
        require(t, "tree");
        require(x, "x");
        const auto p = ndtx::predict_tree(t->value, std::span<const double>(x, n_features));
        if (label) *label = p.label;
        if (leaf) *leaf = p.leaf;
    });
}

size_t ndtx_tree_leaves(const ndtx_tree* t) { return t ? t->value.leaf_count() : 0; }
int ndtx_tree_depth(const ndtx_tree* t) { return t ? t->value.depth() : 0; }
void ndtx_tree_free(ndtx_tree* t) { delete t; }

ndtx_status ndtx_gamma2_of(double gamma1, double* gamma2) {
    return guarded([&] {
        require(gamma2, "gamma2");
        *gamma2 = ndtx::gamma2_of(gamma1);
    });
}

ndtx_status ndtx_model_compile(const ndtx_tree* t, double gamma1, ndtx_model** out) {
    return guarded([&] {
        require(t, "tree");
        require(out, "out");
        *out = nullptr;
        *out = new ndtx_model{ndtx::compile_from_tree(t->value, gamma1, ndtx::gamma2_of(gamma1))};
    });
}

ndtx_status ndtx_model_compile_gammas(const ndtx_tree* t, double gamma1, double gamma2, ndtx_model** out) {
    return guarded([&] {
        require(t, "tree");
        require(out, "out");
        *out = nullptr;
        *out = new ndtx_model{ndtx::compile_from_tree(t->value, gamma1, gamma2)};
    });
}

ndtx_status ndtx_model_from_json(const char* text, ndtx_model** out) {
    return guarded([&] {
        require(text, "json");
        require(out, "out");
        *out = nullptr;
        *out = new ndtx_model{ndtx::model_from_json(text)};
    });
}

ndtx_status ndtx_model_to_json(const ndtx_model* m, char** text) {
    return guarded([&] {
        require(m, "model");
        require(text, "out");
        *text = dup_string(ndtx::model_to_json(m->value));
    });
}

ndtx_status ndtx_model_predict_proba(const ndtx_model* m, const double* x, size_t n_rows, size_t n_features,
                                     double* probs) {
    return guarded([&] {
        require(m, "model");
        require(x, "x");
        require(probs, "probs");
        Eigen::MatrixXd cols(static_cast<Eigen::Index>(n_features), static_cast<Eigen::Index>(n_rows));
        for (size_t r = 0; r < n_rows; ++r)
            for (size_t f = 0; f < n_features; ++f) cols(f, r) = x[r * n_features + f];
        const auto a = ndtx::forward(m->value, cols);
        const auto c = static_cast<size_t>(a.probs.rows());
        for (size_t r = 0; r < n_rows; ++r)
            for (size_t k = 0; k < c; ++k) probs[r * c + k] = a.probs(k, r);
    });
}

int ndtx_model_classes(const ndtx_model* m) { return m ? m->value.class_count() : 0; }
void ndtx_model_free(ndtx_model* m) { delete m; }

ndtx_status ndtx_explore(const ndtx_dataset* d, const char* config_json, ndtx_result** out) {
    return guarded([&] {
        require(d, "dataset");
        require(out, "out");
        *out = nullptr;
        auto [cfg, resolved] = resolve_run_config(config_json);
        auto result = std::make_unique<ndtx_result>();
        result->value = ndtx::run_exploration(d->value, cfg);
        result->run_config_json = resolved.dump();
        *out = result.release();
    });
}

ndtx_status ndtx_result_to_json(const ndtx_result* r, char** text) {
    return guarded([&] {
        require(r, "result");
        require(text, "out");
        *text = dup_string(ndtx::result_to_json(r->value, r->run_config_json));
    });
}

ndtx_status ndtx_result_report(const ndtx_result* r, char** text) {
    return guarded([&] {
        require(r, "result");
        require(text, "out");
        *text = dup_string(ndtx::report_text(r->value, r->run_config_json));
    });
}

ndtx_status ndtx_result_write_artifacts(const ndtx_result* r, const char* out_dir) {
    return guarded([&] {
        require(r, "result");
        require(out_dir, "out_dir");
        ndtx::write_artifacts(r->value, r->run_config_json, out_dir);
    });
}

double ndtx_result_gamma_star(const ndtx_result* r) { return r ? r->value.gamma_star : 0.0; }

const char* ndtx_result_diagnosis(const ndtx_result* r) {
    return r ? ndtx::diagnosis_name(r->value.diagnosis) : "";
}

void ndtx_result_free(ndtx_result* r) { delete r; }

ndtx_status ndtx_validate(uint64_t seed, const char* model_json, const char* tree_json, char** report,
                          int* all_passed) {
    return guarded([&] {
        require(report, "report");
        require(all_passed, "all_passed");
        *report = nullptr;
        std::vector<ndtx::CheckResult> checks = ndtx::run_builtin_checks(seed);
        if (model_json && tree_json) {
            const auto model = ndtx::model_from_json(model_json);
            const auto tree = ndtx::tree_from_json(tree_json);
            checks.push_back(ndtx::check_model_against_tree(model, tree, seed));
        } else if (model_json || tree_json) {
            throw ndtx::ConfigError("model and tree must be given together");
        }
        std::ostringstream o;
        bool ok = true;
        for (const auto& c : checks) {
            o << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << "\n";
            ok = ok && c.passed;
        }
        *all_passed = ok ? 1 : 0;
        *report = dup_string(o.str());
    });
}

}  // extern "C"

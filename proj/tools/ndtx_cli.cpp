// ndtx command-line front end. Talks to the library only through the C API.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ndtx/ndtx.h"

namespace {

using nlohmann::json;

struct Failure {
    ndtx_status status;
    std::string message;
};

void check(ndtx_status s) {
    if (s != NDTX_OK) throw Failure{s, ndtx_last_error()};
}

[[noreturn]] void fail(ndtx_status s, std::string message) { throw Failure{s, std::move(message)}; }

std::string one_line(std::string s) {
    for (char& c : s) {
        if (c == '\n' || c == '\r') c = ' ';
    }
    return s;
}

struct StringDeleter {
    void operator()(char* p) const { ndtx_string_free(p); }
};
using OwnedString = std::unique_ptr<char, StringDeleter>;

template <class T, void (*Free)(T*)>
struct HandleDeleter {
    void operator()(T* p) const { Free(p); }
};
using Dataset = std::unique_ptr<ndtx_dataset, HandleDeleter<ndtx_dataset, ndtx_dataset_free>>;
using Tree = std::unique_ptr<ndtx_tree, HandleDeleter<ndtx_tree, ndtx_tree_free>>;
using Model = std::unique_ptr<ndtx_model, HandleDeleter<ndtx_model, ndtx_model_free>>;
using Result = std::unique_ptr<ndtx_result, HandleDeleter<ndtx_result, ndtx_result_free>>;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(NDTX_ERR_CONFIG, "cannot read '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (out) out << text;
    if (!out) {
        out.close();
        std::remove(path.c_str());
        fail(NDTX_ERR_CONFIG, "cannot write '" + path + "'");
    }
}

struct DataOptions {
    std::string source;
    std::string target = "label";
    std::string categoricals = "drop";
};

void add_data_options(CLI::App* cmd, DataOptions& d) {
    cmd->add_option("--data", d.source, "CSV path, 'synthetic' (Gaussian pair) or 'synthetic-rules'")->required();
    cmd->add_option("--target", d.target, "target column name, or zero-based index when all digits")
        ->capture_default_str();
    cmd->add_option("--categoricals", d.categoricals, "non-numeric feature columns")
        ->check(CLI::IsMember({"drop", "onehot"}))
        ->capture_default_str();
}

Dataset load_data(const DataOptions& d, std::uint64_t seed) {
    ndtx_dataset* raw = nullptr;
    if (d.source == "synthetic") {
        check(ndtx_dataset_gaussian_pair(1000, 3, 2.0, seed, &raw));
    } else if (d.source == "synthetic-rules") {
        check(ndtx_dataset_threshold_rules(1000, 3, 0.02, 20, seed, &raw));
    } else {
        const bool by_index = !d.target.empty() && d.target.find_first_not_of("0123456789") == std::string::npos;
        const auto policy = d.categoricals == "onehot" ? NDTX_CATEGORICALS_ONEHOT : NDTX_CATEGORICALS_DROP;
        check(ndtx_dataset_load_csv(d.source.c_str(), by_index ? nullptr : d.target.c_str(),
                                    by_index ? std::stoul(d.target) : 0, policy, &raw));
    }
    return Dataset(raw);
}

// "auto" or a positive integer.
std::optional<int> parse_depth(const std::string& s) {
    if (s == "auto") return std::nullopt;
    try {
        std::size_t used = 0;
        const int v = std::stoi(s, &used);
        if (used == s.size() && v >= 1) return v;
    } catch (const std::exception&) {
    }
    fail(NDTX_ERR_CONFIG, "--depth must be a positive integer or 'auto', got '" + s + "'");
}

std::vector<double> parse_gammas(const std::string& s) {
    std::vector<double> out;
    std::stringstream in(s);
    std::string item;
    while (std::getline(in, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            fail(NDTX_ERR_CONFIG, "--gammas has a non-numeric entry '" + item + "'");
        }
    }
    return out;
}

struct ExploreArgs {
    DataOptions data;
    std::string depth = "4";
    std::string gammas;
    std::optional<long long> reps, epochs, batch, patience;
    long long workers = 1;
    bool nn_baseline = false;
    std::uint64_t seed = 0;
    std::string out = "ndtx_out";
};

int run_explore(const ExploreArgs& a) {
    json cfg = {{"seed", a.seed}, {"workers", a.workers}, {"nn_baseline", a.nn_baseline}};
    const auto depth = parse_depth(a.depth);
    cfg["depth"] = depth ? json(*depth) : json("auto");
    if (!a.gammas.empty()) cfg["gammas"] = parse_gammas(a.gammas);
    if (a.reps) cfg["reps"] = *a.reps;
    if (a.epochs) cfg["epochs"] = *a.epochs;
    if (a.batch) cfg["batch"] = *a.batch;
    if (a.patience) cfg["patience"] = *a.patience;
    cfg["data"] = a.data.source;
    if (a.data.source != "synthetic" && a.data.source != "synthetic-rules") {
        cfg["target"] = a.data.target;
        cfg["categoricals"] = a.data.categoricals;
    }

    Dataset data = load_data(a.data, a.seed);
    ndtx_result* raw = nullptr;
    check(ndtx_explore(data.get(), cfg.dump().c_str(), &raw));
    Result result(raw);
    check(ndtx_result_write_artifacts(result.get(), a.out.c_str()));
    char* report = nullptr;
    check(ndtx_result_report(result.get(), &report));
    OwnedString owned(report);
    std::cout << report;
    return 0;
}

int run_inspect(const DataOptions& d, const std::string& depth_text, int min_leaf, std::uint64_t seed) {
    Dataset data = load_data(d, seed);
    int depth = 0;
    if (const auto fixed = parse_depth(depth_text)) {
        depth = *fixed;
    } else {
        check(ndtx_select_depth(data.get(), 10, 5, seed, &depth));
    }
    ndtx_tree* raw = nullptr;
    check(ndtx_tree_fit(data.get(), depth, min_leaf, &raw));
    Tree tree(raw);
    char* text = nullptr;
    check(ndtx_tree_to_json(tree.get(), &text));
    OwnedString owned(text);
    std::cout << text << "\n";
    return 0;
}

int run_compile(const std::string& tree_path, double gamma, const std::string& out) {
    const std::string text = read_file(tree_path);
    ndtx_tree* raw_tree = nullptr;
    check(ndtx_tree_from_json(text.c_str(), &raw_tree));
    Tree tree(raw_tree);
    ndtx_model* raw = nullptr;
    check(ndtx_model_compile(tree.get(), gamma, &raw));
    Model model(raw);
    char* json_text = nullptr;
    check(ndtx_model_to_json(model.get(), &json_text));
    OwnedString owned(json_text);
    write_text(out, std::string(json_text) + "\n");
    return 0;
}

int run_validate(std::uint64_t seed, const std::string& model_path, const std::string& tree_path) {
    if (model_path.empty() != tree_path.empty()) fail(NDTX_ERR_CONFIG, "--model and --tree must be given together");
    std::string model_text, tree_text;
    if (!model_path.empty()) {
        model_text = read_file(model_path);
        tree_text = read_file(tree_path);
    }
    char* report = nullptr;
    int passed = 0;
    check(ndtx_validate(seed, model_path.empty() ? nullptr : model_text.c_str(),
                        tree_path.empty() ? nullptr : tree_text.c_str(), &report, &passed));
    OwnedString owned(report);
    std::cout << report;
    return passed ? 0 : 1;
}

int run_synth(const std::string& kind, std::size_t n, std::size_t d, double separation, double noise,
              std::size_t levels, std::uint64_t seed, const std::string& out) {
    ndtx_dataset* raw = nullptr;
    if (kind == "gaussian") {
        check(ndtx_dataset_gaussian_pair(n, d, separation, seed, &raw));
    } else {
        check(ndtx_dataset_threshold_rules(n, d, noise, levels, seed, &raw));
    }
    Dataset data(raw);
    check(ndtx_dataset_write_csv(data.get(), out.c_str()));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Tree-initialized network exploration"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(ndtx_version()));

    ExploreArgs ex;
    auto* explore = app.add_subcommand("explore", "sweep gamma over repeated splits and write artifacts");
    add_data_options(explore, ex.data);
    explore->add_option("--depth", ex.depth, "tree depth or 'auto' (5-fold CV over 1..10)")->capture_default_str();
    explore->add_option("--gammas", ex.gammas, "comma-separated decreasing gamma grid (default: 36 values)");
    explore->add_option("--reps", ex.reps, "repetitions (default 30)");
    explore->add_option("--seed", ex.seed, "master seed")->required();
    explore->add_option("--epochs", ex.epochs, "maximum epochs (default 100)");
    explore->add_option("--batch", ex.batch, "mini-batch size (default 32)");
    explore->add_option("--patience", ex.patience, "early-stopping patience (default 10)");
    explore->add_flag("--nn-baseline", ex.nn_baseline, "also tune a plain network baseline");
    explore->add_option("--workers", ex.workers, "parallel workers (outputs do not depend on it)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    explore->add_option("--out", ex.out, "output directory")->capture_default_str();

    DataOptions inspect_data;
    std::string inspect_depth = "4";
    int inspect_min_leaf = 1;
    std::uint64_t inspect_seed = 0;
    auto* inspect = app.add_subcommand("inspect-tree", "fit one tree on the full data and print its JSON");
    add_data_options(inspect, inspect_data);
    inspect->add_option("--depth", inspect_depth, "tree depth or 'auto'")->capture_default_str();
    inspect->add_option("--min-leaf", inspect_min_leaf, "minimum samples per leaf")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    inspect->add_option("--seed", inspect_seed, "seed for synthetic data and depth CV")->required();

    std::string compile_tree, compile_out;
    double compile_gamma = 100.0;
    auto* compile = app.add_subcommand("compile", "compile a tree JSON into a network JSON");
    compile->add_option("--tree", compile_tree, "tree JSON file")->required();
    compile->add_option("--gamma", compile_gamma, "gamma1; gamma2 is derived from it")->capture_default_str();
    compile->add_option("--out", compile_out, "output file (default stdout)");

    std::uint64_t validate_seed = 0;
    std::string validate_model, validate_tree;
    auto* validate = app.add_subcommand("validate", "run the built-in invariant checks");
    validate->add_option("--seed", validate_seed, "fixture seed")->required();
    validate->add_option("--model", validate_model, "stored network JSON to check against --tree");
    validate->add_option("--tree", validate_tree, "tree JSON the model was compiled from");

    std::string synth_kind = "gaussian", synth_out;
    std::size_t synth_n = 1000, synth_d = 3, synth_levels = 20;
    double synth_sep = 2.0, synth_noise = 0.02;
    std::uint64_t synth_seed = 0;
    auto* synth = app.add_subcommand("synth", "write a synthetic dataset as CSV");
    synth->add_option("--kind", synth_kind)->check(CLI::IsMember({"gaussian", "rules"}))->capture_default_str();
    synth->add_option("--n", synth_n)->capture_default_str();
    synth->add_option("--d", synth_d)->capture_default_str();
    synth->add_option("--separation", synth_sep, "gaussian mean distance")->capture_default_str();
    synth->add_option("--noise", synth_noise, "rules label-flip rate")->capture_default_str();
    synth->add_option("--levels", synth_levels, "rules feature levels, 0 for continuous")->capture_default_str();
    synth->add_option("--seed", synth_seed)->required();
    synth->add_option("--out", synth_out, "CSV path")->required();

    try {
        try {
            app.parse(argc, argv);
        } catch (const CLI::Success& e) {
            return app.exit(e);
        } catch (const CLI::ParseError& e) {
            fail(NDTX_ERR_CONFIG, e.what());
        }
        if (*explore) return run_explore(ex);
        if (*inspect) return run_inspect(inspect_data, inspect_depth, inspect_min_leaf, inspect_seed);
        if (*compile) return run_compile(compile_tree, compile_gamma, compile_out);
        if (*validate) return run_validate(validate_seed, validate_model, validate_tree);
        if (*synth) return run_synth(synth_kind, synth_n, synth_d, synth_sep, synth_noise, synth_levels, synth_seed, synth_out);
        fail(NDTX_ERR_CONFIG, "no subcommand");
    } catch (const Failure& f) {
        std::cerr << "ndtx: error=" << ndtx_status_name(f.status) << " code=" << static_cast<int>(f.status)
                  << " message=" << json(one_line(f.message)).dump() << "\n";
        return static_cast<int>(f.status);
    } catch (const std::exception& e) {
        std::cerr << "ndtx: error=internal code=1 message=" << json(one_line(e.what())).dump() << "\n";
        return 1;
    }
}

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "ndtx/rng.hpp"

namespace ndtx {

using Label = int;

/// Numeric feature matrix (row-major) with dense integer labels in [0, class_count).
class Dataset {
public:
    Dataset() = default;
    /// Validates the invariants: finite features, labels < class_count, class_count >= 2,
    /// and at least two instances per class.
    Dataset(std::vector<double> features, std::size_t n_features, std::vector<Label> labels,
            std::vector<std::string> feature_names, int class_count,
            std::vector<std::string> class_names = {});

    std::size_t size() const noexcept { return labels_.size(); }
    std::size_t n_features() const noexcept { return n_features_; }
    int class_count() const noexcept { return class_count_; }

    std::span<const double> row(std::size_t i) const {
        return {features_.data() + i * n_features_, n_features_};
    }
    double at(std::size_t i, std::size_t f) const { return features_[i * n_features_ + f]; }
    Label label(std::size_t i) const { return labels_[i]; }

    const std::vector<double>& features() const noexcept { return features_; }
    const std::vector<Label>& labels() const noexcept { return labels_; }
    const std::vector<std::string>& feature_names() const noexcept { return feature_names_; }
    const std::vector<std::string>& class_names() const noexcept { return class_names_; }

    std::vector<std::size_t> class_counts() const;

private:
    std::vector<double> features_;
    std::size_t n_features_ = 0;
    std::vector<Label> labels_;
    std::vector<std::string> feature_names_;
    std::vector<std::string> class_names_;
    int class_count_ = 0;
};

/// A subset of dataset rows. Does not own the dataset.
struct DatasetView {
    const Dataset* data = nullptr;
    std::span<const std::size_t> rows;

    std::size_t size() const noexcept { return rows.size(); }
    std::span<const double> row(std::size_t k) const { return data->row(rows[k]); }
    Label label(std::size_t k) const { return data->label(rows[k]); }
    std::size_t n_features() const noexcept { return data->n_features(); }
    int class_count() const noexcept { return data->class_count(); }
};

/// Full-dataset index list 0..n-1.
std::vector<std::size_t> all_rows(const Dataset& d);

struct SplitSpec {
    std::vector<std::size_t> train_idx;
    std::vector<std::size_t> valid_idx;
    std::vector<std::size_t> test_idx;

    bool operator==(const SplitSpec&) const = default;
};

enum class CategoricalPolicy { drop, one_hot };

/// Target column by header name or by zero-based index.
using ColumnRef = std::variant<std::string, std::size_t>;

struct CsvOptions {
    CategoricalPolicy categoricals = CategoricalPolicy::drop;
};

/// Parse comma-separated text with one header row. A column is numeric when every
/// non-empty cell parses as a real number; otherwise it is categorical. Rows with
/// any empty cell are removed. Labels become dense ids in first-appearance order.
Dataset parse_csv(const std::string& text, const ColumnRef& target, const CsvOptions& opts = {});
Dataset load_csv(const std::filesystem::path& path, const ColumnRef& target,
                 const CsvOptions& opts = {});

/// Writes features followed by a `label` column, header included.
std::string to_csv(const Dataset& d);
void write_csv(const Dataset& d, const std::filesystem::path& path);

struct SplitFractions {
    double train = 0.5;
    double valid = 0.25;
    double test = 0.25;
};

/// Per class: shuffle, take floor(valid*n_c) for valid and floor(test*n_c) for test,
/// rest to train. Each part is returned in ascending index order.
SplitSpec stratified_split(const Dataset& d, const SplitFractions& fractions, Rng& rng);

/// Split for repetition i, seeded by child_seed(master_seed, "split", i).
SplitSpec subsample_iteration(const Dataset& d, std::size_t repetition, std::uint64_t master_seed,
                              const SplitFractions& fractions = {});

/// Two balanced classes: class 0 ~ N(0, I_d), class 1 ~ N(mu, I_d) with
/// mu = separation * (1,...,1) / sqrt(d). Rows alternate 0,1,0,1,...
Dataset generate_gaussian_pair(std::size_t n, std::size_t d, double separation, Rng& rng);

/// Rule-generated binary dataset on [0,1)^d (d >= 3) with labels from three
/// axis-aligned threshold rules:
///   x0 <= 0.4 ? (x1 <= 0.8 ? 0 : 1) : (x2 <= 0.2 ? 0 : 1)
/// then each label flipped independently with probability `label_noise`.
/// With `levels` >= 2 every feature is ordinal, uniform over {0, 1/levels, ...,
/// (levels-1)/levels}; with 0 it is continuous uniform.
Dataset generate_threshold_rules(std::size_t n, std::size_t d, double label_noise, Rng& rng,
                                 std::size_t levels = 20);

}  // namespace ndtx

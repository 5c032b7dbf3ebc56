#include "ndtx/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "ndtx/error.hpp"
#include "format.hpp"

namespace ndtx {

Dataset::Dataset(std::vector<double> features, std::size_t n_features, std::vector<Label> labels,
                 std::vector<std::string> feature_names, int class_count,
                 std::vector<std::string> class_names)
    : features_(std::move(features)),
      n_features_(n_features),
      labels_(std::move(labels)),
      feature_names_(std::move(feature_names)),
      class_names_(std::move(class_names)),
      class_count_(class_count) {
    if (n_features_ == 0) throw DataError("dataset has no feature columns");
    if (labels_.empty()) throw DataError("dataset has no rows");
    if (features_.size() != labels_.size() * n_features_)
        throw DataError("feature matrix size does not match rows x features");
    if (class_count_ < 2) throw DataError("dataset needs at least 2 classes");
    if (feature_names_.empty()) {
        for (std::size_t f = 0; f < n_features_; ++f) feature_names_.push_back("x" + std::to_string(f));
    }
    if (feature_names_.size() != n_features_) throw DataError("feature name count mismatch");
    if (class_names_.empty()) {
        for (int c = 0; c < class_count_; ++c) class_names_.push_back(std::to_string(c));
    }
    if (class_names_.size() != static_cast<std::size_t>(class_count_))
        throw DataError("class name count mismatch");
    for (double v : features_) {
        if (!std::isfinite(v)) throw DataError("feature matrix contains a non-finite value");
    }
    for (Label y : labels_) {
        if (y < 0 || y >= class_count_) throw DataError("label outside [0, class_count)");
    }
    const auto counts = class_counts();
    for (int c = 0; c < class_count_; ++c) {
        if (counts[c] < 2)
            throw DataError("class '" + class_names_[c] + "' has fewer than 2 instances");
    }
}

std::vector<std::size_t> Dataset::class_counts() const {
    std::vector<std::size_t> counts(class_count_, 0);
    for (Label y : labels_) ++counts[y];
    return counts;
}

std::vector<std::size_t> all_rows(const Dataset& d) {
    std::vector<std::size_t> rows(d.size());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    return rows;
}

namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
    return std::string(s.substr(b, e - b));
}

// RFC 4180-style record splitting: quoted fields may contain commas, newlines
// and doubled quotes.
std::vector<std::vector<std::string>> split_records(const std::string& text) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool quoted = false;
    bool field_was_quoted = false;
    auto end_field = [&] {
        record.push_back(field_was_quoted ? field : trim(field));
        field.clear();
        field_was_quoted = false;
    };
    auto end_record = [&] {
        end_field();
        const bool blank = record.size() == 1 && record[0].empty();
        if (!blank) records.push_back(std::move(record));
        record.clear();
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
            field_was_quoted = true;
        } else if (c == ',') {
            end_field();
        } else if (c == '\n') {
            end_record();
        } else {
            field.push_back(c);
        }
    }
    if (quoted) throw DataError("unterminated quoted field in CSV");
    if (!field.empty() || !record.empty()) end_record();
    return records;
}

bool parse_real(const std::string& s, double& out) {
    if (s.empty()) return false;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (*first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last && std::isfinite(out);
}

}  // namespace

Dataset parse_csv(const std::string& text, const ColumnRef& target, const CsvOptions& opts) {
    auto records = split_records(text);
    if (records.empty()) throw DataError("CSV has no header row");
    const std::vector<std::string> header = records.front();
    const std::size_t n_cols = header.size();

    std::size_t target_col = 0;
    if (const auto* name = std::get_if<std::string>(&target)) {
        auto it = std::find(header.begin(), header.end(), *name);
        if (it == header.end()) throw DataError("target column '" + *name + "' not found");
        target_col = static_cast<std::size_t>(it - header.begin());
    } else {
        target_col = std::get<std::size_t>(target);
        if (target_col >= n_cols)
            throw DataError("target column index " + std::to_string(target_col) + " out of range");
    }
    if (n_cols < 2) throw DataError("CSV needs at least one feature column besides the target");

    std::vector<std::vector<std::string>> rows;
    rows.reserve(records.size() - 1);
    for (std::size_t r = 1; r < records.size(); ++r) {
        auto& rec = records[r];
        if (rec.size() != n_cols)
            throw DataError("CSV row " + std::to_string(r + 1) + " has " + std::to_string(rec.size()) +
                            " fields, expected " + std::to_string(n_cols));
        const bool missing =
            std::any_of(rec.begin(), rec.end(), [](const std::string& s) { return s.empty(); });
        if (!missing) rows.push_back(std::move(rec));
    }
    if (rows.empty()) throw DataError("no rows remain after removing rows with missing cells");

    // Column typing.
    std::vector<bool> numeric(n_cols, true);
    for (std::size_t c = 0; c < n_cols; ++c) {
        if (c == target_col) continue;
        double v;
        for (const auto& row : rows) {
            if (!parse_real(row[c], v)) {
                numeric[c] = false;
                break;
            }
        }
    }

    struct OutColumn {
        std::size_t source;
        std::string name;
        bool indicator;
        std::string level;
    };
    std::vector<OutColumn> out_cols;
    for (std::size_t c = 0; c < n_cols; ++c) {
        if (c == target_col) continue;
        if (numeric[c]) {
            out_cols.push_back({c, header[c], false, {}});
        } else if (opts.categoricals == CategoricalPolicy::one_hot) {
            std::vector<std::string> levels;
            for (const auto& row : rows) {
                if (std::find(levels.begin(), levels.end(), row[c]) == levels.end())
                    levels.push_back(row[c]);
            }
            for (auto& level : levels) out_cols.push_back({c, header[c] + "=" + level, true, level});
        }
    }
    if (out_cols.empty()) throw DataError("no feature columns remain after categorical handling");

    std::vector<std::string> class_names;
    std::unordered_map<std::string, Label> class_ids;
    std::vector<Label> labels;
    labels.reserve(rows.size());
    std::vector<double> features;
    features.reserve(rows.size() * out_cols.size());
    for (const auto& row : rows) {
        const std::string& y = row[target_col];
        auto [it, inserted] = class_ids.try_emplace(y, static_cast<Label>(class_names.size()));
        if (inserted) class_names.push_back(y);
        labels.push_back(it->second);
        for (const auto& col : out_cols) {
            if (col.indicator) {
                features.push_back(row[col.source] == col.level ? 1.0 : 0.0);
            } else {
                double v = 0.0;
                parse_real(row[col.source], v);
                features.push_back(v);
            }
        }
    }
    if (class_names.size() < 2) throw DataError("fewer than 2 distinct target values after cleaning");

    std::vector<std::string> names;
    for (const auto& col : out_cols) names.push_back(col.name);
    const auto class_count = static_cast<int>(class_names.size());
    return Dataset(std::move(features), out_cols.size(), std::move(labels), std::move(names), class_count,
                   std::move(class_names));
}

Dataset load_csv(const std::filesystem::path& path, const ColumnRef& target, const CsvOptions& opts) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read CSV file '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_csv(buf.str(), target, opts);
}

std::string to_csv(const Dataset& d) {
    std::string out;
    for (const auto& name : d.feature_names()) out += name + ",";
    out += "label\n";
    for (std::size_t i = 0; i < d.size(); ++i) {
        for (double v : d.row(i)) {
            out += detail::format_real(v);
            out += ',';
        }
        out += d.class_names()[d.label(i)];
        out += '\n';
    }
    return out;
}

void write_csv(const Dataset& d, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write '" + path.string() + "'");
    out << to_csv(d);
    if (!out) throw ConfigError("failed writing '" + path.string() + "'");
}

SplitSpec stratified_split(const Dataset& d, const SplitFractions& fractions, Rng& rng) {
    if (fractions.valid < 0 || fractions.test < 0 || fractions.valid + fractions.test >= 1.0)
        throw ConfigError("split fractions must leave a non-empty training share");
    std::vector<std::vector<std::size_t>> by_class(d.class_count());
    for (std::size_t i = 0; i < d.size(); ++i) by_class[d.label(i)].push_back(i);

    SplitSpec split;
    for (int c = 0; c < d.class_count(); ++c) {
        auto& members = by_class[c];
        if (members.size() < 4)
            throw DataError("class '" + d.class_names()[c] + "' has " +
                            std::to_string(members.size()) + " instances; stratification needs >= 4");
        std::shuffle(members.begin(), members.end(), rng);
        const auto n_c = static_cast<double>(members.size());
        const auto n_valid = static_cast<std::size_t>(std::floor(fractions.valid * n_c));
        const auto n_test = static_cast<std::size_t>(std::floor(fractions.test * n_c));
        auto it = members.begin();
        split.valid_idx.insert(split.valid_idx.end(), it, it + n_valid);
        it += n_valid;
        split.test_idx.insert(split.test_idx.end(), it, it + n_test);
        it += n_test;
        split.train_idx.insert(split.train_idx.end(), it, members.end());
    }
    std::sort(split.train_idx.begin(), split.train_idx.end());
    std::sort(split.valid_idx.begin(), split.valid_idx.end());
    std::sort(split.test_idx.begin(), split.test_idx.end());
    return split;
}

SplitSpec subsample_iteration(const Dataset& d, std::size_t repetition, std::uint64_t master_seed,
                              const SplitFractions& fractions) {
    Rng rng(child_seed(master_seed, "split", repetition));
    return stratified_split(d, fractions, rng);
}

Dataset generate_gaussian_pair(std::size_t n, std::size_t d, double separation, Rng& rng) {
    if (n < 4 || n % 2 != 0) throw ConfigError("gaussian pair needs an even n >= 4");
    if (d < 1) throw ConfigError("gaussian pair needs d >= 1");
    if (!(separation > 0.0) || !std::isfinite(separation))
        throw ConfigError("gaussian pair separation must be positive");
    std::normal_distribution<double> normal(0.0, 1.0);
    const double shift = separation / std::sqrt(static_cast<double>(d));
    std::vector<double> features;
    features.reserve(n * d);
    std::vector<Label> labels;
    labels.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Label y = static_cast<Label>(i % 2);
        for (std::size_t f = 0; f < d; ++f) features.push_back(normal(rng) + (y == 1 ? shift : 0.0));
        labels.push_back(y);
    }
    return Dataset(std::move(features), d, std::move(labels), {}, 2);
}

Dataset generate_threshold_rules(std::size_t n, std::size_t d, double label_noise, Rng& rng, std::size_t levels) {
    if (n < 8) throw ConfigError("rule dataset needs n >= 8");
    if (d < 3) throw ConfigError("rule dataset needs d >= 3");
    if (label_noise < 0.0 || label_noise >= 0.5) throw ConfigError("label noise must be in [0, 0.5)");
    if (levels == 1) throw ConfigError("rule dataset needs 0 (continuous) or >= 2 levels");
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> level(0, levels ? levels - 1 : 0);
    const auto draw = [&] {
        return levels ? static_cast<double>(level(rng)) / static_cast<double>(levels) : unif(rng);
    };
    std::bernoulli_distribution flip(label_noise);
    std::vector<double> features;
    features.reserve(n * d);
    std::vector<Label> labels;
    labels.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t base = features.size();
        for (std::size_t f = 0; f < d; ++f) features.push_back(draw());
        const double x0 = features[base], x1 = features[base + 1], x2 = features[base + 2];
        Label y = x0 <= 0.4 ? (x1 <= 0.8 ? 0 : 1) : (x2 <= 0.2 ? 0 : 1);
        if (flip(rng)) y = 1 - y;
        labels.push_back(y);
    }
    return Dataset(std::move(features), d, std::move(labels), {}, 2);
}

}  // namespace ndtx

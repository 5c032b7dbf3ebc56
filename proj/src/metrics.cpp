#include "ndtx/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>

#include "ndtx/error.hpp"

namespace ndtx {

namespace {

void check_pair(std::span<const Label> a, std::span<const Label> b) {
    if (a.size() != b.size()) throw DataError("label vectors differ in length");
    if (a.empty()) throw DataError("label vectors are empty");
}

struct Marginals {
    double observed = 0.0;
    double chance = 0.0;
};

Marginals agreement(std::span<const Label> a, std::span<const Label> b, int class_count) {
    check_pair(a, b);
    if (class_count < 1) throw DataError("class_count must be positive");
    std::vector<double> ca(class_count, 0.0), cb(class_count, 0.0);
    std::size_t same = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] < 0 || a[i] >= class_count || b[i] < 0 || b[i] >= class_count)
            throw DataError("label outside [0, class_count)");
        ca[a[i]] += 1.0;
        cb[b[i]] += 1.0;
        same += a[i] == b[i];
    }
    const auto n = static_cast<double>(a.size());
    Marginals m;
    m.observed = static_cast<double>(same) / n;
    for (int c = 0; c < class_count; ++c) m.chance += (ca[c] / n) * (cb[c] / n);
    return m;
}

}  // namespace

double accuracy(std::span<const Label> pred, std::span<const Label> truth) {
    check_pair(pred, truth);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == truth[i];
    return static_cast<double>(hits) / static_cast<double>(pred.size());
}

double cohens_kappa(std::span<const Label> a, std::span<const Label> b, int class_count) {
    const Marginals m = agreement(a, b, class_count);
    if (m.chance >= 1.0) return 1.0;
    return (m.observed - m.chance) / (1.0 - m.chance);
}

bool kappa_degenerate(std::span<const Label> a, std::span<const Label> b, int class_count) {
    return agreement(a, b, class_count).chance >= 1.0;
}

double normal_upper_tail(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

WilcoxonResult wilcoxon_signed_rank(const PairedSample& s) {
    if (s.xs.size() != s.ys.size()) throw DataError("paired sample vectors differ in length");
    if (s.xs.empty()) throw DataError("paired sample is empty");

    WilcoxonResult r;
    std::vector<double> diffs;
    for (std::size_t i = 0; i < s.xs.size(); ++i) {
        const double d = s.xs[i] - s.ys[i];
        if (!std::isfinite(d)) throw DataError("paired sample contains non-finite values");
        if (d == 0.0) {
            ++r.n_zero;
        } else {
            diffs.push_back(d);
        }
    }
    const std::size_t m = diffs.size();
    r.n_used = m;
    if (m == 0) throw DegenerateError("all paired differences are zero");

    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return std::abs(diffs[i]) < std::abs(diffs[j]); });

    // Doubled mid-ranks are integers: a tie group occupying positions [i, j) gets i + j + 1.
    std::vector<std::int64_t> rank2(m);
    double tie_term = 0.0;
    for (std::size_t i = 0; i < m;) {
        std::size_t j = i + 1;
        while (j < m && std::abs(diffs[order[j]]) == std::abs(diffs[order[i]])) ++j;
        for (std::size_t k = i; k < j; ++k) rank2[order[k]] = static_cast<std::int64_t>(i + j + 1);
        const auto t = static_cast<double>(j - i);
        tie_term += t * t * t - t;
        i = j;
    }
    std::int64_t plus2 = 0, total2 = 0;
    for (std::size_t i = 0; i < m; ++i) {
        total2 += rank2[i];
        if (diffs[i] > 0) plus2 += rank2[i];
    }
    const std::int64_t minus2 = total2 - plus2;
    r.w_plus = static_cast<double>(plus2) / 2.0;
    r.w_minus = static_cast<double>(minus2) / 2.0;
    const std::int64_t stat2 = std::min(plus2, minus2);
    r.statistic = static_cast<double>(stat2) / 2.0;

    if (m <= kWilcoxonExactMax) {
        r.method = WilcoxonMethod::exact;
        // Null distribution of the doubled positive-rank sum over all 2^m sign patterns.
        std::vector<double> count(static_cast<std::size_t>(total2) + 1, 0.0);
        count[0] = 1.0;
        std::int64_t reach = 0;
        for (std::size_t i = 0; i < m; ++i) {
            for (std::int64_t v = reach; v >= 0; --v) {
                if (count[v] != 0.0) count[v + rank2[i]] += count[v];
            }
            reach += rank2[i];
        }
        double extreme = 0.0;
        for (std::int64_t v = 0; v <= total2; ++v) {
            if (std::min(v, total2 - v) <= stat2) extreme += count[v];
        }
        r.p_value = std::min(1.0, extreme / std::ldexp(1.0, static_cast<int>(m)));
    } else {
        r.method = WilcoxonMethod::normal;
        const auto md = static_cast<double>(m);
        const double mean = md * (md + 1.0) / 4.0;
        const double var = md * (md + 1.0) * (2.0 * md + 1.0) / 24.0 - tie_term / 48.0;
        const double z = std::max(0.0, std::abs(r.statistic - mean) - 0.5) / std::sqrt(var);
        r.p_value = std::min(1.0, 2.0 * normal_upper_tail(z));
    }
    return r;
}

}  // namespace ndtx

#include <doctest.h>

#include <cmath>

#include "ndtx/error.hpp"
#include "ndtx/metrics.hpp"
#include "ndtx/rng.hpp"

using namespace ndtx;

namespace {

// Two-sided p from every one of the 2^m sign patterns over mid-ranks.
double enumerate_p(const std::vector<double>& diffs, double* statistic) {
    std::vector<double> mags;
    for (double d : diffs)
        if (d != 0.0) mags.push_back(std::abs(d));
    std::vector<double> ranks;
    for (double v : mags) {
        double below = 0, equal = 0;
        for (double u : mags) {
            below += u < v;
            equal += u == v;
        }
        ranks.push_back(below + (equal + 1.0) / 2.0);
    }
    double plus = 0.0, total = 0.0;
    for (double r : ranks) total += r;
    std::size_t k = 0;
    for (double d : diffs) {
        if (d == 0.0) continue;
        if (d > 0) plus += ranks[k];
        ++k;
    }
    *statistic = std::min(plus, total - plus);
    std::size_t extreme = 0;
    const std::size_t patterns = std::size_t{1} << ranks.size();
    for (std::size_t mask = 0; mask < patterns; ++mask) {
        double s = 0.0;
        for (std::size_t i = 0; i < ranks.size(); ++i)
            if (mask >> i & 1U) s += ranks[i];
        extreme += std::min(s, total - s) <= *statistic + 1e-9;
    }
    return static_cast<double>(extreme) / static_cast<double>(patterns);
}

PairedSample from_diffs(const std::vector<double>& d) {
    PairedSample s;
    s.xs = d;
    s.ys.assign(d.size(), 0.0);
    return s;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("accuracy") {
    const std::vector<Label> a{1, 1, 0, 0}, b{1, 0, 0, 0}, c{0, 0, 1, 1};
    CHECK(accuracy(a, a) == 1.0);
    CHECK(accuracy(a, c) == 0.0);
    CHECK(accuracy(a, b) == 0.75);
    CHECK_THROWS_AS(accuracy(a, std::vector<Label>{1}), DataError);
    CHECK_THROWS_AS(accuracy(std::vector<Label>{}, std::vector<Label>{}), DataError);
}

TEST_CASE("kappa examples") {
    const std::vector<Label> a{1, 1, 0, 0}, b{1, 0, 0, 0};
    CHECK(cohens_kappa(a, b, 2) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(cohens_kappa(a, a, 2) == 1.0);
    CHECK(cohens_kappa(std::vector<Label>{1, 1, 1}, std::vector<Label>{0, 0, 0}, 2) == 0.0);
    const std::vector<Label> same{2, 2, 2};
    CHECK(cohens_kappa(same, same, 3) == 1.0);
    CHECK(kappa_degenerate(same, same, 3));
    CHECK_FALSE(kappa_degenerate(a, b, 2));
    CHECK_THROWS_AS(cohens_kappa(a, std::vector<Label>{1}, 2), DataError);
}

TEST_CASE("kappa is symmetric and equals 1 only on identical labels") {
    Rng rng(4);
    for (int k = 0; k < 200; ++k) {
        const int classes = 2 + static_cast<int>(rng() % 3);
        std::vector<Label> a(10 + rng() % 20), b(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            a[i] = static_cast<Label>(rng() % classes);
            b[i] = rng() % 4 ? a[i] : static_cast<Label>(rng() % classes);
        }
        CHECK(cohens_kappa(a, b, classes) == doctest::Approx(cohens_kappa(b, a, classes)).epsilon(1e-14));
        if (!kappa_degenerate(a, b, classes)) CHECK((cohens_kappa(a, b, classes) == 1.0) == (a == b));
        CHECK(cohens_kappa(a, b, classes) <= 1.0);
        CHECK(cohens_kappa(a, b, classes) >= -1.0);
    }
}

TEST_CASE("wilcoxon worked examples") {
    const WilcoxonResult r = wilcoxon_signed_rank(from_diffs({1, 2, 3, 4, 5}));
    CHECK(r.p_value == doctest::Approx(0.0625).epsilon(1e-15));
    CHECK(r.statistic == 0.0);
    CHECK(r.w_plus == 15.0);
    CHECK(r.method == WilcoxonMethod::exact);

    PairedSample same;
    same.xs = {0.5, 0.25};
    same.ys = {0.5, 0.25};
    CHECK_THROWS_AS(wilcoxon_signed_rank(same), DegenerateError);

    const WilcoxonResult z = wilcoxon_signed_rank(from_diffs({0, 0, 3, -1, 2}));
    CHECK(z.n_zero == 2);
    CHECK(z.n_used == 3);
}

TEST_CASE("exact p-values match full sign enumeration") {
    Rng rng(12);
    for (int k = 0; k < 120; ++k) {
        const std::size_t m = 1 + static_cast<std::size_t>(k) % kWilcoxonExactMax;
        std::vector<double> d(m);
        for (auto& v : d) v = static_cast<double>(static_cast<int>(rng() % 9) - 4) * 0.01;
        if (std::all_of(d.begin(), d.end(), [](double v) { return v == 0.0; })) d[0] = 0.02;
        double w = 0.0;
        const double expected = enumerate_p(d, &w);
        const WilcoxonResult r = wilcoxon_signed_rank(from_diffs(d));
        CHECK(r.statistic == doctest::Approx(w));
        CHECK(std::abs(r.p_value - expected) < 1e-12);
    }
}

TEST_CASE("normal approximation for 30 consistent shifts") {
    std::vector<double> d;
    for (int i = 1; i <= 30; ++i) d.push_back(0.001 * i);
    const WilcoxonResult r = wilcoxon_signed_rank(from_diffs(d));
    CHECK(r.method == WilcoxonMethod::normal);
    // mean 232.5, variance 30*31*61/24, continuity correction 0.5.
    const double z = (232.5 - 0.5) / std::sqrt(30.0 * 31.0 * 61.0 / 24.0);
    CHECK(r.p_value == doctest::Approx(std::erfc(z / std::sqrt(2.0))).epsilon(1e-12));
    CHECK(r.p_value < 0.05);
    CHECK(r.p_value == doctest::Approx(1.82e-6).epsilon(0.01));
}

TEST_CASE("tie correction in the normal approximation") {
    std::vector<double> d;
    for (int i = 0; i < 20; ++i) d.push_back(i % 4 == 0 ? -0.5 : static_cast<double>(1 + i % 3));
    const WilcoxonResult r = wilcoxon_signed_rank(from_diffs(d));
    // Oracle: mid-ranks by counting, tie term sum(t^3 - t)/48.
    std::vector<double> mags;
    for (double v : d) mags.push_back(std::abs(v));
    double w_minus = 0.0, ties = 0.0;
    for (std::size_t i = 0; i < mags.size(); ++i) {
        double below = 0, equal = 0;
        for (double u : mags) {
            below += u < mags[i];
            equal += u == mags[i];
        }
        if (d[i] < 0) w_minus += below + (equal + 1.0) / 2.0;
    }
    for (double v : {0.5, 1.0, 2.0, 3.0}) {
        const double t = static_cast<double>(std::count(mags.begin(), mags.end(), v));
        ties += t * t * t - t;
    }
    const double n = 20.0;
    const double var = n * (n + 1) * (2 * n + 1) / 24.0 - ties / 48.0;
    const double w = std::min(w_minus, n * (n + 1) / 2 - w_minus);
    const double z = (n * (n + 1) / 4 - w - 0.5) / std::sqrt(var);
    CHECK(r.statistic == w);
    CHECK(r.p_value == doctest::Approx(std::erfc(z / std::sqrt(2.0))).epsilon(1e-12));
}

TEST_CASE("p-value is invariant under negation and swapping") {
    Rng rng(31);
    std::normal_distribution<double> unit(0.0, 1.0);
    for (int k = 0; k < 40; ++k) {
        PairedSample s;
        const std::size_t n = 3 + rng() % 28;
        for (std::size_t i = 0; i < n; ++i) {
            s.xs.push_back(std::round(unit(rng) * 10.0) / 10.0);
            s.ys.push_back(std::round(unit(rng) * 10.0) / 10.0);
        }
        bool any = false;
        for (std::size_t i = 0; i < n; ++i) any = any || s.xs[i] != s.ys[i];
        if (!any) continue;
        PairedSample swapped{s.ys, s.xs};
        PairedSample negated{s.xs, s.ys};
        for (auto& v : negated.xs) v = -v;
        for (auto& v : negated.ys) v = -v;
        const WilcoxonResult a = wilcoxon_signed_rank(s), b = wilcoxon_signed_rank(swapped),
                             c = wilcoxon_signed_rank(negated);
        CHECK(a.p_value == b.p_value);
        CHECK(a.p_value == c.p_value);
        CHECK(a.w_plus == b.w_minus);
        CHECK(a.p_value <= 1.0);
    }
}

TEST_CASE("normal tail") {
    CHECK(normal_upper_tail(0.0) == doctest::Approx(0.5));
    CHECK(normal_upper_tail(1.959963984540054) == doctest::Approx(0.025).epsilon(1e-10));
}

}  // TEST_SUITE

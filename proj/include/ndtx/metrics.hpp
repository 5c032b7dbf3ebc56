#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ndtx/dataset.hpp"

namespace ndtx {

/// Fraction of positions where pred == truth.
double accuracy(std::span<const Label> pred, std::span<const Label> truth);

/// Cohen's kappa, (p_o - p_e) / (1 - p_e), with p_e from the two marginals.
/// Returns 1.0 when p_e == 1 (both raters constant on the same class).
double cohens_kappa(std::span<const Label> a, std::span<const Label> b, int class_count);

/// True when cohens_kappa(a, b) would hit the p_e == 1 convention.
bool kappa_degenerate(std::span<const Label> a, std::span<const Label> b, int class_count);

struct PairedSample {
    std::vector<double> xs;
    std::vector<double> ys;
};

enum class WilcoxonMethod { exact, normal };

struct WilcoxonResult {
    double statistic = 0.0;      // min(W+, W-)
    double w_plus = 0.0;
    double w_minus = 0.0;
    double p_value = 1.0;        // two-sided
    std::size_t n_used = 0;      // pairs left after dropping zero differences
    std::size_t n_zero = 0;
    WilcoxonMethod method = WilcoxonMethod::exact;
};

/// Largest number of nonzero pairs for which the exact null distribution is used.
inline constexpr std::size_t kWilcoxonExactMax = 12;

/// Two-sided signed-rank test on x - y. Zero differences are dropped, tied |d| get
/// mid-ranks. Exact null distribution for m <= 12 nonzero pairs, otherwise a normal
/// approximation with tie-corrected variance and continuity correction.
/// Throws DegenerateError when every difference is zero.
WilcoxonResult wilcoxon_signed_rank(const PairedSample& s);

/// Standard normal upper tail, 1 - Phi(z).
double normal_upper_tail(double z);

}  // namespace ndtx

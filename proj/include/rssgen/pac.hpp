#pragma once

#include <cstdint>
#include <string>

namespace rssgen {

/// Finite hypothesis class over a 1-D distance-ordered cell grid. A
/// hypothesis is a binary lookup table (coverage yes/no per cell); the
/// planted truth is the threshold rule y*(x) = 1[x < threshold]. Losses are
/// 0/1 indicators:
///   l_data(theta, x) = 1[theta(x) != y*(x)]
///   l_phy(theta, x)  = 1[theta(x) = 0 and theta(x+1) = 1]
/// i.e. the physics rule forbids coverage that grows with distance, which
/// the planted threshold rule satisfies everywhere (realizability).
struct FiniteClassSpec {
    int n_cells = 16;   // |Theta| = 2^n_cells; budget caps n_cells at 20
    int threshold = 8;  // planted theta*: cells [0, threshold) are covered
    double epsilon0 = 0.2;
    double epsilon1 = 0.1;
    double delta = 0.05;
    int trials = 200;
    std::uint64_t seed = 0;

    void validate() const;
    std::uint32_t planted_mask() const { return (threshold >= 32) ? 0xffffffffu : ((1u << threshold) - 1u); }
};

struct PacCounts {
    long long restricted = 0; // |Theta(epsilon0)|
    long long total = 0;      // |Theta|
};

/// Exact class sizes by brute force over all 2^n hypotheses against the true
/// (uniform-cell) distribution. Throws std::invalid_argument when the class
/// exceeds the 2^20 enumeration budget.
PacCounts enumerate_restricted_class(const FiniteClassSpec& spec);

/// Theorem-style bound m >= (1/eps1) [ln|Theta(eps0)| + ln(1/delta)],
/// returned as the ceiling (never negative). Throws std::domain_error for
/// eps1 <= 0 or delta outside (0, 1].
long long required_samples(long long class_size, double eps1, double delta);

struct PacRunResult {
    long long m = 0;
    long long class_size_restricted = 0;
    long long class_size_total = 0;
    int trials = 0;
    /// Fraction of trials whose selected consistent hypothesis has true
    /// error <= epsilon1, for both selection rules: `lex` picks the smallest
    /// bitmask encoding (a fixed, adversary-free tie-break), `worst` the
    /// maximum-true-error consistent hypothesis. PAC quantifies over all
    /// consistent hypotheses, so `worst` is the theorem-faithful number.
    double success_rate_lex = 0.0;
    double success_rate_worst = 0.0;
};

/// Monte Carlo check of the bound: each trial draws the bound-prescribed m
/// samples, keeps hypotheses with zero empirical l_data and (when
/// physics_filter) zero empirical l_phy, and measures the true error of the
/// lexicographically-first and of the worst consistent hypothesis. m always
/// comes from the restricted-class bound so the filterless run is the
/// same-sample-budget comparison.
PacRunResult monte_carlo_verify(const FiniteClassSpec& spec, bool physics_filter = true);

} // namespace rssgen

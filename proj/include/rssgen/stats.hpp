#pragma once

#include <span>
#include <string>
#include <vector>

#include "rssgen/net.hpp"

namespace rssgen {

/// Streaming mean / diagonal variance of fused feature vectors (Welford).
/// Batch updates are defined as per-sample steps in order, so updating with
/// A then B is bit-identical to updating with the concatenation A||B.
struct FeatureStats {
    std::vector<double> mu;
    std::vector<double> m2; // sum of squared deviations per dimension
    long long count = 0;

    bool empty() const { return count == 0; }
    std::size_t dim() const { return mu.size(); }
    /// Population variances (m2 / count), clamped at zero.
    std::vector<double> sigma_diag() const;

    std::string to_json() const;
    static FeatureStats from_json(const std::string& text);
};

/// Accumulates one feature vector into the stats (dimension fixed by the
/// first update). Throws std::invalid_argument on dimension mismatch.
void update_stats(FeatureStats& stats, std::span<const double> feature);
void update_stats(FeatureStats& stats, const std::vector<std::vector<double>>& batch);

/// Wasserstein-2 distance between the diagonal-Gaussian approximations:
/// W^2 = ||mu_a - mu_b||^2 + sum_d (sqrt(sig_a_d) - sqrt(sig_b_d))^2.
/// Requires both counts >= 2; throws std::logic_error on negative variance.
double w2_distance(const FeatureStats& a, const FeatureStats& b);

struct AggregationWeights {
    std::vector<double> gamma;
};

/// gamma = softmax over 1 / max(W_i, eps). Equal distances give exactly
/// uniform weights; a distance at the eps floor dominates.
AggregationWeights similarity_weights(std::span<const double> distances, double eps = 1e-6);

/// Elementwise convex combination of parameter snapshots. All models must
/// share one architecture and |models| == |gamma|; throws std::logic_error
/// otherwise.
Model aggregate(const std::vector<Model>& models, const AggregationWeights& weights);

} // namespace rssgen

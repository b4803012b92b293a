#include "rssgen/stats.hpp"

#include <cmath>
#include <stdexcept>

#include <json.hpp>

namespace rssgen {

using nlohmann::json;

std::vector<double> FeatureStats::sigma_diag() const {
    std::vector<double> out(mu.size(), 0.0);
    if (count > 0) {
        for (std::size_t d = 0; d < mu.size(); ++d) {
            out[d] = std::max(0.0, m2[d] / static_cast<double>(count));
        }
    }
    return out;
}

void update_stats(FeatureStats& stats, std::span<const double> feature) {
    if (stats.empty() && stats.mu.empty()) {
        stats.mu.assign(feature.size(), 0.0);
        stats.m2.assign(feature.size(), 0.0);
    }
    if (feature.size() != stats.mu.size()) throw std::invalid_argument("update_stats: dimension mismatch");
    stats.count += 1;
    const double inv_n = 1.0 / static_cast<double>(stats.count);
    for (std::size_t d = 0; d < feature.size(); ++d) {
        const double delta = feature[d] - stats.mu[d];
        stats.mu[d] += delta * inv_n;
        stats.m2[d] += delta * (feature[d] - stats.mu[d]);
    }
}

void update_stats(FeatureStats& stats, const std::vector<std::vector<double>>& batch) {
    if (batch.empty()) throw std::invalid_argument("update_stats: empty batch");
    for (const auto& f : batch) update_stats(stats, f);
}

double w2_distance(const FeatureStats& a, const FeatureStats& b) {
    if (a.count < 2 || b.count < 2) throw std::invalid_argument("w2_distance: need count >= 2 on both sides");
    if (a.dim() != b.dim()) throw std::invalid_argument("w2_distance: dimension mismatch");
    const std::vector<double> sa = a.sigma_diag();
    const std::vector<double> sb = b.sigma_diag();
    double acc = 0.0;
    for (std::size_t d = 0; d < a.dim(); ++d) {
        if (sa[d] < 0.0 || sb[d] < 0.0) throw std::logic_error("w2_distance: negative variance");
        const double dm = a.mu[d] - b.mu[d];
        const double ds = std::sqrt(sa[d]) - std::sqrt(sb[d]);
        acc += dm * dm + ds * ds;
    }
    return std::sqrt(acc);
}

AggregationWeights similarity_weights(std::span<const double> distances, double eps) {
    if (distances.empty()) throw std::invalid_argument("similarity_weights: no distances");
    if (!(eps > 0.0)) throw std::invalid_argument("similarity_weights: eps must be > 0");
    std::vector<double> logits(distances.size());
    for (std::size_t i = 0; i < distances.size(); ++i) {
        if (distances[i] < 0.0) throw std::invalid_argument("similarity_weights: negative distance");
        logits[i] = 1.0 / std::max(distances[i], eps);
    }
    double max_logit = logits[0];
    for (double v : logits) max_logit = std::max(max_logit, v);
    double denom = 0.0;
    AggregationWeights w;
    w.gamma.resize(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) {
        w.gamma[i] = std::exp(logits[i] - max_logit);
        denom += w.gamma[i];
    }
    for (double& g : w.gamma) g /= denom;
    return w;
}

Model aggregate(const std::vector<Model>& models, const AggregationWeights& weights) {
    if (models.empty()) throw std::invalid_argument("aggregate: no models");
    if (models.size() != weights.gamma.size()) throw std::logic_error("aggregate: |models| != |gamma|");
    const ModelConfig& cfg = models.front().config();
    for (const Model& m : models) {
        if (!(m.config() == cfg)) throw std::logic_error("aggregate: architecture mismatch");
    }
    Model out(cfg);
    std::vector<double>& theta = out.params();
    for (std::size_t k = 0; k < models.size(); ++k) {
        const double g = weights.gamma[k];
        const std::vector<double>& src = models[k].params();
        for (std::size_t i = 0; i < theta.size(); ++i) theta[i] += g * src[i];
    }
    return out;
}

std::string FeatureStats::to_json() const {
    json j;
    j["mu"] = mu;
    j["m2"] = m2;
    j["count"] = count;
    return j.dump();
}

FeatureStats FeatureStats::from_json(const std::string& text) {
    json j = json::parse(text);
    FeatureStats s;
    s.mu = j.at("mu").get<std::vector<double>>();
    s.m2 = j.at("m2").get<std::vector<double>>();
    s.count = j.at("count").get<long long>();
    return s;
}

} // namespace rssgen

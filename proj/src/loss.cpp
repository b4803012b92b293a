#include "rssgen/loss.hpp"

#include <stdexcept>

namespace rssgen {

std::string train_method_name(TrainMethod m) {
    switch (m) {
        case TrainMethod::physics: return "physics";
        case TrainMethod::baseline1: return "baseline1";
        case TrainMethod::baseline2: return "baseline2";
        case TrainMethod::baseline3: return "baseline3";
    }
    return "physics";
}

TrainMethod train_method_from_name(const std::string& name) {
    if (name == "physics") return TrainMethod::physics;
    if (name == "baseline1") return TrainMethod::baseline1;
    if (name == "baseline2") return TrainMethod::baseline2;
    if (name == "baseline3") return TrainMethod::baseline3;
    throw std::invalid_argument("unknown train method: " + name);
}

namespace {

constexpr int kNo = ModelConfig::n_outputs;
constexpr double kNlosWeight = 1.2; // baseline2 scales NLoS squared errors by 20%

void check_sizes(const Prediction& pred, const RssMap& truth) {
    if (pred.rss_hat_dbm.size() != truth.rss_dbm.size() ||
        pred.heads.size() != truth.rss_dbm.size() * kNo)
        throw std::invalid_argument("loss: prediction/truth size mismatch");
}

} // namespace

double data_loss(const Prediction& pred, const RssMap& truth) {
    check_sizes(pred, truth);
    const std::size_t n = truth.rss_dbm.size();
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = pred.rss_hat_dbm[i] - truth.rss_dbm[i];
        acc += e * e;
    }
    return acc / static_cast<double>(n);
}

std::pair<double, double> physics_loss(std::span<const double> heads, const std::vector<bool>& los_mask) {
    if (heads.size() != los_mask.size() * kNo) throw std::invalid_argument("physics_loss: size mismatch");
    double los_acc = 0.0, nlos_acc = 0.0;
    std::size_t n_los = 0, n_nlos = 0;
    for (std::size_t i = 0; i < los_mask.size(); ++i) {
        const double* h = heads.data() + i * kNo;
        if (los_mask[i]) {
            los_acc += h[kHeadBlockage] + std::max(0.0, h[kHeadReflection] - h[kHeadRbar]);
            ++n_los;
        } else {
            nlos_acc += h[kHeadReflection] + std::max(0.0, h[kHeadBBound] - h[kHeadBlockage]);
            ++n_nlos;
        }
    }
    return {n_los ? los_acc / static_cast<double>(n_los) : 0.0,
            n_nlos ? nlos_acc / static_cast<double>(n_nlos) : 0.0};
}

LossBreakdown total_loss(const Prediction& pred, const RssMap& truth, double lambda, TrainMethod method,
                         std::vector<double>* dheads) {
    check_sizes(pred, truth);
    const std::size_t n = truth.rss_dbm.size();
    std::size_t n_los = 0;
    for (bool b : truth.los_mask)
        if (b) ++n_los;
    const std::size_t n_nlos = n - n_los;

    if (dheads) dheads->assign(n * kNo, 0.0);

    LossBreakdown out;
    out.lambda = method == TrainMethod::physics ? lambda : 0.0;

    // Data term. baseline3 only regresses NLoS residuals; its batch mean
    // still normalizes by the NLoS count.
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const bool los = truth.los_mask[i];
        double w = 1.0;
        if (method == TrainMethod::baseline2 && !los) w = kNlosWeight;
        if (method == TrainMethod::baseline3 && los) continue;
        const double denom = method == TrainMethod::baseline3 ? static_cast<double>(n_nlos ? n_nlos : 1)
                                                              : static_cast<double>(n);
        const double e = pred.rss_hat_dbm[i] - truth.rss_dbm[i];
        acc += w * e * e / denom;
        if (dheads) {
            const double g = 2.0 * w * e / denom;
            (*dheads)[i * kNo + kHeadReflection] += g;
            (*dheads)[i * kNo + kHeadBlockage] -= g;
        }
    }
    out.l_data = acc;

    if (method == TrainMethod::physics) {
        auto [l_los, l_nlos] = physics_loss(pred.heads, truth.los_mask);
        out.l_los = l_los;
        out.l_nlos = l_nlos;
        if (dheads && lambda != 0.0) {
            for (std::size_t i = 0; i < n; ++i) {
                const double* h = pred.heads.data() + i * kNo;
                double* d = dheads->data() + i * kNo;
                if (truth.los_mask[i]) {
                    const double scale = lambda / static_cast<double>(n_los);
                    d[kHeadBlockage] += scale;
                    if (h[kHeadReflection] - h[kHeadRbar] > 0.0) {
                        d[kHeadReflection] += scale;
                        d[kHeadRbar] -= scale;
                    }
                } else {
                    const double scale = lambda / static_cast<double>(n_nlos);
                    d[kHeadReflection] += scale;
                    if (h[kHeadBBound] - h[kHeadBlockage] > 0.0) {
                        d[kHeadBBound] += scale;
                        d[kHeadBlockage] -= scale;
                    }
                }
            }
        }
    }
    return out;
}

std::vector<double> method_predictions(const Prediction& pred, const RssMap& truth, TrainMethod method,
                                       const std::vector<bool>* deployed_los_mask) {
    check_sizes(pred, truth);
    std::vector<double> out = pred.rss_hat_dbm;
    if (method == TrainMethod::baseline3) {
        if (!deployed_los_mask || deployed_los_mask->size() != out.size())
            throw std::invalid_argument("method_predictions: baseline3 needs its deployed LoS mask");
        for (std::size_t i = 0; i < out.size(); ++i) {
            if ((*deployed_los_mask)[i]) out[i] = truth.r_los_dbm[i];
        }
    }
    return out;
}

} // namespace rssgen


#pragma once

#include <span>
#include <string>
#include <vector>

#include "rssgen/channel.hpp"
#include "rssgen/net.hpp"

namespace rssgen {

enum class TrainMethod { physics, baseline1, baseline2, baseline3 };

std::string train_method_name(TrainMethod m);
TrainMethod train_method_from_name(const std::string& name);

struct LossBreakdown {
    double l_data = 0.0; // dB^2
    double l_los = 0.0;  // dB
    double l_nlos = 0.0; // dB
    double lambda = 0.0;

    double l_phy() const { return l_los + l_nlos; }
    double l_total() const { return l_data + lambda * l_phy(); }
};

/// Mean over receivers of (rss_hat - rss)^2.
double data_loss(const Prediction& pred, const RssMap& truth);

/// LoS term: mean over LoS receivers of blockage_hat + max(0, reflection_hat
/// - rbar_hat). NLoS term: mean over NLoS receivers of reflection_hat +
/// max(0, b_hat - blockage_hat). An empty set contributes zero.
std::pair<double, double> physics_loss(std::span<const double> heads, const std::vector<bool>& los_mask);

/// Full training objective for one frame plus its gradient with respect to
/// the four heads (N x 4 row-major, same layout as Prediction::heads). The
/// hinge subgradient at the kink is 0. The method selects the objective:
///   physics    - MSE + lambda * (L_LoS + L_NLoS)
///   baseline1  - plain MSE
///   baseline2  - MSE with NLoS squared errors scaled by 1.2
///   baseline3  - MSE over NLoS receivers only (LoS receivers are predicted
///                analytically as r_los and receive no gradient)
LossBreakdown total_loss(const Prediction& pred, const RssMap& truth, double lambda, TrainMethod method,
                         std::vector<double>* dheads = nullptr);

/// Per-receiver predictions a method reports at evaluation time: the network
/// rss_hat everywhere, except baseline3 which substitutes the analytic r_los
/// on the receivers its deployment-time mask marks as LoS. That mask comes
/// from the method's own training data (per-receiver majority LoS state) --
/// true labels exist only in ray-traced training sets, so using the eval
/// split's mask would hand the baseline an oracle it cannot have. Required
/// for baseline3, ignored otherwise.
std::vector<double> method_predictions(const Prediction& pred, const RssMap& truth, TrainMethod method,
                                       const std::vector<bool>* deployed_los_mask = nullptr);

} // namespace rssgen

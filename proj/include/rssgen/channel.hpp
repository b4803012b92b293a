#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "rssgen/scene.hpp"

namespace rssgen {

struct PathLossParams {
    double fc_ghz = 28.0;
    double shadow_sigma_db = 4.0;
    std::uint64_t shadow_seed = 0;

    void validate() const;
};

/// Oracle constants beyond the path-loss formula. The blockage attenuation
/// model is parametric (per-blocker + per-meter, capped) because the true
/// ray-traced attenuation has no closed form; values are config defaults.
struct ChannelParams {
    PathLossParams pathloss;
    double per_blocker_db = 20.0;
    double per_meter_db = 0.4;
    double blockage_cap_db = 45.0;
    double reflection_loss_db = 6.0;
};

/// Ground-truth RSS grid plus its exact decomposition. For every receiver
/// rss = r_los + r_reflection - r_blockage holds by construction, with
/// r_reflection > 0 only on LoS receivers and r_blockage > 0 only on NLoS.
struct RssMap {
    std::vector<double> rss_dbm;
    std::vector<bool> los_mask;
    std::vector<double> r_los_dbm;
    std::vector<double> r_reflection_db;
    std::vector<double> r_blockage_db;

    int n() const { return static_cast<int>(rss_dbm.size()); }
};

inline double db_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }
inline double mw_to_db(double mw) { return 10.0 * std::log10(mw); }

/// 3GPP UMi LoS path loss: 32.4 + 17.3 log10(d) + 20 log10(fc) + S_f, with
/// the shadowing draw S_f ~ N(0, sigma^2) frozen per (shadow_seed, rx_index).
/// Throws std::domain_error for d_m <= 0.
double pathloss_umi_los(double d_m, const PathLossParams& p, int rx_index);

/// True iff the BS->receiver segment intersects no blocker box; second value
/// is the total chord length through blockers in meters.
std::pair<bool, double> los_test(const Scene& scene, int rx_index);

RssMap compute_rss_map(const Scene& scene, const ChannelParams& p);

} // namespace rssgen

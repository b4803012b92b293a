#include "rssgen/channel.hpp"

#include <cmath>
#include <stdexcept>

#include "rssgen/rng.hpp"

namespace rssgen {

void PathLossParams::validate() const {
    if (!(fc_ghz > 0.0)) throw std::invalid_argument("PathLossParams: fc_ghz must be > 0");
    if (shadow_sigma_db < 0.0) throw std::invalid_argument("PathLossParams: shadow_sigma_db must be >= 0");
}

double pathloss_umi_los(double d_m, const PathLossParams& p, int rx_index) {
    if (!(d_m > 0.0)) throw std::domain_error("pathloss_umi_los: distance must be > 0");
    p.validate();
    double shadow = 0.0;
    if (p.shadow_sigma_db > 0.0) {
        Rng rng(mix_seed(p.shadow_seed, 0x54adULL, static_cast<std::uint64_t>(rx_index)));
        shadow = rng.normal(0.0, p.shadow_sigma_db);
    }
    return 32.4 + 17.3 * std::log10(d_m) + 20.0 * std::log10(p.fc_ghz) + shadow;
}

std::pair<bool, double> los_test(const Scene& scene, int rx_index) {
    if (rx_index < 0 || rx_index >= scene.n_receivers())
        throw std::invalid_argument("los_test: rx_index out of range");
    const Vec3& rx = scene.receivers[static_cast<std::size_t>(rx_index)];
    double blocked = 0.0;
    for (const Blocker& b : scene.blockers) {
        blocked += segment_box_chord(scene.bs_pos, rx, b.box());
    }
    // Surface grazes produce zero-length chords and still count as LoS.
    const bool los = blocked <= 1e-9;
    return {los, los ? 0.0 : blocked};
}

namespace {

/// First-order image-method reflection off a vertical facade. Returns the
/// total reflected path length BS -> facade -> rx, or 0 when no valid
/// reflection point exists. Both legs must be clear of blockers.
double reflection_path_length(const Scene& scene, const Facade& f, const Vec3& rx) {
    const Vec3& bs = scene.bs_pos;
    Vec3 image = bs;
    double bs_side, rx_side;
    if (f.axis == 1) {
        image.y = 2.0 * f.c - bs.y;
        bs_side = bs.y - f.c;
        rx_side = rx.y - f.c;
    } else {
        image.x = 2.0 * f.c - bs.x;
        bs_side = bs.x - f.c;
        rx_side = rx.x - f.c;
    }
    // BS and receiver must lie strictly on the same side of the mirror plane.
    if (bs_side * rx_side <= 0.0) return 0.0;
    const double denom = (f.axis == 1) ? (rx.y - image.y) : (rx.x - image.x);
    if (denom == 0.0) return 0.0;
    const double t = ((f.axis == 1) ? (f.c - image.y) : (f.c - image.x)) / denom;
    if (t <= 0.0 || t >= 1.0) return 0.0;
    const Vec3 hit = image + (rx - image) * t;
    const double along = (f.axis == 1) ? hit.x : hit.y;
    if (along < f.lo || along > f.hi) return 0.0;
    if (hit.z < 0.0 || hit.z > f.height_m) return 0.0;
    for (const Blocker& b : scene.blockers) {
        if (segment_box_chord(bs, hit, b.box()) > 1e-9) return 0.0;
        if (segment_box_chord(hit, rx, b.box()) > 1e-9) return 0.0;
    }
    return (rx - image).norm();
}

} // namespace

RssMap compute_rss_map(const Scene& scene, const ChannelParams& p) {
    const SceneConfig& cfg = scene.config;
    const int n = scene.n_receivers();
    RssMap map;
    map.rss_dbm.resize(static_cast<std::size_t>(n));
    map.los_mask.resize(static_cast<std::size_t>(n));
    map.r_los_dbm.resize(static_cast<std::size_t>(n));
    map.r_reflection_db.assign(static_cast<std::size_t>(n), 0.0);
    map.r_blockage_db.assign(static_cast<std::size_t>(n), 0.0);

    for (int i = 0; i < n; ++i) {
        const Vec3& rx = scene.receivers[static_cast<std::size_t>(i)];
        const double d = (rx - scene.bs_pos).norm();
        const double r_los = cfg.ptx_dbm + cfg.gtx_db + cfg.grx_db - pathloss_umi_los(d, p.pathloss, i);
        map.r_los_dbm[static_cast<std::size_t>(i)] = r_los;

        const auto [los, blocked_len] = los_test(scene, i);
        map.los_mask[static_cast<std::size_t>(i)] = los;
        if (los) {
            // Power-domain sum of the direct path and first-order facade
            // reflections, expressed relative to the direct path so the
            // gain is exactly >= 0.
            double rel_power = 0.0;
            for (const Facade& f : scene.facades) {
                const double path_len = reflection_path_length(scene, f, rx);
                if (path_len <= 0.0) continue;
                const double pl = pathloss_umi_los(path_len, p.pathloss, i) + p.reflection_loss_db;
                const double r_path = cfg.ptx_dbm + cfg.gtx_db + cfg.grx_db - pl;
                rel_power += db_to_mw(r_path - r_los);
            }
            const double gain = 10.0 * std::log10(1.0 + rel_power);
            map.r_reflection_db[static_cast<std::size_t>(i)] = gain;
            map.rss_dbm[static_cast<std::size_t>(i)] = r_los + gain;
        } else {
            int n_hit = 0;
            for (const Blocker& b : scene.blockers) {
                if (segment_box_chord(scene.bs_pos, rx, b.box()) > 1e-9) ++n_hit;
            }
            const double atten =
                std::min(p.blockage_cap_db, p.per_blocker_db * n_hit + p.per_meter_db * blocked_len);
            map.r_blockage_db[static_cast<std::size_t>(i)] = atten;
            map.rss_dbm[static_cast<std::size_t>(i)] = r_los - atten;
        }
    }
    return map;
}

} // namespace rssgen

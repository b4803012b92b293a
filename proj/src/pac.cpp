#include "rssgen/pac.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>

#include "rssgen/rng.hpp"

namespace rssgen {

void FiniteClassSpec::validate() const {
    if (n_cells < 2 || n_cells > 20)
        throw std::invalid_argument("FiniteClassSpec: n_cells must be in [2, 20] (enumeration budget)");
    if (threshold < 0 || threshold > n_cells)
        throw std::invalid_argument("FiniteClassSpec: threshold must be in [0, n_cells]");
    if (!(epsilon0 >= 0.0)) throw std::invalid_argument("FiniteClassSpec: epsilon0 must be >= 0");
    if (!(epsilon1 > 0.0 && epsilon1 < 1.0))
        throw std::invalid_argument("FiniteClassSpec: epsilon1 must be in (0, 1)");
    if (!(delta > 0.0 && delta <= 1.0)) throw std::invalid_argument("FiniteClassSpec: delta must be in (0, 1]");
    if (trials <= 0) throw std::invalid_argument("FiniteClassSpec: trials must be > 0");
}

namespace {

/// Bit x set iff theta has an ascent at x: theta(x) = 0 and theta(x+1) = 1.
inline std::uint32_t ascent_mask(std::uint32_t theta, int n_cells) {
    const std::uint32_t valid = (n_cells >= 2) ? ((1u << (n_cells - 1)) - 1u) : 0u;
    return (~theta) & (theta >> 1) & valid;
}

} // namespace

PacCounts enumerate_restricted_class(const FiniteClassSpec& spec) {
    spec.validate();
    const std::uint64_t total = 1ull << spec.n_cells;
    // E[l_phy(theta)] = ascents / n_cells under the uniform cell draw.
    const double max_ascents = spec.epsilon0 * static_cast<double>(spec.n_cells);
    long long restricted = 0;
    for (std::uint64_t theta = 0; theta < total; ++theta) {
        const int ascents = std::popcount(ascent_mask(static_cast<std::uint32_t>(theta), spec.n_cells));
        if (static_cast<double>(ascents) <= max_ascents + 1e-12) ++restricted;
    }
    return {restricted, static_cast<long long>(total)};
}

long long required_samples(long long class_size, double eps1, double delta) {
    if (class_size < 1) throw std::domain_error("required_samples: class_size must be >= 1");
    if (!(eps1 > 0.0)) throw std::domain_error("required_samples: eps1 must be > 0");
    if (!(delta > 0.0 && delta <= 1.0)) throw std::domain_error("required_samples: delta must be in (0, 1]");
    const double bound = (std::log(static_cast<double>(class_size)) + std::log(1.0 / delta)) / eps1;
    const long long m = static_cast<long long>(std::ceil(bound - 1e-12));
    return m < 0 ? 0 : m;
}

PacRunResult monte_carlo_verify(const FiniteClassSpec& spec, bool physics_filter) {
    const PacCounts counts = enumerate_restricted_class(spec);
    const long long m = required_samples(counts.restricted, spec.epsilon1, spec.delta);

    const std::uint32_t ystar = spec.planted_mask();
    const std::uint64_t total = 1ull << spec.n_cells;
    const double err_budget = spec.epsilon1 * static_cast<double>(spec.n_cells) + 1e-9;

    int ok_lex = 0, ok_worst = 0;
    for (int trial = 0; trial < spec.trials; ++trial) {
        Rng rng(mix_seed(spec.seed, 0xbac0ULL, static_cast<std::uint64_t>(trial)));
        std::uint32_t observed = 0;
        for (long long s = 0; s < m; ++s) {
            observed |= 1u << rng.uniform_int(static_cast<std::uint64_t>(spec.n_cells));
        }

        bool found = false;
        int lex_err = 0, worst_err = 0;
        for (std::uint64_t t = 0; t < total; ++t) {
            const auto theta = static_cast<std::uint32_t>(t);
            if (((theta ^ ystar) & observed) != 0u) continue;
            if (physics_filter && (ascent_mask(theta, spec.n_cells) & observed) != 0u) continue;
            const int err = std::popcount(theta ^ ystar);
            if (!found) {
                found = true;
                lex_err = err; // first hit in increasing mask order
                worst_err = err;
            } else if (err > worst_err) {
                worst_err = err;
            }
        }
        // theta* is consistent with any sample, so the set is never empty.
        if (!found) throw std::logic_error("monte_carlo_verify: no consistent hypothesis");
        if (static_cast<double>(lex_err) <= err_budget) ++ok_lex;
        if (static_cast<double>(worst_err) <= err_budget) ++ok_worst;
    }

    PacRunResult out;
    out.m = m;
    out.class_size_restricted = counts.restricted;
    out.class_size_total = counts.total;
    out.trials = spec.trials;
    out.success_rate_lex = static_cast<double>(ok_lex) / spec.trials;
    out.success_rate_worst = static_cast<double>(ok_worst) / spec.trials;
    return out;
}

} // namespace rssgen

#include "rssgen/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "rssgen/rng.hpp"

namespace rssgen {

std::string optimizer_name(Optimizer o) { return o == Optimizer::sgd ? "sgd" : "adam"; }

Optimizer optimizer_from_name(const std::string& name) {
    if (name == "sgd") return Optimizer::sgd;
    if (name == "adam") return Optimizer::adam;
    throw std::invalid_argument("unknown optimizer: " + name);
}

void TrainConfig::validate() const {
    if (epochs <= 0) throw std::invalid_argument("TrainConfig: epochs must be > 0");
    if (batch <= 0) throw std::invalid_argument("TrainConfig: batch must be > 0");
    if (lr < 0.0) throw std::invalid_argument("TrainConfig: lr must be >= 0");
    if (!(lr_decay_factor > 0.0)) throw std::invalid_argument("TrainConfig: lr_decay_factor must be > 0");
    if (clip_norm <= 0.0) throw std::invalid_argument("TrainConfig: clip_norm must be > 0");
}

EvalReport evaluate_predictions(std::span<const double> preds, std::span<const double> truth) {
    if (preds.size() != truth.size() || preds.empty())
        throw std::invalid_argument("evaluate_predictions: size mismatch");
    double abs_acc = 0.0, sq_acc = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const double e = preds[i] - truth[i];
        abs_acc += std::abs(e);
        sq_acc += e * e;
    }
    const double n = static_cast<double>(preds.size());
    return {abs_acc / n, std::sqrt(sq_acc / n)};
}

std::vector<bool> majority_los_mask(const Dataset& data) {
    if (data.empty()) throw std::invalid_argument("majority_los_mask: empty dataset");
    const std::size_t n = data.front().truth.los_mask.size();
    std::vector<int> los_count(n, 0);
    for (const Record& rec : data) {
        for (std::size_t i = 0; i < n; ++i) {
            if (rec.truth.los_mask[i]) ++los_count[i];
        }
    }
    std::vector<bool> mask(n);
    for (std::size_t i = 0; i < n; ++i) mask[i] = 2 * los_count[i] >= static_cast<int>(data.size());
    return mask;
}

EvalReport evaluate(const Model& model, const Dataset& data, TrainMethod method,
                    const std::vector<bool>* deployed_los_mask) {
    if (data.empty()) throw std::invalid_argument("evaluate: empty dataset");
    double abs_acc = 0.0, sq_acc = 0.0;
    std::size_t count = 0;
    for (const Record& rec : data) {
        const Prediction pred = forward(model, rec.features, rec.truth.r_los_dbm);
        const std::vector<double> preds = method_predictions(pred, rec.truth, method, deployed_los_mask);
        for (std::size_t i = 0; i < preds.size(); ++i) {
            const double e = preds[i] - rec.truth.rss_dbm[i];
            abs_acc += std::abs(e);
            sq_acc += e * e;
        }
        count += preds.size();
    }
    const double n = static_cast<double>(count);
    return {abs_acc / n, std::sqrt(sq_acc / n)};
}

namespace {

double lr_at_epoch(const TrainConfig& cfg, int epoch) {
    double lr = cfg.lr;
    for (int decay_epoch : cfg.lr_decay_epochs) {
        if (epoch >= decay_epoch) lr *= cfg.lr_decay_factor;
    }
    return lr;
}

} // namespace

namespace {

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

void apply_update(Model& model, std::span<const double> grad, const TrainConfig& cfg, double lr,
                  OptimizerState* state) {
    std::vector<double>& theta = model.params();
    if (cfg.optimizer == Optimizer::sgd || !state) {
        for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= lr * grad[i];
        return;
    }
    if (state->m.empty()) {
        state->m.assign(theta.size(), 0.0);
        state->v.assign(theta.size(), 0.0);
        state->t = 0;
    }
    state->t += 1;
    const double bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(state->t));
    const double bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(state->t));
    for (std::size_t i = 0; i < theta.size(); ++i) {
        const double g = grad[i];
        state->m[i] = kAdamBeta1 * state->m[i] + (1.0 - kAdamBeta1) * g;
        state->v[i] = kAdamBeta2 * state->v[i] + (1.0 - kAdamBeta2) * g * g;
        theta[i] -= lr * (state->m[i] / bc1) / (std::sqrt(state->v[i] / bc2) + kAdamEps);
    }
}

} // namespace

EpochStats sgd_epoch(Model& model, const Dataset& data, const TrainConfig& cfg, double lr,
                     std::uint64_t shuffle_seed, FeatureStats* stats, OptimizerState* opt_state) {
    if (data.empty()) throw std::invalid_argument("sgd_epoch: empty dataset");
    const std::size_t n_frames = data.size();
    std::vector<std::size_t> order(n_frames);
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng(shuffle_seed);
    for (std::size_t i = n_frames; i > 1; --i) {
        std::swap(order[i - 1], order[shuffle_rng.uniform_int(i)]);
    }

    std::vector<double> grad(model.param_count(), 0.0);
    std::vector<double> dheads;
    ForwardCache cache;
    double epoch_ldata = 0.0, epoch_lphy = 0.0;
    double epoch_abs = 0.0, epoch_sq = 0.0;
    std::size_t epoch_rx = 0;

    for (std::size_t start = 0; start < n_frames; start += static_cast<std::size_t>(cfg.batch)) {
        const std::size_t stop = std::min(n_frames, start + static_cast<std::size_t>(cfg.batch));
        const double inv_b = 1.0 / static_cast<double>(stop - start);
        std::fill(grad.begin(), grad.end(), 0.0);
        for (std::size_t k = start; k < stop; ++k) {
            const Record& rec = data[order[k]];
            const Prediction pred = forward(model, rec.features, rec.truth.r_los_dbm, &cache);
            if (stats) update_stats(*stats, pred.fused);
            const LossBreakdown lb = total_loss(pred, rec.truth, cfg.lambda, cfg.method, &dheads);
            backward(model, cache, dheads, grad);
            epoch_ldata += lb.l_data;
            epoch_lphy += lb.l_phy();
            for (std::size_t i = 0; i < pred.rss_hat_dbm.size(); ++i) {
                const double e = pred.rss_hat_dbm[i] - rec.truth.rss_dbm[i];
                epoch_abs += std::abs(e);
                epoch_sq += e * e;
            }
            epoch_rx += pred.rss_hat_dbm.size();
        }
        for (double& g : grad) g *= inv_b;
        clip_global_norm(grad, cfg.clip_norm);
        apply_update(model, grad, cfg, lr, opt_state);
    }

    EpochStats out;
    out.l_data = epoch_ldata / static_cast<double>(n_frames);
    out.l_phy = epoch_lphy / static_cast<double>(n_frames);
    out.mae = epoch_abs / static_cast<double>(epoch_rx);
    out.rmse = std::sqrt(epoch_sq / static_cast<double>(epoch_rx));
    return out;
}

TrainResult train(int bs_id, const ModelConfig& mcfg, const Dataset& train_set,
                  const std::vector<EvalSplit>& evals, const TrainConfig& cfg) {
    cfg.validate();
    if (train_set.empty()) throw std::invalid_argument("train: empty dataset");

    Model model = Model::init(mcfg, mix_seed(cfg.seed, static_cast<std::uint64_t>(bs_id)));
    TrainResult result{std::move(model), {}, {}, {}, 0.0, 0};
    result.train_los_majority = majority_los_mask(train_set);
    const std::size_t n_frames = train_set.size();
    OptimizerState opt;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = lr_at_epoch(cfg, epoch);
        // Stats reset per epoch: the shipped FeatureStats describe the
        // feature distribution under the (near-)final encoder.
        result.stats = FeatureStats{};
        const EpochStats es = sgd_epoch(result.model, train_set, cfg, lr,
                                        mix_seed(cfg.seed, 0x0bdeULL, static_cast<std::uint64_t>(epoch)),
                                        &result.stats, &opt);

        result.flops += flops_estimate(result.model, static_cast<std::int64_t>(n_frames));
        const double mean_ldata = es.l_data;
        const double mean_lphy = es.l_phy;
        const double train_mae = es.mae;
        const double train_rmse = es.rmse;
        result.final_train_rmse = train_rmse;

        const bool last = epoch == cfg.epochs - 1;
        const bool do_eval = last || (cfg.eval_every > 0 && (epoch + 1) % cfg.eval_every == 0);
        if (!do_eval) continue;

        MetricsRow base;
        base.bs_id = bs_id;
        base.method = train_method_name(cfg.method);
        base.seed = cfg.seed;
        base.epoch = epoch;
        base.flops = result.flops;
        base.l_data = mean_ldata;
        base.l_phy = mean_lphy;

        MetricsRow train_row = base;
        train_row.split = "train";
        train_row.mae = train_mae;
        train_row.rmse = train_rmse;
        result.history.push_back(train_row);

        for (const EvalSplit& split : evals) {
            if (!split.data || split.data->empty()) continue;
            const EvalReport rep = evaluate(result.model, *split.data, cfg.method, &result.train_los_majority);
            MetricsRow row = base;
            row.split = split.name;
            row.mae = rep.mae_dbm;
            row.rmse = rep.rmse_dbm;
            result.history.push_back(row);
        }
    }
    return result;
}

std::vector<SweepRow> sample_efficiency_sweep(int bs_id, const ModelConfig& mcfg, const Dataset& train_set,
                                              const Dataset& val1, const Dataset& val2,
                                              const TrainConfig& base_cfg, const SweepSpec& spec) {
    if (train_set.empty()) throw std::invalid_argument("sample_efficiency_sweep: empty dataset");
    for (double f : spec.fractions) {
        if (!(f > 0.0) || f > 1.0)
            throw std::invalid_argument("sample_efficiency_sweep: fractions must lie in (0, 1]");
    }

    // One fixed shuffle shared by every (fraction, method, seed) cell so the
    // prefix subsets nest.
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(mix_seed(0x54b5e7ULL, static_cast<std::uint64_t>(bs_id)));
    for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[rng.uniform_int(i)]);
    }

    std::vector<SweepRow> rows;
    for (double fraction : spec.fractions) {
        const std::size_t take =
            std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(train_set.size()))));
        // Subsets are the first `take` entries of the fixed shuffle, restored
        // to dataset order, so fraction 1.0 is exactly the plain train call.
        std::vector<std::size_t> chosen(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take));
        std::sort(chosen.begin(), chosen.end());
        Dataset subset;
        subset.reserve(take);
        for (std::size_t idx : chosen) subset.push_back(train_set[idx]);
        for (TrainMethod method : spec.methods) {
            for (std::uint64_t seed : spec.seeds) {
                TrainConfig cfg = base_cfg;
                cfg.method = method;
                cfg.seed = seed;
                cfg.eval_every = 0;
                TrainResult res = train(bs_id, mcfg, subset, {}, cfg);
                SweepRow row;
                row.bs_id = bs_id;
                row.method = method;
                row.seed = seed;
                row.fraction = fraction;
                row.val1 = evaluate(res.model, val1, method, &res.train_los_majority);
                row.val2 = evaluate(res.model, val2, method, &res.train_los_majority);
                row.flops = res.flops;
                for (const MetricsRow& h : res.history) {
                    if (h.split == "train") {
                        row.l_data = h.l_data;
                        row.l_phy = h.l_phy;
                    }
                }
                rows.push_back(row);
            }
        }
    }
    return rows;
}

} // namespace rssgen

#pragma once

#include <array>
#include <chrono>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sstrec/climatology.hpp"
#include "sstrec/grid_ops.hpp"
#include "sstrec/maskgen.hpp"
#include "sstrec/models/model.hpp"
#include "sstrec/nn/optim.hpp"

namespace sstrec {

struct TrainConfig {
    int max_epochs = 200;
    int steps_per_epoch = 200;
    int batch_size = 32;
    double lr0 = 1e-4;
    double lr_min = 1e-5;
    double weight_decay = 1e-4;
    int plateau_patience = 10;
    int early_stop_patience = 10;
    int eval_interval = 0;  // epochs between RMSE test-callback runs, 0 disables
    int val_batches = 4;
    uint64_t seed = 0;
    std::string checkpoint_path;  // best-so-far weights, empty keeps them in memory

    void check() const {
        if (lr_min >= lr0) throw std::invalid_argument("TrainConfig: lr_min >= lr0");
        if (plateau_patience < 1 || early_stop_patience < 1)
            throw std::invalid_argument("TrainConfig: patience < 1");
        if (max_epochs < 1 || steps_per_epoch < 1 || batch_size < 1)
            throw std::invalid_argument("TrainConfig: non-positive loop bounds");
    }
};

struct EpochLog {
    int epoch = 0;
    double train_loss = 0;
    double val_loss = 0;
    double lr = 0;
    double wall_s = 0;
    bool checkpointed = false;
    double test_rmse = std::numeric_limits<double>::quiet_NaN();
};

struct TrainLog {
    std::vector<EpochLog> epochs;
    int best_epoch = -1;
    double best_val = std::numeric_limits<double>::infinity();
    bool early_stopped = false;
};

/// Mean squared error over mask-true cells only.
inline double masked_mse(const nn::Tensor& pred, const nn::Tensor& truth, const nn::Tensor& mask) {
    if (!pred.same_shape(truth) || pred.size() != mask.size())
        throw std::invalid_argument("masked_mse: shape mismatch");
    double sum = 0;
    size_t n = 0;
    for (size_t i = 0; i < pred.size(); ++i) {
        if (mask[i] == 0.0f) continue;
        double d = static_cast<double>(pred[i]) - truth[i];
        sum += d * d;
        ++n;
    }
    if (n == 0) throw std::invalid_argument("masked_mse: empty mask");
    return sum / static_cast<double>(n);
}

/// Gradient of masked_mse w.r.t. pred.
inline nn::Tensor masked_mse_grad(const nn::Tensor& pred, const nn::Tensor& truth,
                                  const nn::Tensor& mask) {
    size_t n = 0;
    for (size_t i = 0; i < mask.size(); ++i)
        if (mask[i] != 0.0f) ++n;
    if (n == 0) throw std::invalid_argument("masked_mse_grad: empty mask");
    nn::Tensor g(pred.shape);
    float inv = 2.0f / static_cast<float>(n);
    for (size_t i = 0; i < pred.size(); ++i)
        if (mask[i] != 0.0f) g[i] = inv * (pred[i] - truth[i]);
    return g;
}

/// Batch of samples packed into NHWC tensors. The loss mask covers all
/// real-valid sea cells of the current day; the diff mask is evaluation-only.
struct BatchTensors {
    nn::Tensor x;          // N,H,W,2s+1
    nn::Tensor truth;      // N,H,W,1
    nn::Tensor loss_mask;  // N,H,W,1 — real mask
    nn::Tensor diff_mask;  // N,H,W,1
    std::vector<Sample> samples;
};

inline BatchTensors pack_batch(std::vector<Sample> batch) {
    int N = static_cast<int>(batch.size());
    int h = batch[0].h(), w = batch[0].w();
    int C = static_cast<int>(batch[0].x.size());
    BatchTensors bt;
    bt.x = nn::Tensor({N, h, w, C});
    bt.truth = nn::Tensor({N, h, w, 1});
    bt.loss_mask = nn::Tensor({N, h, w, 1});
    bt.diff_mask = nn::Tensor({N, h, w, 1});
    size_t plane = static_cast<size_t>(h) * w;
    for (int n = 0; n < N; ++n) {
        const Sample& s = batch[n];
        for (size_t i = 0; i < plane; ++i) {
            for (int c = 0; c < C; ++c) bt.x.data[(n * plane + i) * C + c] = s.x[c][i];
            bt.truth.data[n * plane + i] = s.truth()[i];
            bt.loss_mask.data[n * plane + i] = s.real_mask()[i];
            bt.diff_mask.data[n * plane + i] = s.diff_mask()[i];
        }
    }
    bt.samples = std::move(batch);
    return bt;
}

struct RmseResult {
    double rmse = 0;       // °C over diff-mask cells
    double batch_std = 0;  // std of per-batch RMSEs
    size_t n_cells = 0;
};

/// Diff-mask RMSE in restored temperature units, averaged over
/// n_batches * batch_size samples drawn at deterministic indices.
inline RmseResult evaluate_rmse(Model& model, const SampleGenerator& gen, int n_batches = 50,
                                int batch_size = 32, uint64_t index_base = 0) {
    double scale = gen.scale();
    double total_sq = 0;
    size_t total_n = 0;
    std::vector<double> per_batch;
    for (int b = 0; b < n_batches; ++b) {
        std::vector<Sample> raw;
        raw.reserve(batch_size);
        for (int i = 0; i < batch_size; ++i)
            raw.push_back(gen.make_sample_at(index_base + static_cast<uint64_t>(b) * batch_size + i));
        BatchTensors bt = pack_batch(std::move(raw));
        nn::Tensor pred = model.forward(bt.x, false);
        double sq = 0;
        size_t n = 0;
        for (size_t i = 0; i < pred.size(); ++i) {
            if (bt.diff_mask[i] == 0.0f) continue;
            double d = (static_cast<double>(pred[i]) - bt.truth[i]) * scale;
            sq += d * d;
            ++n;
        }
        per_batch.push_back(n ? std::sqrt(sq / static_cast<double>(n)) : 0.0);
        total_sq += sq;
        total_n += n;
    }
    RmseResult r;
    r.n_cells = total_n;
    r.rmse = total_n ? std::sqrt(total_sq / static_cast<double>(total_n)) : 0.0;
    double mean = 0;
    for (double v : per_batch) mean += v;
    mean /= static_cast<double>(per_batch.size());
    double var = 0;
    for (double v : per_batch) var += (v - mean) * (v - mean);
    r.batch_std = std::sqrt(var / static_cast<double>(per_batch.size()));
    return r;
}

/// Training loop with early stopping, reduce-LR-on-plateau, best-weights
/// checkpointing and an optional periodic RMSE test callback.
inline TrainLog train(Model& model, SampleGenerator& gen_train, const SampleGenerator& gen_val,
                      const TrainConfig& cfg, const SampleGenerator* gen_test = nullptr,
                      int test_batches = 10) {
    cfg.check();
    TrainLog log;
    nn::AdamWState opt;
    opt.lr = cfg.lr0;
    opt.weight_decay = cfg.weight_decay;
    auto& params = model.params();

    // best-weights snapshot for restore-on-finish
    std::vector<std::vector<float>> best_weights;
    std::vector<std::vector<float>> best_state;
    auto state = model.state();
    auto snapshot = [&] {
        best_weights.clear();
        best_state.clear();
        for (auto* p : params) best_weights.push_back(p->value.data);
        for (auto& [name, buf] : state.entries) best_state.push_back(*buf);
    };
    auto restore = [&] {
        if (best_weights.empty()) return;
        for (size_t i = 0; i < params.size(); ++i) params[i]->value.data = best_weights[i];
        for (size_t i = 0; i < state.entries.size(); ++i) *state.entries[i].second = best_state[i];
    };

    int stagnant = 0, plateau = 0;
    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        auto t0 = std::chrono::steady_clock::now();
        double train_loss = 0;
        for (int step = 0; step < cfg.steps_per_epoch; ++step) {
            BatchTensors bt = pack_batch(gen_train.make_batch(cfg.batch_size));
            nn::Tensor pred = model.forward(bt.x, true);
            double loss = masked_mse(pred, bt.truth, bt.loss_mask);
            if (!std::isfinite(loss))
                throw std::runtime_error("train: non-finite loss at epoch " +
                                         std::to_string(epoch) + " step " + std::to_string(step));
            train_loss += loss;
            nn::zero_grads(params);
            model.backward(masked_mse_grad(pred, bt.truth, bt.loss_mask));
            nn::adamw_step(params, opt);
        }
        train_loss /= cfg.steps_per_epoch;

        // fixed validation set: deterministic sample indices
        double val_loss = 0;
        for (int b = 0; b < cfg.val_batches; ++b) {
            std::vector<Sample> raw;
            for (int i = 0; i < cfg.batch_size; ++i)
                raw.push_back(gen_val.make_sample_at(static_cast<uint64_t>(b) * cfg.batch_size + i));
            BatchTensors bt = pack_batch(std::move(raw));
            nn::Tensor pred = model.forward(bt.x, false);
            val_loss += masked_mse(pred, bt.truth, bt.loss_mask);
        }
        val_loss /= cfg.val_batches;

        EpochLog el;
        el.epoch = epoch;
        el.train_loss = train_loss;
        el.val_loss = val_loss;
        el.lr = opt.lr;
        el.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        if (val_loss < log.best_val) {
            log.best_val = val_loss;
            log.best_epoch = epoch;
            stagnant = 0;
            plateau = 0;
            snapshot();
            if (!cfg.checkpoint_path.empty())
                model_save(model, cfg.checkpoint_path,
                           {{"epoch", epoch}, {"val_loss", val_loss}, {"lr", opt.lr},
                            {"optimizer", {{"lr0", cfg.lr0}, {"weight_decay", cfg.weight_decay},
                                           {"beta1", opt.beta1}, {"beta2", opt.beta2}}}});
            el.checkpointed = true;
        } else {
            ++stagnant;
            ++plateau;
        }
        if (plateau >= cfg.plateau_patience && opt.lr > cfg.lr_min) {
            opt.lr = std::max(opt.lr / 2.0, cfg.lr_min);
            plateau = 0;
        }
        if (gen_test && cfg.eval_interval > 0 && epoch % cfg.eval_interval == 0)
            el.test_rmse = evaluate_rmse(model, *gen_test, test_batches, cfg.batch_size).rmse;
        log.epochs.push_back(el);

        if (stagnant >= cfg.early_stop_patience) {
            log.early_stopped = true;
            break;
        }
    }
    restore();
    return log;
}

// ---------------------------------------------------------------------------
// Evaluation helpers

struct DegradationPoint {
    double visibility = 0;  // mean post-occlusion visible sea fraction
    double rmse = 0;
};

/// RMSE as a function of occlusion, produced by sweeping the donor-day
/// visibility range. Ranges are (lo, hi) pairs over donor visibility.
inline std::vector<DegradationPoint> degradation_curve(
    Model& model, const Dataset& ds, const Climatology& clim, GeneratorConfig base_cfg,
    const std::vector<std::pair<double, double>>& donor_ranges, int day_lo = 0, int day_hi = -1,
    int n_batches = 10, int batch_size = 32) {
    std::vector<DegradationPoint> points;
    for (auto [lo, hi] : donor_ranges) {
        GeneratorConfig cfg = base_cfg;
        cfg.donor_visible_min = lo;
        cfg.donor_visible_max = hi;
        SampleGenerator gen(ds, clim, cfg, day_lo, day_hi);
        double vis_sum = 0;
        size_t vis_n = 0;
        double scale = gen.scale();
        double sq = 0;
        size_t n = 0;
        for (int b = 0; b < n_batches; ++b) {
            std::vector<Sample> raw;
            for (int i = 0; i < batch_size; ++i)
                raw.push_back(gen.make_sample_at(static_cast<uint64_t>(b) * batch_size + i));
            for (const auto& s : raw) {
                size_t sea = 0, post = 0;
                const Raster& land = s.x.back();
                const Raster& art = s.x[2 * (gen.config().s_days - 1) + 1];
                for (size_t i = 0; i < land.size(); ++i) {
                    if (land[i] != 0.0f) continue;
                    ++sea;
                    if (art[i] != 0.0f) ++post;
                }
                vis_sum += static_cast<double>(post) / sea;
                ++vis_n;
            }
            BatchTensors bt = pack_batch(std::move(raw));
            nn::Tensor pred = model.forward(bt.x, false);
            for (size_t i = 0; i < pred.size(); ++i) {
                if (bt.diff_mask[i] == 0.0f) continue;
                double d = (static_cast<double>(pred[i]) - bt.truth[i]) * scale;
                sq += d * d;
                ++n;
            }
        }
        points.push_back({vis_sum / static_cast<double>(vis_n),
                          n ? std::sqrt(sq / static_cast<double>(n)) : 0.0});
    }
    return points;
}

/// Restrict a dataset to one quadrant (0 NW, 1 NE, 2 SW, 3 SE).
inline Dataset dataset_quadrant(const Dataset& ds, int q) {
    if (q < 0 || q > 3) throw std::invalid_argument("dataset_quadrant: q outside [0,3]");
    Dataset out;
    out.name = ds.name + "/q" + std::to_string(q);
    out.provenance = ds.provenance;
    for (const auto& d : ds.days) {
        Day day;
        day.date = d.date;
        day.field = split_quadrants(d.field)[q];
        out.days.push_back(std::move(day));
    }
    return out;
}

struct QuadrantResult {
    std::array<double, 4> rmse{};       // NW, NE, SW, SE
    std::array<size_t, 4> n_cells{};
    double mean = 0;  // sample-weighted
};

/// Four independent models tiling a split domain.
inline QuadrantResult quadrant_eval(const std::array<Model*, 4>& models,
                                    const std::array<const SampleGenerator*, 4>& gens,
                                    int n_batches = 10, int batch_size = 32) {
    QuadrantResult r;
    double total_sq = 0;
    size_t total_n = 0;
    for (int q = 0; q < 4; ++q) {
        double scale = gens[q]->scale();
        double sq = 0;
        size_t n = 0;
        for (int b = 0; b < n_batches; ++b) {
            std::vector<Sample> raw;
            for (int i = 0; i < batch_size; ++i)
                raw.push_back(gens[q]->make_sample_at(static_cast<uint64_t>(b) * batch_size + i));
            BatchTensors bt = pack_batch(std::move(raw));
            nn::Tensor pred = models[q]->forward(bt.x, false);
            for (size_t i = 0; i < pred.size(); ++i) {
                if (bt.diff_mask[i] == 0.0f) continue;
                double d = (static_cast<double>(pred[i]) - bt.truth[i]) * scale;
                sq += d * d;
                ++n;
            }
        }
        r.rmse[q] = n ? std::sqrt(sq / static_cast<double>(n)) : 0.0;
        r.n_cells[q] = n;
        total_sq += sq;
        total_n += n;
    }
    r.mean = total_n ? std::sqrt(total_sq / static_cast<double>(total_n)) : 0.0;
    return r;
}

/// Non-learned reference reconstructions evaluated on the same diff cells:
/// persistence (most recent visible input day), climatology, shifted
/// climatology, and iterated NaN-aware Gaussian fill of the occluded input.
inline std::map<std::string, double> baselines(const SampleGenerator& gen, const Dataset& ds,
                                               const Climatology& clim, int n_samples = 320,
                                               uint64_t index_base = 0) {
    std::map<std::string, double> sq = {{"persistence_1d", 0},
                                        {"climatology", 0},
                                        {"shifted_climatology", 0},
                                        {"gaussian_fill", 0}};
    std::map<std::string, size_t> cnt;
    for (auto& [k, v] : sq) cnt[k] = 0;
    int s_days = gen.config().s_days;

    for (int si = 0; si < n_samples; ++si) {
        Sample s = gen.make_sample_at(index_base + si);
        const MaskedField& base = ds.days[s.base_index].field;
        const Mask& donor_valid = ds.days[s.donor_index].field.valid;
        int slot = s.doy_slot;
        const Raster& clim_mean = clim.doy_mean[slot];
        size_t n = base.values.size();

        // shifted climatology offset from the artificially visible cells
        double delta = 0;
        size_t dn = 0;
        for (size_t i = 0; i < n; ++i)
            if (base.valid[i] && donor_valid[i]) {
                delta += static_cast<double>(base.values[i]) - clim_mean[i];
                ++dn;
            }
        delta = dn ? delta / static_cast<double>(dn) : 0.0;

        // iterated gaussian fill of the occluded current-day field
        MaskedField occluded(base.h(), base.w());
        occluded.land = base.land;
        for (size_t i = 0; i < n; ++i)
            if (base.valid[i] && donor_valid[i]) {
                occluded.valid[i] = 1;
                occluded.values[i] = base.values[i];
            }
        MaskedField filled = occluded;
        GaussianSpec fill_spec{3.0f, 0.0f, 3.0f};
        for (int it = 0; it < 10; ++it) {
            bool full = true;
            for (size_t i = 0; i < n; ++i)
                if (!filled.land[i] && !filled.valid[i]) {
                    full = false;
                    break;
                }
            if (full) break;
            MaskedField blurred = gaussian_blur_nan(filled, fill_spec);
            for (size_t i = 0; i < n; ++i)
                if (!filled.valid[i] && blurred.valid[i]) {
                    filled.valid[i] = 1;
                    filled.values[i] = blurred.values[i];
                }
        }

        for (size_t i = 0; i < n; ++i) {
            if (s.diff_mask()[i] == 0.0f) continue;
            double truth = base.values[i];

            // persistence: most recent artificially visible previous day
            double pred_p = clim_mean[i];
            for (int k = 1; k < s_days; ++k) {
                const MaskedField& prev = ds.days[s.base_index - k].field;
                if (prev.valid[i] && donor_valid[i]) {
                    pred_p = prev.values[i];
                    break;
                }
            }
            auto acc = [&](const std::string& key, double pred) {
                double d = pred - truth;
                sq[key] += d * d;
                ++cnt[key];
            };
            acc("persistence_1d", pred_p);
            acc("climatology", clim_mean[i]);
            acc("shifted_climatology", clim_mean[i] + delta);
            acc("gaussian_fill", filled.valid[i] ? filled.values[i] : clim_mean[i]);
        }
    }
    std::map<std::string, double> out;
    for (auto& [k, v] : sq) out[k] = cnt[k] ? std::sqrt(v / static_cast<double>(cnt[k])) : 0.0;
    return out;
}

/// CSV body of a training log; timestamps live in a header comment upstream.
inline std::string train_log_csv(const TrainLog& log) {
    std::string csv = "epoch,train_loss,val_loss,lr,wall_s,checkpointed,test_rmse\n";
    char buf[256];
    for (const auto& e : log.epochs) {
        std::snprintf(buf, sizeof buf, "%d,%.8g,%.8g,%.8g,%.3f,%d,%.8g\n", e.epoch, e.train_loss,
                      e.val_loss, e.lr, e.wall_s, e.checkpointed ? 1 : 0, e.test_rmse);
        csv += buf;
    }
    return csv;
}

}  // namespace sstrec

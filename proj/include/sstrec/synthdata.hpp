#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <random>
#include <vector>

#include <json.hpp>

#include "sstrec/core.hpp"
#include "sstrec/dataset.hpp"
#include "sstrec/grid_ops.hpp"

namespace sstrec {

/// Synthetic SST-like dataset: seasonal sinusoid + AR(1) spatially smooth
/// anomaly + coastal gradient band, with temporally correlated cloud masks.
struct SynthConfig {
    int grid_h = 64, grid_w = 64;
    int n_years = 3;
    uint64_t seed = 7;
    float seasonal_amp = 5.0f;      // °C
    float mean_sst = 20.0f;         // °C
    float anom_std = 0.8f;          // °C, anomaly process std
    float spatial_corr_len = 4.0f;  // cells
    float temporal_corr_days = 3.0f;
    float cloud_cover_mean = 0.54f; // fraction; mean visibility = 1 - this
    float cloud_vis_spread = 1.1f;  // logit-space std of per-day visibility
    float cloud_corr_days = 2.0f;
    float coast_fraction = 0.12f;
    float coast_amp = -1.5f;        // °C offset at the shoreline

    void check() const {
        if (grid_h < 8 || grid_w < 8) throw std::invalid_argument("SynthConfig: grid too small");
        if (n_years < 1) throw std::invalid_argument("SynthConfig: n_years < 1");
        if (cloud_cover_mean <= 0 || cloud_cover_mean >= 1)
            throw std::invalid_argument("SynthConfig: cloud_cover_mean outside (0,1)");
        if (seasonal_amp < 0 || anom_std < 0 || spatial_corr_len <= 0 || temporal_corr_days <= 0 ||
            coast_fraction < 0 || coast_fraction >= 1)
            throw std::invalid_argument("SynthConfig: invalid field");
    }

    nlohmann::json to_json() const {
        return {{"grid_h", grid_h}, {"grid_w", grid_w}, {"n_years", n_years}, {"seed", seed},
                {"seasonal_amp", seasonal_amp}, {"mean_sst", mean_sst}, {"anom_std", anom_std},
                {"spatial_corr_len", spatial_corr_len}, {"temporal_corr_days", temporal_corr_days},
                {"cloud_cover_mean", cloud_cover_mean}, {"cloud_vis_spread", cloud_vis_spread},
                {"cloud_corr_days", cloud_corr_days}, {"coast_fraction", coast_fraction},
                {"coast_amp", coast_amp}};
    }
};

namespace detail {

/// Spatially smooth unit-variance noise field: white gaussian noise blurred
/// with a separable Gaussian of the given correlation length, then
/// standardized empirically.
inline std::vector<double> smooth_noise(std::mt19937_64& rng, int h, int w, double corr_len) {
    size_t n = static_cast<size_t>(h) * w;
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> a(n), b(n);
    for (auto& v : a) v = gauss(rng);
    auto k = gaussian_kernel1d(corr_len, 3.0);
    blur_axis_x(a, b, h, w, k);
    blur_axis_y(b, a, h, w, k);
    double mean = 0, var = 0;
    for (double v : a) mean += v;
    mean /= static_cast<double>(n);
    for (double v : a) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n);
    double inv = var > 0 ? 1.0 / std::sqrt(var) : 1.0;
    for (auto& v : a) v = (v - mean) * inv;
    return a;
}

}  // namespace detail

/// Connected land band along the left edge with a wavy shoreline.
inline Mask gen_land(const SynthConfig& cfg) {
    Mask land(cfg.grid_h, cfg.grid_w, 0);
    if (cfg.coast_fraction <= 0) return land;
    for (int y = 0; y < cfg.grid_h; ++y) {
        double wave = 1.0 + 0.6 * std::sin(2.0 * M_PI * 2.3 * y / cfg.grid_h + 0.7);
        int width = std::max(1, static_cast<int>(std::lround(cfg.coast_fraction * cfg.grid_w * wave)));
        for (int x = 0; x < std::min(width, cfg.grid_w - 4); ++x) land(y, x) = 1;
    }
    return land;
}

/// Occlude a smooth cloud field so that exactly the requested fraction of sea
/// cells stays visible (cells with the highest field values survive).
inline Mask cloud_mask_from_field(const std::vector<double>& field, const Mask& land,
                                  double visible_fraction) {
    Mask valid(land.h(), land.w(), 0);
    std::vector<double> sea_vals;
    sea_vals.reserve(field.size());
    for (size_t i = 0; i < field.size(); ++i)
        if (!land[i]) sea_vals.push_back(field[i]);
    if (sea_vals.empty()) return valid;
    size_t n_visible = static_cast<size_t>(std::lround(visible_fraction * sea_vals.size()));
    n_visible = std::min(n_visible, sea_vals.size());
    if (n_visible == 0) return valid;
    size_t kth = sea_vals.size() - n_visible;
    std::nth_element(sea_vals.begin(), sea_vals.begin() + kth, sea_vals.end());
    double thr = sea_vals[kth];
    size_t kept = 0;
    for (size_t i = 0; i < field.size(); ++i)
        if (!land[i] && field[i] >= thr && kept < n_visible) {
            valid[i] = 1;
            ++kept;
        }
    return valid;
}

/// Stateful cloud process: AR(1) smooth noise thresholded per day at a
/// random per-day visibility level (logit-normal around the configured mean).
class CloudModel {
public:
    CloudModel(const SynthConfig& cfg, std::mt19937_64& rng) : cfg_(cfg) {
        state_ = detail::smooth_noise(rng, cfg.grid_h, cfg.grid_w, cfg.spatial_corr_len);
    }

    Mask next(std::mt19937_64& rng, const Mask& land) {
        double rho = std::exp(-1.0 / cfg_.cloud_corr_days);
        auto innov = detail::smooth_noise(rng, cfg_.grid_h, cfg_.grid_w, cfg_.spatial_corr_len);
        for (size_t i = 0; i < state_.size(); ++i)
            state_[i] = rho * state_[i] + std::sqrt(1.0 - rho * rho) * innov[i];
        double mu = std::log((1.0 - cfg_.cloud_cover_mean) / cfg_.cloud_cover_mean);
        std::normal_distribution<double> gauss(mu, cfg_.cloud_vis_spread);
        double v = 1.0 / (1.0 + std::exp(-gauss(rng)));
        v = std::clamp(v, 0.02, 0.995);
        return cloud_mask_from_field(state_, land, v);
    }

private:
    SynthConfig cfg_;
    std::vector<double> state_;
};

/// Deterministic synthetic dataset. Same config (incl. seed) twice yields
/// bit-identical data.
inline Dataset gen_dataset(const SynthConfig& cfg, bool all_visible = false) {
    cfg.check();
    std::mt19937_64 rng(cfg.seed);
    Mask land = gen_land(cfg);
    int h = cfg.grid_h, w = cfg.grid_w;
    size_t n = static_cast<size_t>(h) * w;

    // distance-to-land (Chebyshev BFS) for the coastal gradient band
    std::vector<int> dist(n, -1);
    std::deque<size_t> queue;
    for (size_t i = 0; i < n; ++i)
        if (land[i]) {
            dist[i] = 0;
            queue.push_back(i);
        }
    while (!queue.empty()) {
        size_t i = queue.front();
        queue.pop_front();
        int y = static_cast<int>(i) / w, x = static_cast<int>(i) % w;
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                int yy = y + dy, xx = x + dx;
                if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
                size_t j = static_cast<size_t>(yy) * w + xx;
                if (dist[j] < 0) {
                    dist[j] = dist[i] + 1;
                    queue.push_back(j);
                }
            }
    }
    std::vector<float> coast(n, 0.0f);
    for (size_t i = 0; i < n; ++i)
        if (!land[i] && dist[i] >= 0)
            coast[i] = cfg.coast_amp * static_cast<float>(std::exp(-dist[i] / 3.0));

    double rho = std::exp(-1.0 / cfg.temporal_corr_days);
    std::vector<double> anom = detail::smooth_noise(rng, h, w, cfg.spatial_corr_len);
    CloudModel clouds(cfg, rng);

    Dataset ds;
    ds.name = "synthetic";
    ds.provenance = {{"kind", "synthetic"}, {"config", cfg.to_json()}};
    Date date{2015, 1, 1};
    int n_days = 0;
    for (int y = 0; y < cfg.n_years; ++y) n_days += is_leap(2015 + y) ? 366 : 365;
    ds.days.reserve(n_days);

    for (int t = 0; t < n_days; ++t) {
        if (t > 0) {
            auto innov = detail::smooth_noise(rng, h, w, cfg.spatial_corr_len);
            for (size_t i = 0; i < n; ++i)
                anom[i] = rho * anom[i] + std::sqrt(1.0 - rho * rho) * innov[i];
        }
        double season = cfg.seasonal_amp *
                        std::sin(2.0 * M_PI * (day_of_year(date) - 105.0) / 365.25);
        Mask valid = clouds.next(rng, land);

        Day day;
        day.date = date;
        day.field = MaskedField(h, w);
        day.field.land = land;
        for (size_t i = 0; i < n; ++i) {
            if (land[i]) continue;
            float sst = static_cast<float>(cfg.mean_sst + season + cfg.anom_std * anom[i] + coast[i]);
            if (all_visible || valid[i]) {
                day.field.valid[i] = 1;
                day.field.values[i] = sst;
            }
        }
        ds.days.push_back(std::move(day));
        date = next_day(date);
    }
    return ds;
}

/// Same process with every sea cell visible; used by tests that need a
/// cloud-free reference.
inline Dataset gen_dataset_cloudfree(const SynthConfig& cfg) { return gen_dataset(cfg, true); }

}  // namespace sstrec

#pragma once

#include <cmath>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "sstrec/climatology.hpp"
#include "sstrec/dataset.hpp"
#include "sstrec/grid_ops.hpp"

namespace sstrec {

enum class NormMode { residual, direct };

/// Occlusion generator parameters. The *_visible_range knobs restrict which
/// days qualify as base/donor; they calibrate the training vs testing
/// occlusion profiles without changing the hard constraints.
struct GeneratorConfig {
    int s_days = 3;                      // temporal window: current + s-1 previous
    double min_base_visible = 0.40;      // hard floor on the base day
    double min_post_visible = 0.05;      // hard floor after artificial occlusion
    double min_diff_sea_fraction = 0.10; // diff mask must cover this much sea
    double base_visible_max = 1.0;
    double donor_visible_min = 0.0;
    double donor_visible_max = 1.0;
    int max_retries = 100;
    uint64_t seed = 0;
    NormMode mode = NormMode::residual;
    float fill_value = 0.0f;  // occluded input cells, normalized space

    void check() const {
        if (s_days < 1) throw std::invalid_argument("GeneratorConfig: s_days < 1");
        if (!(0 < min_post_visible && min_post_visible < min_base_visible &&
              min_base_visible <= 1.0))
            throw std::invalid_argument("GeneratorConfig: visibility bounds out of order");
        if (min_diff_sea_fraction <= 0)
            throw std::invalid_argument("GeneratorConfig: min_diff_sea_fraction <= 0");
        if (max_retries < 1) throw std::invalid_argument("GeneratorConfig: max_retries < 1");
    }

    /// Heavier occlusion for training: post-visibility around 25%, diff
    /// around 40% of the sea.
    static GeneratorConfig training_profile() {
        GeneratorConfig c;
        c.donor_visible_min = 0.15;
        c.donor_visible_max = 0.65;
        return c;
    }

    /// Realistic occlusion for evaluation: post-visibility near the 46%
    /// visibility of real nighttime data.
    static GeneratorConfig testing_profile() {
        GeneratorConfig c;
        c.min_base_visible = 0.58;
        c.donor_visible_min = 0.45;
        return c;
    }
};

/// Generator output. x channels, oldest day first: for each of s days the
/// occluded normalized field and its validity mask, then the land-sea mask
/// (1 on land). y: true normalized field of the current day, real mask,
/// diff mask.
struct Sample {
    std::vector<Raster> x;  // 2s+1 channels
    std::vector<Raster> y;  // 3 channels
    int base_index = -1;
    int donor_index = -1;
    int doy_slot = 0;

    int h() const { return y.front().h(); }
    int w() const { return y.front().w(); }
    const Raster& truth() const { return y[0]; }
    const Raster& real_mask() const { return y[1]; }
    const Raster& diff_mask() const { return y[2]; }
};

/// artificial = real ∧ donor, restricted to sea.
inline Mask compose_masks(const Mask& real_valid, const Mask& donor_valid, const Mask& land) {
    if (!real_valid.same_shape(donor_valid) || !real_valid.same_shape(land))
        throw std::invalid_argument("compose_masks: shape mismatch");
    Mask art(real_valid.h(), real_valid.w(), 0);
    for (size_t i = 0; i < art.size(); ++i)
        art[i] = real_valid[i] && donor_valid[i] && !land[i];
    return art;
}

/// Acceptance check of §-style constraints: post-occlusion visibility and
/// diff-mask sea coverage.
inline bool masks_acceptable(const Mask& real_valid, const Mask& artificial, const Mask& land,
                             const GeneratorConfig& cfg) {
    size_t sea = 0, post = 0, diff = 0;
    for (size_t i = 0; i < land.size(); ++i) {
        if (land[i]) continue;
        ++sea;
        if (artificial[i]) ++post;
        if (real_valid[i] && !artificial[i]) ++diff;
    }
    if (sea == 0) return false;
    return post >= cfg.min_post_visible * sea && diff >= cfg.min_diff_sea_fraction * sea;
}

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

/// Stochastic sample generator. Single-threaded; owns its RNG stream. Sample
/// content depends only on (seed, sample index): every sample reseeds from
/// the pair, so parallel instances with distinct seeds never interact.
class SampleGenerator {
public:
    SampleGenerator(const Dataset& ds, const Climatology& clim, GeneratorConfig cfg,
                    int day_lo = 0, int day_hi = -1)
        : ds_(&ds), clim_(&clim), cfg_(cfg),
          day_lo_(day_lo), day_hi_(day_hi < 0 ? static_cast<int>(ds.size()) : day_hi) {
        cfg_.check();
        if (day_lo_ < 0 || day_hi_ > static_cast<int>(ds.size()) || day_lo_ >= day_hi_)
            throw std::invalid_argument("SampleGenerator: bad day range");
        visibility_.resize(ds.size());
        for (size_t t = 0; t < ds.size(); ++t)
            visibility_[t] = visible_sea_fraction(ds.days[t].field);
        for (int t = day_lo_; t < day_hi_; ++t) {
            if (visibility_[t] >= cfg_.min_base_visible && visibility_[t] <= cfg_.base_visible_max &&
                t - (cfg_.s_days - 1) >= day_lo_)
                base_pool_.push_back(t);
            if (visibility_[t] >= cfg_.donor_visible_min && visibility_[t] <= cfg_.donor_visible_max)
                donor_pool_.push_back(t);
        }
        if (base_pool_.empty()) throw std::runtime_error("SampleGenerator: no qualifying base day");
        if (donor_pool_.empty()) throw std::runtime_error("SampleGenerator: no qualifying donor day");
    }

    const GeneratorConfig& config() const { return cfg_; }
    double visibility(int t) const { return visibility_[t]; }
    const std::vector<int>& base_pool() const { return base_pool_; }

    /// Uniform over qualifying base days.
    int sample_base_day(std::mt19937_64& rng) const {
        std::uniform_int_distribution<size_t> pick(0, base_pool_.size() - 1);
        return base_pool_[pick(rng)];
    }

    Sample make_sample() { return make_sample_at(next_index_++); }

    /// Deterministic random access: content is a pure function of
    /// (cfg.seed, index).
    Sample make_sample_at(uint64_t index) const {
        std::mt19937_64 rng(splitmix64(cfg_.seed ^ splitmix64(index + 1)));
        int base = sample_base_day(rng);
        const MaskedField& base_field = ds_->days[base].field;

        std::uniform_int_distribution<size_t> pick(0, donor_pool_.size() - 1);
        int donor = -1;
        Mask artificial;
        bool ok = false;
        for (int attempt = 0; attempt < cfg_.max_retries; ++attempt) {
            donor = donor_pool_[pick(rng)];
            if (donor == base) continue;
            artificial = compose_masks(base_field.valid, ds_->days[donor].field.valid,
                                       base_field.land);
            if (masks_acceptable(base_field.valid, artificial, base_field.land, cfg_)) {
                ok = true;
                break;
            }
        }
        if (!ok) throw std::runtime_error("SampleGenerator: donor retries exhausted");

        Sample s;
        s.base_index = base;
        s.donor_index = donor;
        s.doy_slot = clim_slot(ds_->days[base].date);
        int h = base_field.h(), w = base_field.w();
        size_t n = base_field.values.size();
        const Mask& donor_valid = ds_->days[donor].field.valid;

        // input days, oldest first; the donor occlusion applies to every day
        for (int k = cfg_.s_days - 1; k >= 0; --k) {
            int t = base - k;
            const MaskedField& f = ds_->days[t].field;
            Raster vals(h, w, cfg_.fill_value), mask(h, w, 0.0f);
            int slot = clim_slot(ds_->days[t].date);
            for (size_t i = 0; i < n; ++i) {
                if (!f.valid[i] || !donor_valid[i]) continue;
                vals[i] = normalize(f.values[i], slot, i);
                mask[i] = 1.0f;
            }
            s.x.push_back(std::move(vals));
            s.x.push_back(std::move(mask));
        }
        Raster land_ch(h, w, 0.0f);
        for (size_t i = 0; i < n; ++i) land_ch[i] = base_field.land[i] ? 1.0f : 0.0f;
        s.x.push_back(std::move(land_ch));

        Raster truth(h, w, 0.0f), real(h, w, 0.0f), diff(h, w, 0.0f);
        for (size_t i = 0; i < n; ++i) {
            if (!base_field.valid[i]) continue;
            truth[i] = normalize(base_field.values[i], s.doy_slot, i);
            real[i] = 1.0f;
            if (!artificial[i]) diff[i] = 1.0f;
        }
        s.y = {std::move(truth), std::move(real), std::move(diff)};
        return s;
    }

    std::vector<Sample> make_batch(int count = 32) {
        std::vector<Sample> batch;
        batch.reserve(count);
        for (int i = 0; i < count; ++i) batch.push_back(make_sample());
        return batch;
    }

    float normalize(float sst, int slot, size_t cell) const {
        if (cfg_.mode == NormMode::residual) {
            double a = static_cast<double>(sst) - clim_->doy_mean[slot][cell];
            return static_cast<float>((a - clim_->mean_anom) / clim_->std_anom);
        }
        return static_cast<float>((static_cast<double>(sst) - clim_->mean_sst) / clim_->std_sst);
    }

    /// Back to °C.
    double denormalize(double v, int slot, size_t cell) const {
        if (cfg_.mode == NormMode::residual)
            return v * clim_->std_anom + clim_->mean_anom + clim_->doy_mean[slot][cell];
        return v * clim_->std_sst + clim_->mean_sst;
    }

    /// De-normalization scale in °C per unit of normalized output; cell
    /// independent, usable for error magnitudes.
    double scale() const {
        return cfg_.mode == NormMode::residual ? clim_->std_anom : clim_->std_sst;
    }

private:
    const Dataset* ds_;
    const Climatology* clim_;
    GeneratorConfig cfg_;
    int day_lo_, day_hi_;
    std::vector<double> visibility_;
    std::vector<int> base_pool_, donor_pool_;
    uint64_t next_index_ = 0;
};

}  // namespace sstrec

#pragma once

#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sstrec/dataset.hpp"
#include "sstrec/grid_ops.hpp"

namespace sstrec {

/// Day-of-year long-term mean SST plus the global normalization constants
/// for anomalies. Slots 0..364 are the folded day-of-year (Feb 29 merged
/// into Feb 28); slot 365 mirrors slot 364 so raw doy 366 stays addressable.
struct Climatology {
    std::vector<Raster> doy_mean;       // 366 rasters, °C
    std::vector<Grid<int>> doy_count;   // contributing observations per cell
    std::vector<Mask> interpolated;     // cells filled by the blur, per slot
    Mask land;
    double mean_anom = 0;  // global anomaly mean, ≈0
    double std_anom = 1;   // global anomaly std, normalization constant
    double mean_sst = 0;   // raw-SST constants for direct (non-residual) mode
    double std_sst = 1;
    int fill_iterations = 0;
    uint64_t source_hash = 0;
    GaussianSpec fill_spec;

    static int doy_slot(int doy) {
        if (doy < 1 || doy > 366) throw std::invalid_argument("doy outside [1,366]");
        return std::min(doy, 365) - 1;
    }

    const Raster& mean_for_slot(int slot) const { return doy_mean[slot]; }
};

/// Per cell, per folded day-of-year, mean over all years where valid; gaps
/// then filled with the spatio-temporal NaN-aware blur (circular on the doy
/// axis), iterated until no sea gaps remain.
inline Climatology build_climatology(const Dataset& ds,
                                     GaussianSpec spec = {2.0f, 5.0f, 3.0f}) {
    if (ds.days.empty()) throw std::invalid_argument("build_climatology: empty dataset");
    const int S = 365;
    int h = ds.h(), w = ds.w();
    size_t n = static_cast<size_t>(h) * w;

    Climatology clim;
    clim.land = ds.land();
    clim.fill_spec = spec;
    clim.source_hash = dataset_hash(ds);

    std::vector<std::vector<double>> sums(S, std::vector<double>(n, 0.0));
    clim.doy_count.assign(366, Grid<int>(h, w, 0));
    for (const auto& d : ds.days) {
        int slot = clim_slot(d.date);
        for (size_t i = 0; i < n; ++i)
            if (d.field.valid[i]) {
                sums[slot][i] += d.field.values[i];
                ++clim.doy_count[slot][i];
            }
    }

    std::vector<Raster> layers(S, Raster(h, w, kMissing));
    std::vector<Mask> valid(S, Mask(h, w, 0));
    clim.interpolated.assign(366, Mask(h, w, 0));
    for (int s = 0; s < S; ++s)
        for (size_t i = 0; i < n; ++i) {
            if (clim.doy_count[s][i] > 0) {
                layers[s][i] = static_cast<float>(sums[s][i] / clim.doy_count[s][i]);
                valid[s][i] = 1;
            } else if (!clim.land[i]) {
                clim.interpolated[s][i] = 1;
            }
        }

    auto has_gaps = [&] {
        for (int s = 0; s < S; ++s)
            for (size_t i = 0; i < n; ++i)
                if (!clim.land[i] && !valid[s][i]) return true;
        return false;
    };
    // Spatio-temporal fill; the known cells keep their exact means, only the
    // gap cells take blurred values.
    while (has_gaps()) {
        auto blurred = layers;
        auto bvalid = valid;
        gaussian_blur_nan_volume(blurred, bvalid, clim.land, spec);
        bool progress = false;
        for (int s = 0; s < S; ++s)
            for (size_t i = 0; i < n; ++i)
                if (!clim.land[i] && !valid[s][i] && bvalid[s][i]) {
                    layers[s][i] = blurred[s][i];
                    valid[s][i] = 1;
                    progress = true;
                }
        ++clim.fill_iterations;
        if (!progress)
            throw std::runtime_error("build_climatology: gap fill stalled (all-missing slot?)");
    }

    clim.doy_mean.assign(366, Raster(h, w, kMissing));
    for (int s = 0; s < S; ++s) clim.doy_mean[s] = layers[s];
    clim.doy_mean[365] = clim.doy_mean[364];
    clim.doy_count[365] = clim.doy_count[364];
    clim.interpolated[365] = clim.interpolated[364];

    // Global anomaly / raw-SST statistics over the source dataset.
    double a_sum = 0, a_sq = 0, r_sum = 0, r_sq = 0;
    size_t cnt = 0;
    for (const auto& d : ds.days) {
        const Raster& mean = clim.doy_mean[clim_slot(d.date)];
        for (size_t i = 0; i < n; ++i) {
            if (!d.field.valid[i]) continue;
            double a = static_cast<double>(d.field.values[i]) - mean[i];
            a_sum += a;
            a_sq += a * a;
            r_sum += d.field.values[i];
            r_sq += static_cast<double>(d.field.values[i]) * d.field.values[i];
            ++cnt;
        }
    }
    if (cnt == 0) throw std::invalid_argument("build_climatology: no valid cells");
    clim.mean_anom = a_sum / static_cast<double>(cnt);
    double var = a_sq / static_cast<double>(cnt) - clim.mean_anom * clim.mean_anom;
    clim.std_anom = var > 0 ? std::sqrt(var) : 1.0;
    clim.mean_sst = r_sum / static_cast<double>(cnt);
    double rvar = r_sq / static_cast<double>(cnt) - clim.mean_sst * clim.mean_sst;
    clim.std_sst = rvar > 0 ? std::sqrt(rvar) : 1.0;
    return clim;
}

/// values − doy_mean at valid cells; mask unchanged.
inline MaskedField anomaly(const MaskedField& f, const Climatology& clim, int doy) {
    const Raster& mean = clim.doy_mean[Climatology::doy_slot(doy)];
    MaskedField out = f;
    for (size_t i = 0; i < out.values.size(); ++i)
        if (out.valid[i]) out.values[i] -= mean[i];
    return out;
}

/// Inverse of anomaly: re-add the day's climatological mean.
inline MaskedField restore_sst(const MaskedField& f, const Climatology& clim, int doy) {
    const Raster& mean = clim.doy_mean[Climatology::doy_slot(doy)];
    MaskedField out = f;
    for (size_t i = 0; i < out.values.size(); ++i)
        if (out.valid[i]) out.values[i] += mean[i];
    return out;
}

/// Unbiased climatology: doy_mean + δ where δ is the mean offset between the
/// field and the climatology over the visible sea cells. Fully filled over sea.
inline Raster shifted_baseline(const MaskedField& f, const Climatology& clim, int doy) {
    const Raster& mean = clim.doy_mean[Climatology::doy_slot(doy)];
    double delta_sum = 0;
    size_t cnt = 0;
    for (size_t i = 0; i < f.values.size(); ++i)
        if (f.valid[i]) {
            delta_sum += static_cast<double>(f.values[i]) - mean[i];
            ++cnt;
        }
    if (cnt == 0) throw std::invalid_argument("shifted_baseline: no valid cells");
    double delta = delta_sum / static_cast<double>(cnt);
    Raster out(f.h(), f.w(), kMissing);
    for (size_t i = 0; i < out.size(); ++i)
        if (!clim.land[i]) out[i] = static_cast<float>(mean[i] + delta);
    return out;
}

// ---------------------------------------------------------------------------
// Persistence: SGR1 with 366 channels + JSON sidecar (<path>.json).

inline void climatology_save(const Climatology& clim, const std::string& path) {
    Sgr1 r;
    r.h = clim.land.h();
    r.w = clim.land.w();
    for (int s = 0; s < 366; ++s) {
        r.names.push_back("doy" + std::to_string(s + 1));
        r.channels.push_back(clim.doy_mean[s]);
    }
    sgr1_write(path, r);
    nlohmann::json side = {
        {"mean_anom", clim.mean_anom}, {"std_anom", clim.std_anom},
        {"mean_sst", clim.mean_sst}, {"std_sst", clim.std_sst},
        {"fill_iterations", clim.fill_iterations},
        {"source_hash", clim.source_hash},
        {"sigma_space", clim.fill_spec.sigma_space},
        {"sigma_time", clim.fill_spec.sigma_time},
        {"truncate", clim.fill_spec.truncate},
    };
    std::ofstream out(path + ".json");
    out << side.dump(2) << '\n';
}

inline Climatology climatology_load(const std::string& path, const Mask& land) {
    Sgr1 r = sgr1_read(path);
    if (r.channels.size() != 366) throw std::runtime_error("climatology_load: expected 366 channels");
    Climatology clim;
    clim.land = land;
    clim.doy_mean = r.channels;
    clim.doy_count.assign(366, Grid<int>(r.h, r.w, 0));
    clim.interpolated.assign(366, Mask(r.h, r.w, 0));
    std::ifstream in(path + ".json");
    if (!in) throw std::runtime_error("climatology_load: missing sidecar for " + path);
    nlohmann::json side = nlohmann::json::parse(in);
    clim.mean_anom = side.at("mean_anom");
    clim.std_anom = side.at("std_anom");
    clim.mean_sst = side.at("mean_sst");
    clim.std_sst = side.at("std_sst");
    clim.fill_iterations = side.at("fill_iterations");
    clim.source_hash = side.at("source_hash");
    clim.fill_spec.sigma_space = side.at("sigma_space");
    clim.fill_spec.sigma_time = side.at("sigma_time");
    clim.fill_spec.truncate = side.at("truncate");
    return clim;
}

}  // namespace sstrec

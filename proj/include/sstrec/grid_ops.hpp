#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "sstrec/core.hpp"

namespace sstrec {

/// Weight floor for the mask-division step; denominators at or below this
/// stay missing.
inline constexpr double kWeightFloor = 1e-6;

struct GaussianSpec {
    float sigma_space = 1.5f;   // grid cells
    float sigma_time = 0.0f;    // days, 0 disables the temporal axis
    float truncate = 3.0f;      // kernel radius = ceil(truncate * sigma)

    void check() const {
        if (sigma_space <= 0) throw std::invalid_argument("GaussianSpec: sigma_space <= 0");
        if (truncate < 2) throw std::invalid_argument("GaussianSpec: truncate < 2");
    }
};

/// Truncated 1-D Gaussian, renormalized to sum 1.
inline std::vector<double> gaussian_kernel1d(double sigma, double truncate) {
    int r = static_cast<int>(std::ceil(truncate * sigma));
    std::vector<double> k(2 * r + 1);
    double sum = 0;
    for (int i = -r; i <= r; ++i) {
        k[i + r] = std::exp(-0.5 * (i * i) / (sigma * sigma));
        sum += k[i + r];
    }
    for (auto& v : k) v /= sum;
    return k;
}

inline double count_sea(const MaskedField& f) {
    size_t sea = 0;
    for (size_t i = 0; i < f.land.size(); ++i)
        if (!f.land[i]) ++sea;
    return static_cast<double>(sea);
}

/// |valid ∧ sea| / |sea|. Land cells excluded from both counts.
inline double visible_sea_fraction(const MaskedField& f) {
    size_t sea = 0, vis = 0;
    for (size_t i = 0; i < f.land.size(); ++i) {
        if (f.land[i]) continue;
        ++sea;
        if (f.valid[i]) ++vis;
    }
    if (sea == 0) throw std::invalid_argument("visible_sea_fraction: no sea cells");
    return static_cast<double>(vis) / sea;
}

namespace detail {

// Separable 1-D pass along x then y with zero padding. Operates on doubles.
inline void blur_axis_x(const std::vector<double>& src, std::vector<double>& dst,
                        int h, int w, const std::vector<double>& k) {
    int r = static_cast<int>(k.size() / 2);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0;
            int lo = std::max(-r, -x), hi = std::min(r, w - 1 - x);
            for (int d = lo; d <= hi; ++d) acc += k[d + r] * src[static_cast<size_t>(y) * w + x + d];
            dst[static_cast<size_t>(y) * w + x] = acc;
        }
    }
}

inline void blur_axis_y(const std::vector<double>& src, std::vector<double>& dst,
                        int h, int w, const std::vector<double>& k) {
    int r = static_cast<int>(k.size() / 2);
    for (int y = 0; y < h; ++y) {
        int lo = std::max(-r, -y), hi = std::min(r, h - 1 - y);
        for (int x = 0; x < w; ++x) {
            double acc = 0;
            for (int d = lo; d <= hi; ++d) acc += k[d + r] * src[static_cast<size_t>(y + d) * w + x];
            dst[static_cast<size_t>(y) * w + x] = acc;
        }
    }
}

}  // namespace detail

/// NaN-aware Gaussian interpolation: zero-fill missing, blur data and the
/// binary validity mask with the same kernel, divide. Land cells carry
/// weight 0 and stay invalid. Output cells whose weight denominator is at
/// or below kWeightFloor remain missing.
inline MaskedField gaussian_blur_nan(const MaskedField& f, const GaussianSpec& spec) {
    spec.check();
    int h = f.h(), w = f.w();
    size_t n = f.values.size();
    bool any_valid = false;
    std::vector<double> data(n, 0.0), mask(n, 0.0);
    for (size_t i = 0; i < n; ++i) {
        if (f.valid[i] && !f.land[i]) {
            data[i] = f.values[i];
            mask[i] = 1.0;
            any_valid = true;
        }
    }
    if (!any_valid) throw std::invalid_argument("gaussian_blur_nan: no valid cells");

    auto k = gaussian_kernel1d(spec.sigma_space, spec.truncate);
    std::vector<double> tmp(n);
    detail::blur_axis_x(data, tmp, h, w, k);
    detail::blur_axis_y(tmp, data, h, w, k);
    detail::blur_axis_x(mask, tmp, h, w, k);
    detail::blur_axis_y(tmp, mask, h, w, k);

    MaskedField out(h, w);
    out.land = f.land;
    for (size_t i = 0; i < n; ++i) {
        if (f.land[i]) continue;
        if (mask[i] > kWeightFloor) {
            out.values[i] = static_cast<float>(data[i] / mask[i]);
            out.valid[i] = 1;
        }
    }
    return out;
}

/// Spatio-temporal variant over a (T, H, W) volume with circular wrap on the
/// leading (time / day-of-year) axis. layers[t] and valid[t] give data and
/// validity; the land mask is shared. Returns per-layer filled rasters and
/// validity.
inline void gaussian_blur_nan_volume(std::vector<Raster>& layers, std::vector<Mask>& valid,
                                     const Mask& land, const GaussianSpec& spec) {
    spec.check();
    if (spec.sigma_time <= 0) throw std::invalid_argument("volume blur needs sigma_time > 0");
    int T = static_cast<int>(layers.size());
    int h = land.h(), w = land.w();
    size_t plane = static_cast<size_t>(h) * w;
    std::vector<double> data(T * plane, 0.0), mask(T * plane, 0.0);
    for (int t = 0; t < T; ++t)
        for (size_t i = 0; i < plane; ++i)
            if (valid[t][i] && !land[i]) {
                data[t * plane + i] = layers[t][i];
                mask[t * plane + i] = 1.0;
            }

    auto ks = gaussian_kernel1d(spec.sigma_space, spec.truncate);
    auto kt = gaussian_kernel1d(spec.sigma_time, spec.truncate);
    int rt = static_cast<int>(kt.size() / 2);

    std::vector<double> tmp(T * plane);
    // spatial passes per layer
    for (auto* buf : {&data, &mask}) {
        for (int t = 0; t < T; ++t) {
            std::vector<double> a(buf->begin() + t * plane, buf->begin() + (t + 1) * plane), b(plane);
            detail::blur_axis_x(a, b, h, w, ks);
            detail::blur_axis_y(b, a, h, w, ks);
            std::copy(a.begin(), a.end(), buf->begin() + t * plane);
        }
        // circular temporal pass
        std::copy(buf->begin(), buf->end(), tmp.begin());
        for (int t = 0; t < T; ++t)
            for (size_t i = 0; i < plane; ++i) {
                double acc = 0;
                for (int d = -rt; d <= rt; ++d) {
                    int tt = ((t + d) % T + T) % T;
                    acc += kt[d + rt] * tmp[tt * plane + i];
                }
                (*buf)[t * plane + i] = acc;
            }
    }

    for (int t = 0; t < T; ++t)
        for (size_t i = 0; i < plane; ++i) {
            if (land[i]) {
                layers[t][i] = kMissing;
                valid[t][i] = 0;
            } else if (mask[t * plane + i] > kWeightFloor) {
                layers[t][i] = static_cast<float>(data[t * plane + i] / mask[t * plane + i]);
                valid[t][i] = 1;
            } else {
                layers[t][i] = kMissing;
                valid[t][i] = 0;
            }
        }
}

/// Observed values pass through where valid; reconstruction fills occluded
/// sea; land stays missing. Output valid mask is the sea mask.
inline MaskedField composite(const Raster& reconstruction, const MaskedField& observed) {
    if (!reconstruction.same_shape(observed.values))
        throw std::invalid_argument("composite: shape mismatch");
    MaskedField out(observed.h(), observed.w());
    out.land = observed.land;
    for (size_t i = 0; i < out.values.size(); ++i) {
        if (observed.land[i]) continue;
        out.values[i] = observed.valid[i] ? observed.values[i] : reconstruction[i];
        out.valid[i] = 1;
    }
    return out;
}

/// Quadrant order: NW, NE, SW, SE.
inline std::array<MaskedField, 4> split_quadrants(const MaskedField& f) {
    int h = f.h(), w = f.w();
    if (h % 2 || w % 2) throw std::invalid_argument("split_quadrants: odd dimensions");
    int hh = h / 2, hw = w / 2;
    std::array<MaskedField, 4> out{MaskedField(hh, hw), MaskedField(hh, hw),
                                   MaskedField(hh, hw), MaskedField(hh, hw)};
    for (int q = 0; q < 4; ++q) {
        int y0 = (q / 2) * hh, x0 = (q % 2) * hw;
        for (int y = 0; y < hh; ++y)
            for (int x = 0; x < hw; ++x) {
                out[q].values(y, x) = f.values(y0 + y, x0 + x);
                out[q].valid(y, x) = f.valid(y0 + y, x0 + x);
                out[q].land(y, x) = f.land(y0 + y, x0 + x);
            }
    }
    return out;
}

inline MaskedField join_quadrants(const std::array<MaskedField, 4>& q) {
    int hh = q[0].h(), hw = q[0].w();
    for (const auto& f : q)
        if (f.h() != hh || f.w() != hw) throw std::invalid_argument("join_quadrants: shape mismatch");
    MaskedField out(hh * 2, hw * 2);
    for (int i = 0; i < 4; ++i) {
        int y0 = (i / 2) * hh, x0 = (i % 2) * hw;
        for (int y = 0; y < hh; ++y)
            for (int x = 0; x < hw; ++x) {
                out.values(y0 + y, x0 + x) = q[i].values(y, x);
                out.valid(y0 + y, x0 + x) = q[i].valid(y, x);
                out.land(y0 + y, x0 + x) = q[i].land(y, x);
            }
    }
    return out;
}

}  // namespace sstrec

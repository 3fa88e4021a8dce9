#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <vector>

#include "sstrec/dataset.hpp"

namespace sstrec {

// Dataset diagnostics. All reductions run over valid sea cells only and
// accumulate in double regardless of the float32 storage.

struct GradientStats {
    double max = 0;      // °C, global maximum gradient magnitude
    double avg_max = 0;  // °C, mean over days of each day's maximum
    double mean = 0;     // °C
    double std = 0;      // °C
    size_t n_pairs = 0;
};

struct PersistenceStats {
    int lag = 0;
    double mad = 0;   // °C
    double rmsd = 0;  // °C
    size_t n_pairs = 0;
};

struct Extrema {
    double min = 0, mean = 0, max = 0;
    size_t n_cells = 0;
};

inline Extrema extrema(const Dataset& ds) {
    if (ds.days.empty()) throw std::invalid_argument("extrema: empty dataset");
    Extrema e;
    e.min = std::numeric_limits<double>::infinity();
    e.max = -e.min;
    double sum = 0;
    for (const auto& d : ds.days)
        for (size_t i = 0; i < d.field.values.size(); ++i) {
            if (!d.field.valid[i]) continue;
            double v = d.field.values[i];
            e.min = std::min(e.min, v);
            e.max = std::max(e.max, v);
            sum += v;
            ++e.n_cells;
        }
    if (e.n_cells == 0) throw std::invalid_argument("extrema: no valid cells");
    e.mean = sum / static_cast<double>(e.n_cells);
    return e;
}

namespace detail {

struct GradAccum {
    double sum = 0, sum_sq = 0, global_max = 0, day_max_sum = 0;
    size_t n = 0, n_days = 0;

    void day(double day_max, bool any) {
        if (any) {
            day_max_sum += day_max;
            ++n_days;
        }
    }
    void pair(double g) {
        sum += g;
        sum_sq += g * g;
        global_max = std::max(global_max, g);
        ++n;
    }
    GradientStats finish() const {
        GradientStats s;
        s.n_pairs = n;
        if (n == 0) return s;
        s.max = global_max;
        s.avg_max = n_days ? day_max_sum / static_cast<double>(n_days) : 0;
        s.mean = sum / static_cast<double>(n);
        double var = sum_sq / static_cast<double>(n) - s.mean * s.mean;
        s.std = var > 0 ? std::sqrt(var) : 0;
        return s;
    }
};

}  // namespace detail

/// |ΔSST| between each valid cell and its valid right/down neighbor.
inline GradientStats spatial_gradients(const Dataset& ds) {
    detail::GradAccum acc;
    for (const auto& d : ds.days) {
        const auto& f = d.field;
        double day_max = 0;
        bool any = false;
        for (int y = 0; y < f.h(); ++y)
            for (int x = 0; x < f.w(); ++x) {
                if (!f.valid(y, x)) continue;
                double v = f.values(y, x);
                if (x + 1 < f.w() && f.valid(y, x + 1)) {
                    double g = std::abs(v - f.values(y, x + 1));
                    acc.pair(g);
                    day_max = std::max(day_max, g);
                    any = true;
                }
                if (y + 1 < f.h() && f.valid(y + 1, x)) {
                    double g = std::abs(v - f.values(y + 1, x));
                    acc.pair(g);
                    day_max = std::max(day_max, g);
                    any = true;
                }
            }
        acc.day(day_max, any);
    }
    return acc.finish();
}

/// |ΔSST| between consecutive days at cells valid on both days. Each day's
/// max covers the pairs ending on that day.
inline GradientStats temporal_gradients(const Dataset& ds) {
    detail::GradAccum acc;
    for (size_t t = 1; t < ds.days.size(); ++t) {
        const auto& a = ds.days[t - 1].field;
        const auto& b = ds.days[t].field;
        double day_max = 0;
        bool any = false;
        for (size_t i = 0; i < a.values.size(); ++i) {
            if (!a.valid[i] || !b.valid[i]) continue;
            double g = std::abs(static_cast<double>(b.values[i]) - a.values[i]);
            acc.pair(g);
            day_max = std::max(day_max, g);
            any = true;
        }
        acc.day(day_max, any);
    }
    return acc.finish();
}

enum class GradientAxis { spatial, temporal };

/// Fraction of measured gradient pairs exceeding each threshold.
inline std::vector<double> exceedance(const Dataset& ds, GradientAxis axis,
                                      const std::vector<double>& thresholds) {
    std::vector<size_t> counts(thresholds.size(), 0);
    size_t total = 0;
    auto take = [&](double g) {
        ++total;
        for (size_t k = 0; k < thresholds.size(); ++k)
            if (g > thresholds[k]) ++counts[k];
    };
    if (axis == GradientAxis::spatial) {
        for (const auto& d : ds.days) {
            const auto& f = d.field;
            for (int y = 0; y < f.h(); ++y)
                for (int x = 0; x < f.w(); ++x) {
                    if (!f.valid(y, x)) continue;
                    if (x + 1 < f.w() && f.valid(y, x + 1))
                        take(std::abs(f.values(y, x) - f.values(y, x + 1)));
                    if (y + 1 < f.h() && f.valid(y + 1, x))
                        take(std::abs(f.values(y, x) - f.values(y + 1, x)));
                }
        }
    } else {
        for (size_t t = 1; t < ds.days.size(); ++t) {
            const auto& a = ds.days[t - 1].field;
            const auto& b = ds.days[t].field;
            for (size_t i = 0; i < a.values.size(); ++i)
                if (a.valid[i] && b.valid[i])
                    take(std::abs(static_cast<double>(b.values[i]) - a.values[i]));
        }
    }
    std::vector<double> out(thresholds.size(), 0.0);
    if (total)
        for (size_t k = 0; k < thresholds.size(); ++k)
            out[k] = static_cast<double>(counts[k]) / static_cast<double>(total);
    return out;
}

/// MAD / RMSD between day t and day t-lag over cells visible on both days.
inline PersistenceStats persistence(const Dataset& ds, int lag) {
    if (lag < 1) throw std::invalid_argument("persistence: lag < 1");
    PersistenceStats s;
    s.lag = lag;
    double abs_sum = 0, sq_sum = 0;
    for (size_t t = lag; t < ds.days.size(); ++t) {
        const auto& a = ds.days[t - lag].field;
        const auto& b = ds.days[t].field;
        for (size_t i = 0; i < a.values.size(); ++i) {
            if (!a.valid[i] || !b.valid[i]) continue;
            double d = static_cast<double>(b.values[i]) - a.values[i];
            abs_sum += std::abs(d);
            sq_sum += d * d;
            ++s.n_pairs;
        }
    }
    if (s.n_pairs) {
        s.mad = abs_sum / static_cast<double>(s.n_pairs);
        s.rmsd = std::sqrt(sq_sum / static_cast<double>(s.n_pairs));
    }
    return s;
}

struct HistogramBin {
    double lo = 0, hi = 0;
    size_t count = 0;
};

inline std::vector<HistogramBin> histogram(const Dataset& ds, double bin_width) {
    if (bin_width <= 0) throw std::invalid_argument("histogram: bin_width <= 0");
    std::map<long, size_t> counts;
    for (const auto& d : ds.days)
        for (size_t i = 0; i < d.field.values.size(); ++i)
            if (d.field.valid[i])
                ++counts[static_cast<long>(std::floor(d.field.values[i] / bin_width))];
    std::vector<HistogramBin> bins;
    bins.reserve(counts.size());
    for (auto [k, c] : counts)
        bins.push_back({k * bin_width, (k + 1) * bin_width, c});
    return bins;
}

}  // namespace sstrec

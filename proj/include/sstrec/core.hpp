#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace sstrec {

inline constexpr float kMissing = std::numeric_limits<float>::quiet_NaN();

inline bool is_missing(float v) { return std::isnan(v); }

/// Dense row-major H x W grid.
template <typename T>
class Grid {
public:
    Grid() = default;
    Grid(int h, int w, T fill = T{}) : h_(h), w_(w), data_(static_cast<size_t>(h) * w, fill) {
        if (h <= 0 || w <= 0) throw std::invalid_argument("Grid: non-positive dimensions");
    }

    int h() const { return h_; }
    int w() const { return w_; }
    size_t size() const { return data_.size(); }

    T& operator()(int y, int x) { return data_[static_cast<size_t>(y) * w_ + x]; }
    const T& operator()(int y, int x) const { return data_[static_cast<size_t>(y) * w_ + x]; }
    T& operator[](size_t i) { return data_[i]; }
    const T& operator[](size_t i) const { return data_[i]; }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }

    bool same_shape(const Grid& o) const { return h_ == o.h_ && w_ == o.w_; }

    bool operator==(const Grid& o) const { return h_ == o.h_ && w_ == o.w_ && data_ == o.data_; }

private:
    int h_ = 0, w_ = 0;
    std::vector<T> data_;
};

using Raster = Grid<float>;
using Mask = Grid<uint8_t>;

/// One day's SST raster with validity and land masks.
/// Invariants: valid implies sea; values at invalid cells are NaN and never
/// enter any reduction.
struct MaskedField {
    Raster values;
    Mask valid;
    Mask land;

    MaskedField() = default;
    MaskedField(int h, int w) : values(h, w, kMissing), valid(h, w, 0), land(h, w, 0) {}

    int h() const { return values.h(); }
    int w() const { return values.w(); }

    bool sea(size_t i) const { return !land[i]; }

    void check() const {
        if (valid.h() != values.h() || valid.w() != values.w() ||
            land.h() != values.h() || land.w() != values.w())
            throw std::invalid_argument("MaskedField: mask shape mismatch");
        for (size_t i = 0; i < values.size(); ++i)
            if (valid[i] && land[i]) throw std::invalid_argument("MaskedField: valid land cell");
    }
};

// ---------------------------------------------------------------------------
// Calendar

struct Date {
    int year = 2000;
    int month = 1;
    int day = 1;

    friend bool operator==(const Date& a, const Date& b) = default;
};

inline bool is_leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

inline int days_in_month(int y, int m) {
    static const int d[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    return (m == 2 && is_leap(y)) ? 29 : d[m - 1];
}

inline int day_of_year(const Date& d) {
    int doy = d.day;
    for (int m = 1; m < d.month; ++m) doy += days_in_month(d.year, m);
    return doy;
}

inline Date next_day(Date d) {
    if (++d.day > days_in_month(d.year, d.month)) {
        d.day = 1;
        if (++d.month > 12) { d.month = 1; ++d.year; }
    }
    return d;
}

/// Climatology slot in [0, 365): non-leap day-of-year minus one, with Feb 29
/// folded into Feb 28's slot.
inline int clim_slot(const Date& d) {
    int doy = day_of_year(d);
    if (is_leap(d.year)) {
        if (d.month == 2 && d.day == 29) return 58;  // Feb 28 slot
        if (doy > 60) --doy;
    }
    return doy - 1;
}

inline std::string date_str(const Date& d) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", d.year, d.month, d.day);
    return buf;
}

inline Date parse_date(const std::string& s) {
    Date d;
    if (std::sscanf(s.c_str(), "%d-%d-%d", &d.year, &d.month, &d.day) != 3 || d.month < 1 ||
        d.month > 12 || d.day < 1 || d.day > days_in_month(d.year, d.month))
        throw std::invalid_argument("bad date: " + s);
    return d;
}

}  // namespace sstrec

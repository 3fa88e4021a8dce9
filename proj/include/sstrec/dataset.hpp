#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sstrec/core.hpp"
#include "sstrec/sgr1.hpp"

namespace sstrec {

struct Day {
    Date date;
    MaskedField field;
};

/// Time-indexed sequence of daily fields on a common grid.
struct Dataset {
    std::string name;
    std::vector<Day> days;
    nlohmann::json provenance;  // synthetic config or external-converter note

    int h() const { return days.empty() ? 0 : days.front().field.h(); }
    int w() const { return days.empty() ? 0 : days.front().field.w(); }
    size_t size() const { return days.size(); }

    const Mask& land() const { return days.front().field.land; }
};

inline uint64_t fnv1a(const void* data, size_t n, uint64_t h = 1469598103934665603ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

inline uint64_t file_hash(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("file_hash: cannot open " + path);
    uint64_t h = 1469598103934665603ull;
    char buf[1 << 16];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) h = fnv1a(buf, static_cast<size_t>(in.gcount()), h);
    return h;
}

/// Content hash over values and masks of every day, shape and dates included.
inline uint64_t dataset_hash(const Dataset& ds) {
    uint64_t h = 1469598103934665603ull;
    for (const auto& d : ds.days) {
        int meta[5] = {d.date.year, d.date.month, d.date.day, d.field.h(), d.field.w()};
        h = fnv1a(meta, sizeof meta, h);
        // NaNs hash by bit pattern, which is stable for our quiet-NaN sentinel
        h = fnv1a(d.field.values.data(), d.field.values.size() * sizeof(float), h);
        h = fnv1a(d.field.valid.data(), d.field.valid.size(), h);
        h = fnv1a(d.field.land.data(), d.field.land.size(), h);
    }
    return h;
}

/// Directory layout: manifest.json plus one SGR1 file per day (YYYY-MM-DD.sgr1).
inline void dataset_save(const Dataset& ds, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    nlohmann::json files = nlohmann::json::array();
    for (const auto& d : ds.days) {
        std::string fname = date_str(d.date) + ".sgr1";
        std::string path = (fs::path(dir) / fname).string();
        sgr1_write(path, sgr1_from_field(d.field));
        files.push_back({{"date", date_str(d.date)}, {"file", fname},
                         {"hash", file_hash(path)}});
    }
    nlohmann::json man = {
        {"name", ds.name},
        {"grid", {{"h", ds.h()}, {"w", ds.w()}}},
        {"calendar", {{"start", date_str(ds.days.front().date)}, {"n_days", ds.days.size()}}},
        {"files", files},
        {"provenance", ds.provenance},
    };
    std::ofstream out(fs::path(dir) / "manifest.json");
    out << man.dump(2) << '\n';
}

inline Dataset dataset_load(const std::string& dir, bool verify_hashes = true) {
    namespace fs = std::filesystem;
    std::ifstream in(fs::path(dir) / "manifest.json");
    if (!in) throw std::runtime_error("dataset_load: no manifest in " + dir);
    nlohmann::json man = nlohmann::json::parse(in);
    Dataset ds;
    ds.name = man.value("name", "");
    ds.provenance = man.value("provenance", nlohmann::json::object());
    for (const auto& f : man.at("files")) {
        std::string path = (fs::path(dir) / f.at("file").get<std::string>()).string();
        if (verify_hashes && f.contains("hash") && file_hash(path) != f.at("hash").get<uint64_t>())
            throw std::runtime_error("dataset_load: hash mismatch for " + path);
        Day day;
        day.date = parse_date(f.at("date"));
        day.field = sgr1_to_field(sgr1_read(path));
        ds.days.push_back(std::move(day));
    }
    if (ds.days.empty()) throw std::runtime_error("dataset_load: empty dataset");
    return ds;
}

}  // namespace sstrec

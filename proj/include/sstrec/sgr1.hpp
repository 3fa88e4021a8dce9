#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sstrec/core.hpp"

namespace sstrec {

/// SGR1 raster container: one JSON header line
/// {"h":H,"w":W,"dtype":"f32le","channels":C,"names":[...]} followed by a
/// newline and H*W*C little-endian float32 values, row-major, channel-last.
/// Missing cells are IEEE-754 NaN.
struct Sgr1 {
    int h = 0, w = 0;
    std::vector<std::string> names;
    std::vector<Raster> channels;
};

inline void sgr1_write(const std::string& path, const Sgr1& r) {
    if (r.channels.empty()) throw std::invalid_argument("sgr1_write: no channels");
    if (r.names.size() != r.channels.size())
        throw std::invalid_argument("sgr1_write: names/channels mismatch");
    for (const auto& c : r.channels)
        if (c.h() != r.h || c.w() != r.w) throw std::invalid_argument("sgr1_write: shape mismatch");

    nlohmann::json hdr = {{"h", r.h}, {"w", r.w}, {"dtype", "f32le"},
                          {"channels", r.channels.size()}, {"names", r.names}};
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("sgr1_write: cannot open " + path);
    out << hdr.dump() << '\n';
    size_t n = static_cast<size_t>(r.h) * r.w;
    std::vector<float> row(r.channels.size());
    for (size_t i = 0; i < n; ++i) {
        for (size_t c = 0; c < r.channels.size(); ++c) row[c] = r.channels[c][i];
        out.write(reinterpret_cast<const char*>(row.data()),
                  static_cast<std::streamsize>(row.size() * sizeof(float)));
    }
    if (!out) throw std::runtime_error("sgr1_write: write failed " + path);
}

inline Sgr1 sgr1_read(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("sgr1_read: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("sgr1_read: missing header " + path);
    auto hdr = nlohmann::json::parse(line);
    if (hdr.at("dtype") != "f32le") throw std::runtime_error("sgr1_read: unsupported dtype");
    Sgr1 r;
    r.h = hdr.at("h");
    r.w = hdr.at("w");
    size_t nc = hdr.at("channels");
    r.names = hdr.at("names").get<std::vector<std::string>>();
    if (r.names.size() != nc) throw std::runtime_error("sgr1_read: names/channels mismatch");
    r.channels.assign(nc, Raster(r.h, r.w));
    size_t n = static_cast<size_t>(r.h) * r.w;
    std::vector<float> row(nc);
    for (size_t i = 0; i < n; ++i) {
        in.read(reinterpret_cast<char*>(row.data()),
                static_cast<std::streamsize>(nc * sizeof(float)));
        if (!in) throw std::runtime_error("sgr1_read: truncated payload " + path);
        for (size_t c = 0; c < nc; ++c) r.channels[c][i] = row[c];
    }
    return r;
}

/// Encode a MaskedField as three channels: sst (NaN where invalid), the land
/// mask as {0,1}, and the validity mask as {0,1}.
inline Sgr1 sgr1_from_field(const MaskedField& f) {
    Sgr1 r;
    r.h = f.h();
    r.w = f.w();
    r.names = {"sst", "land", "valid"};
    Raster sst(f.h(), f.w(), kMissing), land(f.h(), f.w()), valid(f.h(), f.w());
    for (size_t i = 0; i < sst.size(); ++i) {
        if (f.valid[i]) sst[i] = f.values[i];
        land[i] = f.land[i] ? 1.0f : 0.0f;
        valid[i] = f.valid[i] ? 1.0f : 0.0f;
    }
    r.channels = {std::move(sst), std::move(land), std::move(valid)};
    return r;
}

inline MaskedField sgr1_to_field(const Sgr1& r) {
    int isst = -1, iland = -1, ivalid = -1;
    for (size_t c = 0; c < r.names.size(); ++c) {
        if (r.names[c] == "sst") isst = static_cast<int>(c);
        if (r.names[c] == "land") iland = static_cast<int>(c);
        if (r.names[c] == "valid") ivalid = static_cast<int>(c);
    }
    if (isst < 0 || iland < 0) throw std::runtime_error("sgr1_to_field: missing channels");
    MaskedField f(r.h, r.w);
    for (size_t i = 0; i < f.values.size(); ++i) {
        f.land[i] = r.channels[iland][i] != 0.0f;
        bool v = ivalid >= 0 ? r.channels[ivalid][i] != 0.0f : !is_missing(r.channels[isst][i]);
        if (v && !f.land[i]) {
            f.valid[i] = 1;
            f.values[i] = r.channels[isst][i];
        }
    }
    return f;
}

}  // namespace sstrec

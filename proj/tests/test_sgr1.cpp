#include <catch2/catch_amalgamated.hpp>

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include <json.hpp>

#include "sstrec/dataset.hpp"
#include "sstrec/sgr1.hpp"

using namespace sstrec;
namespace fs = std::filesystem;

namespace {

fs::path tmpdir() {
    fs::path p = fs::temp_directory_path() / "sstrec_sgr1_test";
    fs::create_directories(p);
    return p;
}

MaskedField random_field(int h, int w, uint32_t seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(0, 1);
    MaskedField f(h, w);
    for (size_t i = 0; i < f.values.size(); ++i) {
        double r = u(rng);
        if (r < 0.15) f.land[i] = 1;
        else if (r < 0.7) {
            f.valid[i] = 1;
            f.values[i] = static_cast<float>(u(rng) * 30 - 2);
        }
    }
    return f;
}

}  // namespace

TEST_CASE("SGR1 byte layout: header line then row-major channel-last f32le") {
    fs::path p = tmpdir() / "layout.sgr1";
    Sgr1 r;
    r.h = 2;
    r.w = 2;
    r.names = {"a", "b"};
    Raster a(2, 2), b(2, 2);
    a[0] = 1.0f; a[1] = 2.0f; a[2] = 3.0f; a[3] = kMissing;
    b[0] = 10.f; b[1] = 20.f; b[2] = 30.f; b[3] = 40.f;
    r.channels = {a, b};
    sgr1_write(p.string(), r);

    std::ifstream in(p, std::ios::binary);
    std::string hdr_line;
    REQUIRE(std::getline(in, hdr_line));
    auto hdr = nlohmann::json::parse(hdr_line);
    CHECK(hdr.at("h") == 2);
    CHECK(hdr.at("w") == 2);
    CHECK(hdr.at("dtype") == "f32le");
    CHECK(hdr.at("channels") == 2);
    CHECK(hdr.at("names") == nlohmann::json({"a", "b"}));

    float payload[8];
    in.read(reinterpret_cast<char*>(payload), sizeof payload);
    REQUIRE(in.gcount() == sizeof payload);
    // interleaved channel-last: (cell0: a,b), (cell1: a,b), ...
    CHECK(payload[0] == 1.0f);
    CHECK(payload[1] == 10.0f);
    CHECK(payload[2] == 2.0f);
    CHECK(payload[3] == 20.0f);
    CHECK(payload[4] == 3.0f);
    CHECK(std::isnan(payload[6]));  // missing cell is NaN
    CHECK(payload[7] == 40.0f);
    // little-endian check on a known value: 1.0f = 00 00 80 3f
    unsigned char bytes[4];
    std::memcpy(bytes, &payload[0], 4);
    CHECK(bytes[0] == 0x00);
    CHECK(bytes[1] == 0x00);
    CHECK(bytes[2] == 0x80);
    CHECK(bytes[3] == 0x3f);
    char trailing;
    CHECK_FALSE(in.read(&trailing, 1));  // nothing after the payload
}

TEST_CASE("SGR1 round-trips values, NaNs and channel names") {
    fs::path p = tmpdir() / "rt.sgr1";
    MaskedField f = random_field(13, 9, 5);
    sgr1_write(p.string(), sgr1_from_field(f));
    MaskedField g = sgr1_to_field(sgr1_read(p.string()));
    REQUIRE(g.h() == f.h());
    REQUIRE(g.w() == f.w());
    for (size_t i = 0; i < f.values.size(); ++i) {
        CHECK(g.land[i] == f.land[i]);
        CHECK(g.valid[i] == f.valid[i]);
        if (f.valid[i]) CHECK(g.values[i] == f.values[i]);  // bit-exact
    }
}

TEST_CASE("SGR1 rejects malformed inputs") {
    fs::path p = tmpdir() / "bad.sgr1";
    Sgr1 r;
    r.h = 2;
    r.w = 2;
    r.names = {"x"};
    CHECK_THROWS(sgr1_write(p.string(), r));  // no channels
    r.channels = {Raster(3, 2)};
    CHECK_THROWS(sgr1_write(p.string(), r));  // shape mismatch
    // truncated payload
    {
        std::ofstream out(p, std::ios::binary);
        out << R"({"h":2,"w":2,"dtype":"f32le","channels":1,"names":["x"]})" << "\n";
        float v = 1.0f;
        out.write(reinterpret_cast<char*>(&v), 4);
    }
    CHECK_THROWS(sgr1_read(p.string()));
    CHECK_THROWS(sgr1_read((tmpdir() / "missing.sgr1").string()));
}

TEST_CASE("dataset save/load round-trips with hash verification") {
    fs::path dir = tmpdir() / "ds";
    fs::remove_all(dir);
    Dataset ds;
    ds.name = "unit";
    ds.provenance = {{"kind", "test"}};
    Date d{2015, 12, 30};
    for (int t = 0; t < 4; ++t) {
        Day day;
        day.date = d;
        day.field = random_field(8, 8, 40 + t);
        if (!ds.days.empty()) {
            day.field.land = ds.days.front().field.land;
            for (size_t i = 0; i < day.field.land.size(); ++i)
                if (day.field.land[i]) {
                    day.field.valid[i] = 0;
                    day.field.values[i] = kMissing;
                }
        }
        ds.days.push_back(std::move(day));
        d = next_day(d);
    }
    dataset_save(ds, dir.string());
    Dataset back = dataset_load(dir.string());
    REQUIRE(back.size() == ds.size());
    CHECK(back.name == "unit");
    CHECK(back.days[2].date == Date{2016, 1, 1});  // year wrap preserved
    CHECK(dataset_hash(back) == dataset_hash(ds));

    // corrupt one byte of a payload -> hash check must fail
    fs::path victim = dir / "2015-12-31.sgr1";
    {
        std::fstream io(victim, std::ios::in | std::ios::out | std::ios::binary);
        io.seekp(-4, std::ios::end);
        float v = 123.0f;
        io.write(reinterpret_cast<char*>(&v), 4);
    }
    CHECK_THROWS(dataset_load(dir.string()));
    CHECK_NOTHROW(dataset_load(dir.string(), false));
}

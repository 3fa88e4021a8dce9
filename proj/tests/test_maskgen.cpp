#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "sstrec/maskgen.hpp"
#include "sstrec/synthdata.hpp"

using namespace sstrec;

namespace {

struct Fixture {
    Dataset ds;
    Climatology clim;
};

const Fixture& fixture() {
    static Fixture f = [] {
        SynthConfig cfg;
        cfg.grid_h = cfg.grid_w = 48;
        cfg.n_years = 2;
        cfg.seed = 21;
        Fixture fx;
        fx.ds = gen_dataset(cfg);
        fx.clim = build_climatology(fx.ds);
        return fx;
    }();
    return f;
}

struct MaskStats {
    double base = 0, post = 0, diff = 0;
};

MaskStats measure(const Dataset& ds, const Sample& s) {
    const auto& f = ds.days[s.base_index].field;
    size_t sea = 0, base = 0, post = 0, diff = 0;
    const Raster& art = s.x[2 * (s.x.size() / 2) - 1];  // mask of the current day
    for (size_t i = 0; i < f.land.size(); ++i) {
        if (f.land[i]) continue;
        ++sea;
        if (f.valid[i]) ++base;
        if (art[i] != 0.0f) ++post;
        if (s.diff_mask()[i] != 0.0f) ++diff;
    }
    return {double(base) / sea, double(post) / sea, double(diff) / sea};
}

}  // namespace

TEST_CASE("compose_masks is the conjunction restricted to sea") {
    std::mt19937 rng(3);
    std::uniform_int_distribution<int> bit(0, 1);
    Mask real(9, 7), donor(9, 7), land(9, 7);
    for (size_t i = 0; i < real.size(); ++i) {
        real[i] = bit(rng);
        donor[i] = bit(rng);
        land[i] = bit(rng) && bit(rng);
    }
    Mask art = compose_masks(real, donor, land);
    for (size_t i = 0; i < art.size(); ++i)
        CHECK(art[i] == (real[i] && donor[i] && !land[i] ? 1 : 0));
    Mask wrong(3, 3);
    CHECK_THROWS_AS(compose_masks(real, wrong, land), std::invalid_argument);
}

TEST_CASE("masks_acceptable matches a direct count") {
    GeneratorConfig cfg;
    std::mt19937 rng(4);
    std::uniform_int_distribution<int> bit(0, 1);
    for (int rep = 0; rep < 50; ++rep) {
        Mask real(12, 12, 0), land(12, 12, 0), art(12, 12, 0);
        for (size_t i = 0; i < real.size(); ++i) {
            land[i] = bit(rng) && bit(rng) && bit(rng);
            if (land[i]) continue;
            real[i] = bit(rng);
            art[i] = real[i] && bit(rng);
        }
        size_t sea = 0, post = 0, diff = 0;
        for (size_t i = 0; i < real.size(); ++i) {
            if (land[i]) continue;
            ++sea;
            if (art[i]) ++post;
            if (real[i] && !art[i]) ++diff;
        }
        bool want = post >= cfg.min_post_visible * sea && diff >= cfg.min_diff_sea_fraction * sea;
        CHECK(masks_acceptable(real, art, land, cfg) == want);
    }
}

TEST_CASE("every sample satisfies the hard visibility constraints") {
    const auto& fx = fixture();
    for (const char* profile : {"training", "testing"}) {
        GeneratorConfig cfg = profile[1] == 'r' ? GeneratorConfig::training_profile()
                                                : GeneratorConfig::testing_profile();
        cfg.seed = 77;
        SampleGenerator gen(fx.ds, fx.clim, cfg);
        for (int i = 0; i < 60; ++i) {
            Sample s = gen.make_sample_at(i);
            MaskStats m = measure(fx.ds, s);
            CHECK(m.base >= cfg.min_base_visible);
            CHECK(m.post >= cfg.min_post_visible);
            CHECK(m.diff >= cfg.min_diff_sea_fraction);
            CHECK(s.donor_index != s.base_index);
        }
    }
}

TEST_CASE("profiles hit their occlusion targets on average") {
    const auto& fx = fixture();
    auto mean_stats = [&](GeneratorConfig cfg) {
        cfg.seed = 31;
        SampleGenerator gen(fx.ds, fx.clim, cfg);
        MaskStats acc;
        int n = 200;
        for (int i = 0; i < n; ++i) {
            MaskStats m = measure(fx.ds, gen.make_sample_at(i));
            acc.base += m.base / n;
            acc.post += m.post / n;
            acc.diff += m.diff / n;
        }
        return acc;
    };
    MaskStats tr = mean_stats(GeneratorConfig::training_profile());
    CHECK(tr.post == Catch::Approx(0.25).margin(0.03));
    CHECK(tr.diff > 0.30);
    MaskStats te = mean_stats(GeneratorConfig::testing_profile());
    CHECK(te.post == Catch::Approx(0.46).margin(0.03));
}

TEST_CASE("sample content depends only on seed and index") {
    const auto& fx = fixture();
    GeneratorConfig cfg = GeneratorConfig::training_profile();
    cfg.seed = 101;
    SampleGenerator a(fx.ds, fx.clim, cfg);
    SampleGenerator b(fx.ds, fx.clim, cfg);
    b.make_sample_at(999);  // extra call must not shift later samples
    for (uint64_t i : {0ull, 5ull, 123ull}) {
        Sample sa = a.make_sample_at(i);
        Sample sb = b.make_sample_at(i);
        CHECK(sa.base_index == sb.base_index);
        CHECK(sa.donor_index == sb.donor_index);
        for (size_t c = 0; c < sa.x.size(); ++c)
            for (size_t k = 0; k < sa.x[c].size(); ++k)
                REQUIRE(sa.x[c][k] == sb.x[c][k]);
    }
    cfg.seed = 102;
    SampleGenerator c(fx.ds, fx.clim, cfg);
    bool differs = false;
    for (uint64_t i = 0; i < 8 && !differs; ++i)
        differs = c.make_sample_at(i).base_index != a.make_sample_at(i).base_index;
    CHECK(differs);
}

TEST_CASE("channel layout: s day/mask pairs oldest first, land last") {
    const auto& fx = fixture();
    GeneratorConfig cfg = GeneratorConfig::training_profile();
    cfg.s_days = 3;
    cfg.seed = 55;
    SampleGenerator gen(fx.ds, fx.clim, cfg);
    Sample s = gen.make_sample_at(7);
    REQUIRE(s.x.size() == 7);  // 2s+1
    REQUIRE(s.y.size() == 3);

    const Mask& donor_valid = fx.ds.days[s.donor_index].field.valid;
    for (int k = 0; k < 3; ++k) {
        int t = s.base_index - (2 - k);  // channel pair k is day base-(s-1-k)
        const MaskedField& f = fx.ds.days[t].field;
        int slot = clim_slot(fx.ds.days[t].date);
        const Raster& vals = s.x[2 * k];
        const Raster& mask = s.x[2 * k + 1];
        for (size_t i = 0; i < vals.size(); ++i) {
            bool vis = f.valid[i] && donor_valid[i];
            CHECK(mask[i] == (vis ? 1.0f : 0.0f));
            if (vis) CHECK(vals[i] == gen.normalize(f.values[i], slot, i));
            else CHECK(vals[i] == cfg.fill_value);
        }
    }
    const MaskedField& base = fx.ds.days[s.base_index].field;
    for (size_t i = 0; i < base.land.size(); ++i) {
        CHECK(s.x[6][i] == (base.land[i] ? 1.0f : 0.0f));
        CHECK(s.real_mask()[i] == (base.valid[i] ? 1.0f : 0.0f));
        // diff = real and not artificial
        bool art = base.valid[i] && donor_valid[i] && !base.land[i];
        CHECK(s.diff_mask()[i] == (base.valid[i] && !art ? 1.0f : 0.0f));
        if (base.valid[i])
            CHECK(s.truth()[i] == gen.normalize(base.values[i], s.doy_slot, i));
    }
}

TEST_CASE("normalization round-trips and uses the right constants per mode") {
    const auto& fx = fixture();
    GeneratorConfig cfg;
    cfg.seed = 9;
    SampleGenerator res(fx.ds, fx.clim, cfg);
    cfg.mode = NormMode::direct;
    SampleGenerator dir(fx.ds, fx.clim, cfg);
    float v = 21.7f;
    int slot = 120;
    size_t cell = 40 * 48 + 30;
    REQUIRE_FALSE(fx.clim.land[cell]);
    CHECK(res.denormalize(res.normalize(v, slot, cell), slot, cell) == Catch::Approx(v).margin(1e-4));
    CHECK(dir.denormalize(dir.normalize(v, slot, cell), slot, cell) == Catch::Approx(v).margin(1e-4));
    // residual normalization subtracts the doy mean; direct does not
    double want_res = ((v - fx.clim.doy_mean[slot][cell]) - fx.clim.mean_anom) / fx.clim.std_anom;
    double want_dir = (v - fx.clim.mean_sst) / fx.clim.std_sst;
    CHECK(res.normalize(v, slot, cell) == Catch::Approx(want_res).margin(1e-5));
    CHECK(dir.normalize(v, slot, cell) == Catch::Approx(want_dir).margin(1e-5));
    CHECK(res.scale() == fx.clim.std_anom);
    CHECK(dir.scale() == fx.clim.std_sst);
}

TEST_CASE("base days are drawn near-uniformly from the qualifying pool") {
    const auto& fx = fixture();
    GeneratorConfig cfg = GeneratorConfig::training_profile();
    cfg.seed = 13;
    SampleGenerator gen(fx.ds, fx.clim, cfg);
    const auto& pool = gen.base_pool();
    REQUIRE(pool.size() > 10);
    std::map<int, int> counts;
    int n = static_cast<int>(pool.size()) * 40;
    for (int i = 0; i < n; ++i) ++counts[gen.make_sample_at(i).base_index];
    double expected = double(n) / pool.size();
    double chi2 = 0;
    for (int day : pool) {
        double d = counts[day] - expected;
        chi2 += d * d / expected;
    }
    // dof = pool-1; mean dof, std sqrt(2*dof): allow a generous 5-sigma band
    double dof = double(pool.size()) - 1;
    CHECK(chi2 < dof + 5 * std::sqrt(2 * dof));
    CHECK(counts.size() == pool.size());  // every qualifying day eventually drawn
}

TEST_CASE("config validation and failure modes") {
    const auto& fx = fixture();
    GeneratorConfig cfg;
    cfg.s_days = 0;
    CHECK_THROWS_AS(SampleGenerator(fx.ds, fx.clim, cfg), std::invalid_argument);
    cfg = GeneratorConfig();
    cfg.min_post_visible = 0.5;  // above min_base_visible
    CHECK_THROWS_AS(SampleGenerator(fx.ds, fx.clim, cfg), std::invalid_argument);
    cfg = GeneratorConfig();
    cfg.min_base_visible = 0.999;  // no day qualifies
    cfg.min_post_visible = 0.05;
    CHECK_THROWS_AS(SampleGenerator(fx.ds, fx.clim, cfg), std::runtime_error);
    cfg = GeneratorConfig();
    CHECK_THROWS_AS(SampleGenerator(fx.ds, fx.clim, cfg, 5, 5), std::invalid_argument);
}

TEST_CASE("day range restricts base and donor pools") {
    const auto& fx = fixture();
    GeneratorConfig cfg = GeneratorConfig::training_profile();
    cfg.seed = 3;
    int lo = 100, hi = 300;
    SampleGenerator gen(fx.ds, fx.clim, cfg, lo, hi);
    for (int i = 0; i < 40; ++i) {
        Sample s = gen.make_sample_at(i);
        CHECK(s.base_index >= lo + cfg.s_days - 1);
        CHECK(s.base_index < hi);
        CHECK(s.donor_index >= lo);
        CHECK(s.donor_index < hi);
    }
}

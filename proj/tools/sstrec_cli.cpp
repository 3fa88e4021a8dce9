// sstrec command-line tool: synthetic data, statistics, climatology,
// generator dumps, training, evaluation and reconstruction.

#include <cstdio>
#include <atomic>
#include <filesystem>
#include <thread>
#include <fstream>
#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "sstrec/sstrec.hpp"

namespace fs = std::filesystem;
using namespace sstrec;

namespace {

struct Split {
    int train_lo, train_hi;  // [lo, hi)
    int val_lo, val_hi;
    int test_lo, test_hi;
};

// Final ~12% of the timeline is the test window; the validation range is the
// last 15% of what precedes it.
Split make_split(int n_days) {
    Split s;
    s.test_hi = n_days;
    s.test_lo = n_days - std::max(1, n_days * 12 / 100);
    s.val_hi = s.test_lo;
    s.val_lo = s.test_lo - std::max(1, s.test_lo * 15 / 100);
    s.train_lo = 0;
    s.train_hi = s.val_lo;
    return s;
}

Dataset load_data(const std::string& dir, const std::string& quadrant) {
    Dataset ds = dataset_load(dir);
    static const std::map<std::string, int> qmap = {{"nw", 0}, {"ne", 1}, {"sw", 2}, {"se", 3}};
    if (quadrant != "all") ds = dataset_quadrant(ds, qmap.at(quadrant));
    return ds;
}

Climatology get_clim(const Dataset& ds, const std::string& clim_path, const Split& split) {
    if (!clim_path.empty() && fs::exists(clim_path))
        return climatology_load(clim_path, ds.land());
    // built from the training portion only
    Dataset train_ds;
    train_ds.name = ds.name;
    train_ds.days.assign(ds.days.begin(), ds.days.begin() + split.val_hi);
    Climatology clim = build_climatology(train_ds);
    if (!clim_path.empty()) climatology_save(clim, clim_path);
    return clim;
}

GeneratorConfig profile_config(const std::string& profile, int s_days, NormMode mode,
                               uint64_t seed) {
    GeneratorConfig cfg = profile == "training" ? GeneratorConfig::training_profile()
                                                : GeneratorConfig::testing_profile();
    cfg.s_days = s_days;
    cfg.mode = mode;
    cfg.seed = seed;
    return cfg;
}

UNetConfig arch_unet(const std::string& arch, int in_ch, int size, uint64_t seed) {
    UNetConfig cfg;
    cfg.in_channels = in_ch;
    cfg.input_size = size;
    cfg.seed = seed;
    if (arch == "unet32") cfg.channels = {32, 64, 128, 256};
    else if (arch == "unet64") cfg.channels = {64, 128, 256, 512};
    else if (arch == "toy") {
        cfg.channels = {16, 32, 64};
        cfg.blocks_per_stage = 1;
    } else
        throw std::invalid_argument("unknown arch " + arch);
    return cfg;
}

std::unique_ptr<Model> make_model(const std::string& arch, int in_ch, int size, uint64_t seed) {
    if (arch == "vit") {
        ViTConfig cfg;
        cfg.in_channels = in_ch;
        cfg.input_size = size;
        cfg.patch = size >= 64 ? 8 : 4;
        cfg.seed = seed;
        return build_vit(cfg);
    }
    return build_unet(arch_unet(arch, in_ch, size, seed));
}

void write_text(const std::string& path, const std::string& body) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << body;
}

int run(int argc, char** argv) {
    CLI::App app{"SST occlusion reconstruction toolkit"};
    app.require_subcommand(1);
    uint64_t seed = 0;
    int threads = 1;
    std::string data_dir;
    app.add_option("--seed", seed, "global RNG seed")->capture_default_str();
    app.add_option("--threads", threads, "worker threads where supported")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    app.add_option("--data-dir", data_dir, "default dataset directory");

    // gen-synth ------------------------------------------------------------
    auto* gs = app.add_subcommand("gen-synth", "generate the synthetic dataset");
    SynthConfig scfg;
    std::string gs_out = "data/synth";
    gs->add_option("--out", gs_out, "output directory")->capture_default_str();
    gs->add_option("--grid", scfg.grid_h, "grid size (square)")->capture_default_str();
    gs->add_option("--years", scfg.n_years, "number of years")->capture_default_str();
    gs->add_option("--cloud-cover", scfg.cloud_cover_mean, "mean cloud cover fraction")
        ->capture_default_str();
    gs->add_option("--coast-fraction", scfg.coast_fraction, "land fraction")->capture_default_str();

    // stats ------------------------------------------------------------------
    auto* st = app.add_subcommand("stats", "dataset diagnostics CSV");
    std::string st_data, st_out;
    std::vector<int> st_lags = {1, 2, 3, 4, 5};
    std::vector<double> st_thresholds = {1.0, 1.5, 2.0, 2.5, 3.0};
    st->add_option("--data", st_data, "dataset directory")->required();
    st->add_option("--out", st_out, "output CSV (default stdout)");
    st->add_option("--lag", st_lags, "persistence lags");
    st->add_option("--threshold", st_thresholds, "exceedance thresholds in °C");

    // clim -------------------------------------------------------------------
    auto* cl = app.add_subcommand("clim", "build the day-of-year climatology");
    std::string cl_data, cl_out = "clim.sgr1";
    float cl_sigma_space = 2.0f, cl_sigma_time = 5.0f;
    bool cl_full = false;
    cl->add_option("--data", cl_data, "dataset directory")->required();
    cl->add_option("--out", cl_out, "output SGR1 path")->capture_default_str();
    cl->add_option("--sigma-space", cl_sigma_space)->capture_default_str();
    cl->add_option("--sigma-time", cl_sigma_time)->capture_default_str();
    cl->add_flag("--full-range", cl_full, "use the whole timeline, not just the training window");

    // gen dump ---------------------------------------------------------------
    auto* gen = app.add_subcommand("gen", "sample generator tools");
    auto* gd = gen->add_subcommand("dump", "write N samples as SGR1 stacks");
    std::string gd_data, gd_clim, gd_out = "samples", gd_profile = "testing", gd_config;
    int gd_n = 4, gd_days = 3;
    gd->add_option("--data", gd_data, "dataset directory")->required();
    gd->add_option("--clim", gd_clim, "climatology path (built if absent)");
    gd->add_option("--out", gd_out, "output directory")->capture_default_str();
    gd->add_option("--profile", gd_profile, "training|testing")->capture_default_str();
    gd->add_option("--config", gd_config, "JSON file mirroring GeneratorConfig fields");
    gd->add_option("-n", gd_n, "number of samples")->capture_default_str();
    gd->add_option("--days", gd_days, "temporal window s")->capture_default_str();

    // train --------------------------------------------------------------------
    auto* tr = app.add_subcommand("train", "train a reconstructor");
    std::string tr_data, tr_clim, tr_arch = "unet32", tr_quadrant = "all", tr_mode = "residual";
    std::string tr_out = "run", tr_config;
    int tr_days = 3, tr_size = 0, tr_epochs = 0, tr_steps = 0;
    tr->add_option("--data", tr_data, "dataset directory")->required();
    tr->add_option("--clim", tr_clim, "climatology path (built if absent)");
    tr->add_option("--arch", tr_arch, "unet32|unet64|vit|toy")->capture_default_str();
    tr->add_option("--days", tr_days, "temporal window s")->capture_default_str();
    tr->add_option("--size", tr_size, "input size (default: dataset grid)");
    tr->add_option("--quadrant", tr_quadrant, "nw|ne|sw|se|all")->capture_default_str();
    tr->add_option("--mode", tr_mode, "residual|direct")->capture_default_str();
    tr->add_option("--config", tr_config, "JSON TrainConfig overrides");
    tr->add_option("--out", tr_out, "output directory")->capture_default_str();
    tr->add_option("--epochs", tr_epochs, "override max_epochs");
    tr->add_option("--steps", tr_steps, "override steps_per_epoch");

    // eval ---------------------------------------------------------------------
    auto* ev = app.add_subcommand("eval", "diff-mask RMSE of a checkpoint");
    std::string ev_ckpt, ev_data, ev_clim, ev_profile = "testing", ev_quadrant = "all";
    int ev_batches = 50;
    ev->add_option("--checkpoint", ev_ckpt)->required();
    ev->add_option("--data", ev_data)->required();
    ev->add_option("--clim", ev_clim);
    ev->add_option("--profile", ev_profile)->capture_default_str();
    ev->add_option("--quadrant", ev_quadrant)->capture_default_str();
    ev->add_option("--batches", ev_batches)->capture_default_str();

    // bench ----------------------------------------------------------------------
    auto* be = app.add_subcommand("bench", "model vs baselines, monthly breakdown CSV");
    std::string be_ckpt, be_data, be_clim, be_profile = "testing", be_out, be_quadrant = "all";
    int be_batches = 50;
    be->add_option("--checkpoint", be_ckpt)->required();
    be->add_option("--data", be_data)->required();
    be->add_option("--clim", be_clim);
    be->add_option("--profile", be_profile)->capture_default_str();
    be->add_option("--quadrant", be_quadrant)->capture_default_str();
    be->add_option("--batches", be_batches)->capture_default_str();
    be->add_option("--out", be_out, "output CSV (default stdout)");

    // reconstruct -----------------------------------------------------------------
    auto* rc = app.add_subcommand("reconstruct", "reconstruct one day");
    std::string rc_ckpt, rc_data, rc_clim, rc_date, rc_out = "recon.sgr1", rc_quadrant = "all";
    int rc_embed_size = 0, rc_embed_y = 0, rc_embed_x = 0;
    rc->add_option("--checkpoint", rc_ckpt)->required();
    rc->add_option("--data", rc_data)->required();
    rc->add_option("--clim", rc_clim);
    rc->add_option("--date", rc_date, "YYYY-MM-DD")->required();
    rc->add_option("--quadrant", rc_quadrant)->capture_default_str();
    rc->add_option("--out", rc_out)->capture_default_str();
    rc->add_option("--embed-size", rc_embed_size,
                   "embed the day into a larger grid of this size (0: off)");
    rc->add_option("--embed-y", rc_embed_y, "embed row offset");
    rc->add_option("--embed-x", rc_embed_x, "embed column offset");

    // model info ----------------------------------------------------------------
    auto* mo = app.add_subcommand("model", "model tools");
    auto* mi = mo->add_subcommand("info", "print layer table and parameter count");
    std::string mi_ckpt, mi_arch;
    int mi_days = 3, mi_size = 128;
    mi->add_option("--checkpoint", mi_ckpt, "read architecture from a checkpoint");
    mi->add_option("--arch", mi_arch, "unet32|unet64|vit|toy");
    mi->add_option("--days", mi_days)->capture_default_str();
    mi->add_option("--size", mi_size)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    if (gs->parsed()) {
        scfg.grid_w = scfg.grid_h;
        scfg.seed = seed ? seed : scfg.seed;
        Dataset ds = gen_dataset(scfg);
        dataset_save(ds, gs_out);
        std::printf("wrote %zu days (%dx%d) to %s\n", ds.size(), ds.h(), ds.w(), gs_out.c_str());
        return 0;
    }

    if (st->parsed()) {
        Dataset ds = dataset_load(st_data);
        std::string csv = "name,value,units,n_pairs\n";
        char buf[160];
        auto row = [&](const std::string& name, double v, const char* units, size_t n) {
            std::snprintf(buf, sizeof buf, "%s,%.6g,%s,%zu\n", name.c_str(), v, units, n);
            csv += buf;
        };
        Extrema ex = extrema(ds);
        row("sst_min", ex.min, "degC", ex.n_cells);
        row("sst_mean", ex.mean, "degC", ex.n_cells);
        row("sst_max", ex.max, "degC", ex.n_cells);
        GradientStats sg = spatial_gradients(ds), tg = temporal_gradients(ds);
        row("spatial_grad_max", sg.max, "degC", sg.n_pairs);
        row("spatial_grad_avg_max", sg.avg_max, "degC", sg.n_pairs);
        row("spatial_grad_mean", sg.mean, "degC", sg.n_pairs);
        row("spatial_grad_std", sg.std, "degC", sg.n_pairs);
        row("temporal_grad_max", tg.max, "degC", tg.n_pairs);
        row("temporal_grad_avg_max", tg.avg_max, "degC", tg.n_pairs);
        row("temporal_grad_mean", tg.mean, "degC", tg.n_pairs);
        row("temporal_grad_std", tg.std, "degC", tg.n_pairs);
        auto exc_s = exceedance(ds, GradientAxis::spatial, st_thresholds);
        auto exc_t = exceedance(ds, GradientAxis::temporal, st_thresholds);
        for (size_t k = 0; k < st_thresholds.size(); ++k) {
            row("spatial_exceed_" + std::to_string(st_thresholds[k]), exc_s[k], "fraction", sg.n_pairs);
            row("temporal_exceed_" + std::to_string(st_thresholds[k]), exc_t[k], "fraction", tg.n_pairs);
        }
        for (int lag : st_lags) {
            PersistenceStats ps = persistence(ds, lag);
            row("persistence_mad_lag" + std::to_string(lag), ps.mad, "degC", ps.n_pairs);
            row("persistence_rmsd_lag" + std::to_string(lag), ps.rmsd, "degC", ps.n_pairs);
        }
        if (st_out.empty()) std::fputs(csv.c_str(), stdout);
        else write_text(st_out, csv);
        return 0;
    }

    if (cl->parsed()) {
        Dataset ds = dataset_load(cl_data);
        Split split = make_split(static_cast<int>(ds.size()));
        Dataset train_ds;
        train_ds.name = ds.name;
        int hi = cl_full ? static_cast<int>(ds.size()) : split.val_hi;
        train_ds.days.assign(ds.days.begin(), ds.days.begin() + hi);
        Climatology clim = build_climatology(train_ds, {cl_sigma_space, cl_sigma_time, 3.0f});
        climatology_save(clim, cl_out);
        std::printf("climatology: std_anom %.4f, fill iterations %d -> %s\n", clim.std_anom,
                    clim.fill_iterations, cl_out.c_str());
        return 0;
    }

    if (gd->parsed()) {
        Dataset ds = dataset_load(gd_data);
        Split split = make_split(static_cast<int>(ds.size()));
        Climatology clim = get_clim(ds, gd_clim, split);
        GeneratorConfig cfg = profile_config(gd_profile, gd_days, NormMode::residual, seed);
        if (!gd_config.empty()) {
            std::ifstream in(gd_config);
            if (!in) throw std::runtime_error("cannot open " + gd_config);
            nlohmann::json j = nlohmann::json::parse(in);
            cfg.s_days = j.value("s_days", cfg.s_days);
            cfg.min_base_visible = j.value("min_base_visible", cfg.min_base_visible);
            cfg.min_post_visible = j.value("min_post_visible", cfg.min_post_visible);
            cfg.min_diff_sea_fraction = j.value("min_diff_sea_fraction", cfg.min_diff_sea_fraction);
            cfg.base_visible_max = j.value("base_visible_max", cfg.base_visible_max);
            cfg.donor_visible_min = j.value("donor_visible_min", cfg.donor_visible_min);
            cfg.donor_visible_max = j.value("donor_visible_max", cfg.donor_visible_max);
            cfg.max_retries = j.value("max_retries", cfg.max_retries);
            cfg.seed = j.value("seed", cfg.seed);
        }
        SampleGenerator g(ds, clim, cfg);
        fs::create_directories(gd_out);
        // make_sample_at(i) depends only on i, so samples can be drawn on
        // worker threads and written in order afterwards
        std::vector<Sample> samples(gd_n);
        int n_workers = std::min(threads, std::max(gd_n, 1));
        std::vector<std::thread> workers;
        std::atomic<int> next{0};
        for (int t = 0; t < n_workers; ++t)
            workers.emplace_back([&] {
                for (int i = next.fetch_add(1); i < gd_n; i = next.fetch_add(1))
                    samples[i] = g.make_sample_at(i);
            });
        for (auto& t : workers) t.join();
        for (int i = 0; i < gd_n; ++i) {
            Sample& s = samples[i];
            Sgr1 r;
            r.h = s.h();
            r.w = s.w();
            for (size_t c = 0; c + 1 < s.x.size(); c += 2) {
                r.names.push_back("day" + std::to_string(c / 2));
                r.names.push_back("mask" + std::to_string(c / 2));
                r.channels.push_back(s.x[c]);
                r.channels.push_back(s.x[c + 1]);
            }
            r.names.insert(r.names.end(), {"land", "truth", "real_mask", "diff_mask"});
            r.channels.push_back(s.x.back());
            for (const auto& ch : s.y) r.channels.push_back(ch);
            sgr1_write((fs::path(gd_out) / ("sample" + std::to_string(i) + ".sgr1")).string(), r);
        }
        std::printf("wrote %d samples to %s\n", gd_n, gd_out.c_str());
        return 0;
    }

    if (tr->parsed()) {
        Dataset ds = load_data(tr_data, tr_quadrant);
        Split split = make_split(static_cast<int>(ds.size()));
        Climatology clim = get_clim(ds, tr_clim, split);
        NormMode mode = tr_mode == "direct" ? NormMode::direct : NormMode::residual;
        int size = tr_size ? tr_size : ds.h();
        int in_ch = 2 * tr_days + 1;

        GeneratorConfig gt = profile_config("training", tr_days, mode, seed + 1);
        GeneratorConfig gv = profile_config("testing", tr_days, mode, seed + 2);
        SampleGenerator gen_train(ds, clim, gt, split.train_lo, split.train_hi);
        SampleGenerator gen_val(ds, clim, gv, split.val_lo, split.val_hi);

        auto model = make_model(tr_arch, in_ch, size, seed + 3);
        TrainConfig cfg;
        cfg.seed = seed;
        if (!tr_config.empty()) {
            std::ifstream in(tr_config);
            if (!in) throw std::runtime_error("cannot open " + tr_config);
            nlohmann::json j = nlohmann::json::parse(in);
            cfg.max_epochs = j.value("max_epochs", cfg.max_epochs);
            cfg.steps_per_epoch = j.value("steps_per_epoch", cfg.steps_per_epoch);
            cfg.batch_size = j.value("batch_size", cfg.batch_size);
            cfg.lr0 = j.value("lr0", cfg.lr0);
            cfg.lr_min = j.value("lr_min", cfg.lr_min);
            cfg.plateau_patience = j.value("plateau_patience", cfg.plateau_patience);
            cfg.early_stop_patience = j.value("early_stop_patience", cfg.early_stop_patience);
            cfg.eval_interval = j.value("eval_interval", cfg.eval_interval);
            cfg.val_batches = j.value("val_batches", cfg.val_batches);
        }
        if (tr_epochs) cfg.max_epochs = tr_epochs;
        if (tr_steps) cfg.steps_per_epoch = tr_steps;
        fs::create_directories(tr_out);
        cfg.checkpoint_path = (fs::path(tr_out) / "best.ckpt").string();

        TrainLog log = train(*model, gen_train, gen_val, cfg);
        write_text((fs::path(tr_out) / "trainlog.csv").string(), train_log_csv(log));
        std::printf("best val loss %.6g at epoch %d (%zu epochs run) -> %s\n", log.best_val,
                    log.best_epoch, log.epochs.size(), cfg.checkpoint_path.c_str());
        return 0;
    }

    if (ev->parsed()) {
        Dataset ds = load_data(ev_data, ev_quadrant);
        Split split = make_split(static_cast<int>(ds.size()));
        Climatology clim = get_clim(ds, ev_clim, split);
        auto model = model_from_checkpoint(ev_ckpt);
        GeneratorConfig cfg = profile_config(ev_profile, 3, NormMode::residual, seed);
        nlohmann::json arch = nn::checkpoint_manifest(ev_ckpt).at("arch");
        cfg.s_days = (arch.at("in_channels").get<int>() - 1) / 2;
        SampleGenerator gen(ds, clim, cfg, split.test_lo, split.test_hi);
        RmseResult r = evaluate_rmse(*model, gen, ev_batches);
        std::printf("rmse,%.6g\nbatch_std,%.6g\nn_cells,%zu\n", r.rmse, r.batch_std, r.n_cells);
        return 0;
    }

    if (be->parsed()) {
        Dataset ds = load_data(be_data, be_quadrant);
        Split split = make_split(static_cast<int>(ds.size()));
        Climatology clim = get_clim(ds, be_clim, split);
        auto model = model_from_checkpoint(be_ckpt);
        nlohmann::json arch = nn::checkpoint_manifest(be_ckpt).at("arch");
        GeneratorConfig cfg = profile_config(be_profile, 3, NormMode::residual, seed);
        cfg.s_days = (arch.at("in_channels").get<int>() - 1) / 2;
        SampleGenerator gen(ds, clim, cfg, split.test_lo, split.test_hi);

        // per-month accumulators: model plus four baselines
        std::array<double, 12> sq{};
        std::array<size_t, 12> n{};
        double scale = gen.scale();
        int total = be_batches * 32;
        for (int b = 0; b < be_batches; ++b) {
            std::vector<Sample> raw;
            for (int i = 0; i < 32; ++i) raw.push_back(gen.make_sample_at(b * 32 + i));
            std::vector<int> months;
            for (const auto& s : raw) months.push_back(ds.days[s.base_index].date.month - 1);
            BatchTensors bt = pack_batch(std::move(raw));
            nn::Tensor pred = model->forward(bt.x, false);
            size_t plane = static_cast<size_t>(bt.truth.dim(1)) * bt.truth.dim(2);
            for (size_t i = 0; i < pred.size(); ++i) {
                if (bt.diff_mask[i] == 0.0f) continue;
                int m = months[i / plane];
                double d = (static_cast<double>(pred[i]) - bt.truth[i]) * scale;
                sq[m] += d * d;
                ++n[m];
            }
        }
        auto base = baselines(gen, ds, clim, total);
        std::string csv = "row,value,n\n";
        char buf[128];
        size_t all_n = 0;
        double all_sq = 0;
        for (int m = 0; m < 12; ++m) {
            all_n += n[m];
            all_sq += sq[m];
            std::snprintf(buf, sizeof buf, "model_rmse_month%02d,%.6g,%zu\n", m + 1,
                          n[m] ? std::sqrt(sq[m] / n[m]) : 0.0, n[m]);
            csv += buf;
        }
        std::snprintf(buf, sizeof buf, "model_rmse_total,%.6g,%zu\n",
                      all_n ? std::sqrt(all_sq / all_n) : 0.0, all_n);
        csv += buf;
        for (const auto& [k, v] : base) {
            std::snprintf(buf, sizeof buf, "baseline_%s,%.6g,%zu\n", k.c_str(), v, all_n);
            csv += buf;
        }
        if (be_out.empty()) std::fputs(csv.c_str(), stdout);
        else write_text(be_out, csv);
        return 0;
    }

    if (rc->parsed()) {
        Dataset ds = load_data(rc_data, rc_quadrant);
        Split split = make_split(static_cast<int>(ds.size()));
        Climatology clim = get_clim(ds, rc_clim, split);
        auto model = model_from_checkpoint(rc_ckpt);
        nlohmann::json arch = nn::checkpoint_manifest(rc_ckpt).at("arch");
        int s_days = (arch.at("in_channels").get<int>() - 1) / 2;

        Date want = parse_date(rc_date);
        int idx = -1;
        for (size_t t = 0; t < ds.size(); ++t) {
            const Date& d = ds.days[t].date;
            if (d.year == want.year && d.month == want.month && d.day == want.day)
                idx = static_cast<int>(t);
        }
        if (idx < s_days - 1) throw std::runtime_error("date not found or not enough history");

        // embedded sub-region mode: place the day into a larger, fully
        // occluded grid at the given offset
        auto embed = [&](const MaskedField& f) {
            if (!rc_embed_size) return f;
            MaskedField big(rc_embed_size, rc_embed_size);
            for (size_t i = 0; i < big.values.size(); ++i) big.land[i] = 0;
            for (int y = 0; y < f.h(); ++y)
                for (int x = 0; x < f.w(); ++x) {
                    big.values(rc_embed_y + y, rc_embed_x + x) = f.values(y, x);
                    big.valid(rc_embed_y + y, rc_embed_x + x) = f.valid(y, x);
                    big.land(rc_embed_y + y, rc_embed_x + x) = f.land(y, x);
                }
            return big;
        };

        MaskedField observed = embed(ds.days[idx].field);
        int h = observed.h(), w = observed.w();
        size_t plane = static_cast<size_t>(h) * w;
        int slot = clim_slot(ds.days[idx].date);

        // build the input stack from real masks (no artificial occlusion)
        nn::Tensor x({1, h, w, 2 * s_days + 1});
        GeneratorConfig gcfg;
        gcfg.s_days = s_days;
        gcfg.seed = seed;
        SampleGenerator helper(ds, clim, gcfg);  // for normalization only
        for (int k = s_days - 1; k >= 0; --k) {
            MaskedField f = embed(ds.days[idx - k].field);
            int fslot = clim_slot(ds.days[idx - k].date);
            int c = 2 * (s_days - 1 - k);
            for (size_t i = 0; i < plane; ++i) {
                if (!f.valid[i]) continue;
                // embedded cells fall back to border climatology indexing
                size_t cell = rc_embed_size ? std::min(i, clim.doy_mean[fslot].size() - 1) : i;
                x.data[i * (2 * s_days + 1) + c] = helper.normalize(f.values[i], fslot, cell);
                x.data[i * (2 * s_days + 1) + c + 1] = 1.0f;
            }
        }
        for (size_t i = 0; i < plane; ++i)
            x.data[i * (2 * s_days + 1) + 2 * s_days] = observed.land[i] ? 1.0f : 0.0f;

        nn::Tensor pred = model->forward(x, false);
        Raster recon(h, w, kMissing), clim_ch(h, w, kMissing), input_ch(h, w, kMissing),
            truth_ch(h, w, kMissing);
        for (size_t i = 0; i < plane; ++i) {
            size_t cell = rc_embed_size ? std::min(i, clim.doy_mean[slot].size() - 1) : i;
            if (!observed.land[i]) {
                recon[i] = static_cast<float>(helper.denormalize(pred[i], slot, cell));
                clim_ch[i] = clim.doy_mean[slot][cell];
            }
            if (observed.valid[i]) {
                input_ch[i] = observed.values[i];
                truth_ch[i] = observed.values[i];
            }
        }
        MaskedField comp = composite(recon, observed);
        Raster comp_ch(h, w, kMissing);
        for (size_t i = 0; i < plane; ++i)
            if (comp.valid[i]) comp_ch[i] = comp.values[i];

        Sgr1 out;
        out.h = h;
        out.w = w;
        out.names = {"input", "truth", "reconstruction", "composite", "climatology"};
        out.channels = {input_ch, truth_ch, recon, comp_ch, clim_ch};
        sgr1_write(rc_out, out);
        std::printf("wrote %s\n", rc_out.c_str());
        return 0;
    }

    if (mi->parsed()) {
        std::unique_ptr<Model> model;
        if (!mi_ckpt.empty()) model = model_from_checkpoint(mi_ckpt);
        else if (!mi_arch.empty()) model = make_model(mi_arch, 2 * mi_days + 1, mi_size, seed + 3);
        else throw std::invalid_argument("model info: need --checkpoint or --arch");
        std::printf("%-40s %-18s %s\n", "parameter", "shape", "count");
        for (auto* p : model->params()) {
            std::string shape = "[";
            for (size_t i = 0; i < p->value.shape.size(); ++i)
                shape += (i ? "," : "") + std::to_string(p->value.shape[i]);
            shape += "]";
            std::printf("%-40s %-18s %zu\n", p->name.c_str(), shape.c_str(), p->value.size());
        }
        std::printf("total parameters: %zu\n", model->param_count());
        std::printf("architecture: %s\n", model->arch().dump().c_str());
        return 0;
    }

    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "validation error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 3;
    }
}

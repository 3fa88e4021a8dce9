#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <random>

#include "sstrec/sstrec.hpp"

using namespace sstrec;
using nn::Tensor;

namespace {

UNetConfig small_unet_cfg(uint64_t seed = 7) {
    UNetConfig c;
    c.channels = {8, 16};
    c.blocks_per_stage = 1;
    c.in_channels = 7;
    c.out_channels = 1;
    c.input_size = 16;
    c.seed = seed;
    return c;
}

ViTConfig small_vit_cfg(uint64_t seed = 7) {
    ViTConfig c;
    c.patch = 4;
    c.embed_dim = 16;
    c.depth = 2;
    c.heads = 2;
    c.mlp_ratio = 2;
    c.in_channels = 7;
    c.out_channels = 1;
    c.input_size = 16;
    c.seed = seed;
    return c;
}

Tensor random_input(int n, int h, int w, int c, uint64_t seed) {
    Tensor x({n, h, w, c});
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> nd(0.0f, 1.0f);
    for (auto& v : x.data) v = nd(rng);
    return x;
}

bool same_params(Model& a, Model& b) {
    auto& pa = a.params();
    auto& pb = b.params();
    if (pa.size() != pb.size()) return false;
    for (size_t i = 0; i < pa.size(); ++i)
        if (pa[i]->value.data != pb[i]->value.data) return false;
    return true;
}

}  // namespace

TEST_CASE("unet forward shape and finiteness") {
    UNet net(small_unet_cfg());
    Tensor x = random_input(2, 16, 16, 7, 11);
    Tensor y = net.forward(x, false);
    REQUIRE(y.shape == std::vector<int>({2, 16, 16, 1}));
    for (float v : y.data) REQUIRE(std::isfinite(v));

    Tensor yt = net.forward(x, true);
    REQUIRE(yt.shape == y.shape);
}

TEST_CASE("vit forward shape and finiteness") {
    ViT net(small_vit_cfg());
    Tensor x = random_input(2, 16, 16, 7, 13);
    Tensor y = net.forward(x, false);
    REQUIRE(y.shape == std::vector<int>({2, 16, 16, 1}));
    for (float v : y.data) REQUIRE(std::isfinite(v));
}

TEST_CASE("seeded init determinism") {
    UNet a(small_unet_cfg(5)), b(small_unet_cfg(5)), c(small_unet_cfg(6));
    CHECK(same_params(a, b));
    CHECK_FALSE(same_params(a, c));

    Tensor x = random_input(1, 16, 16, 7, 3);
    Tensor ya = a.forward(x, false);
    Tensor yb = b.forward(x, false);
    CHECK(ya.data == yb.data);

    ViT va(small_vit_cfg(5)), vb(small_vit_cfg(5)), vc(small_vit_cfg(9));
    CHECK(same_params(va, vb));
    CHECK_FALSE(same_params(va, vc));
}

TEST_CASE("backward produces input gradient and parameter gradients") {
    UNet net(small_unet_cfg());
    Tensor x = random_input(1, 16, 16, 7, 17);
    Tensor y = net.forward(x, true);
    Tensor dy(y.shape);
    for (auto& v : dy.data) v = 1.0f;
    nn::zero_grads(net.params());
    Tensor dx = net.backward(dy);
    REQUIRE(dx.shape == x.shape);

    size_t nonzero_params = 0;
    for (auto* p : net.params()) {
        bool any = false;
        for (float g : p->grad.data)
            if (g != 0.0f) any = true;
        if (any) ++nonzero_params;
    }
    CHECK(nonzero_params > net.params().size() / 2);
}

TEST_CASE("arch json round-trip through build_model") {
    UNetConfig uc = small_unet_cfg(21);
    UNet direct(uc);
    auto built = build_model(uc.to_json());
    REQUIRE(built);
    CHECK(built->arch() == direct.arch());
    CHECK(built->param_count() == direct.param_count());
    CHECK(same_params(direct, *built));

    ViTConfig vc = small_vit_cfg(22);
    ViT vdirect(vc);
    auto vbuilt = build_model(vc.to_json());
    CHECK(vbuilt->arch() == vdirect.arch());
    CHECK(same_params(vdirect, *vbuilt));

    nlohmann::json bad = uc.to_json();
    bad["kind"] = "mlp";
    CHECK_THROWS(build_model(bad));
}

TEST_CASE("checkpoint save/load is bit-exact including running stats") {
    std::string path = "test_models_ckpt.bin";
    UNet net(small_unet_cfg(31));

    // move BatchNorm running stats away from their init values
    Tensor x = random_input(4, 16, 16, 7, 41);
    for (int i = 0; i < 3; ++i) net.forward(x, true);

    Tensor probe = random_input(2, 16, 16, 7, 43);
    Tensor y_ref = net.forward(probe, false);
    model_save(net, path, {{"note", 1}});

    UNet fresh(small_unet_cfg(99));  // different seed: weights start different
    REQUIRE_FALSE(same_params(net, fresh));
    auto manifest = model_load_into(fresh, path);
    CHECK(manifest.at("extra").at("note") == 1);
    CHECK(same_params(net, fresh));
    Tensor y_loaded = fresh.forward(probe, false);
    CHECK(y_loaded.data == y_ref.data);  // running stats restored too

    auto from_ckpt = model_from_checkpoint(path);
    REQUIRE(from_ckpt);
    Tensor y_auto = from_ckpt->forward(probe, false);
    CHECK(y_auto.data == y_ref.data);

    std::remove(path.c_str());
}

TEST_CASE("skip ablation changes the output") {
    UNetConfig cfg = small_unet_cfg(51);
    cfg.channels = {8, 16, 32};
    cfg.input_size = 16;
    UNet net(cfg);
    Tensor x = random_input(1, 16, 16, 7, 61);
    Tensor y0 = net.forward(x, false);
    net.ablate_skip(1);
    Tensor y1 = net.forward(x, false);
    REQUIRE(y1.shape == y0.shape);
    CHECK(y1.data != y0.data);
    net.ablate_skip(-1);
    Tensor y2 = net.forward(x, false);
    CHECK(y2.data == y0.data);
}

TEST_CASE("config validation") {
    UNetConfig uc = small_unet_cfg();
    uc.channels = {8};
    CHECK_THROWS_AS(UNet(uc), std::invalid_argument);
    uc = small_unet_cfg();
    uc.input_size = 17;  // not divisible by 2^(stages-1)
    CHECK_THROWS_AS(UNet(uc), std::invalid_argument);
    uc = small_unet_cfg();
    uc.blocks_per_stage = 0;
    CHECK_THROWS_AS(UNet(uc), std::invalid_argument);

    ViTConfig vc = small_vit_cfg();
    vc.input_size = 15;
    CHECK_THROWS_AS(ViT(vc), std::invalid_argument);
    vc = small_vit_cfg();
    vc.embed_dim = 15;  // not divisible by heads
    CHECK_THROWS_AS(ViT(vc), std::invalid_argument);
}

#pragma once

#include <memory>
#include <vector>

#include "sstrec/models/model.hpp"
#include "sstrec/nn/attention.hpp"
#include "sstrec/nn/layers.hpp"

namespace sstrec {

struct ViTConfig {
    int patch = 8;
    int embed_dim = 256;
    int depth = 6;
    int heads = 8;
    int tail_upsamples = -1;  // -1: log2(patch)
    int mlp_ratio = 4;
    int in_channels = 7;
    int out_channels = 1;
    int input_size = 128;
    uint64_t seed = 1;

    int resolved_tail() const {
        if (tail_upsamples >= 0) return tail_upsamples;
        int t = 0, p = patch;
        while (p > 1) {
            p /= 2;
            ++t;
        }
        return t;
    }

    void check() const {
        if (patch < 1 || input_size % patch)
            throw std::invalid_argument("ViTConfig: input size not divisible by patch");
        if (embed_dim % heads) throw std::invalid_argument("ViTConfig: embed_dim % heads != 0");
        if (depth < 0) throw std::invalid_argument("ViTConfig: negative depth");
        if ((1 << resolved_tail()) != patch && tail_upsamples < 0)
            throw std::invalid_argument("ViTConfig: patch not a power of two");
    }

    nlohmann::json to_json() const {
        return {{"kind", "vit"}, {"patch", patch}, {"embed_dim", embed_dim}, {"depth", depth},
                {"heads", heads}, {"tail_upsamples", tail_upsamples}, {"mlp_ratio", mlp_ratio},
                {"in_channels", in_channels}, {"out_channels", out_channels},
                {"input_size", input_size}, {"seed", seed}};
    }
    static ViTConfig from_json(const nlohmann::json& j) {
        ViTConfig c;
        c.patch = j.at("patch");
        c.embed_dim = j.at("embed_dim");
        c.depth = j.at("depth");
        c.heads = j.at("heads");
        c.tail_upsamples = j.at("tail_upsamples");
        c.mlp_ratio = j.at("mlp_ratio");
        c.in_channels = j.at("in_channels");
        c.out_channels = j.at("out_channels");
        c.input_size = j.at("input_size");
        c.seed = j.at("seed");
        return c;
    }
};

/// Patch embedding (non-overlapping conv), learned positional embedding,
/// transformer blocks, spatial reassembly and a convolutional upsampling
/// tail back to the input resolution.
class ViT : public Model {
public:
    explicit ViT(ViTConfig cfg) : cfg_(cfg) {
        cfg_.check();
        std::mt19937_64 rng(cfg_.seed);
        int p = cfg_.patch, d = cfg_.embed_dim;
        grid_ = cfg_.input_size / p;
        tokens_ = grid_ * grid_;
        embed_ = std::make_unique<nn::Conv2d>(p, p, cfg_.in_channels, d, p, nn::Pad::valid, rng,
                                              "patch_embed");
        pos_ = nn::Param("pos_embed", {tokens_, d});
        nn::init_fan_in(pos_.value, static_cast<size_t>(d), rng);
        for (int i = 0; i < cfg_.depth; ++i)
            blocks_.push_back(std::make_unique<nn::TransformerBlock>(
                d, cfg_.heads, cfg_.mlp_ratio, rng, "block" + std::to_string(i)));
        final_ln_ = std::make_unique<nn::LayerNorm>(d, "final_ln");

        tail_ = std::make_unique<nn::Sequential>();
        int c = d;
        for (int u = 0; u < cfg_.resolved_tail(); ++u) {
            int cn = std::max(c / 2, 16);
            std::string pre = "tail" + std::to_string(u);
            tail_->add(std::make_unique<nn::Upsample2x>());
            tail_->add(std::make_unique<nn::Conv2d>(3, 3, c, cn, 1, nn::Pad::same, rng,
                                                    pre + ".conv"));
            tail_->add(std::make_unique<nn::BatchNorm>(cn, pre + ".bn"));
            tail_->add(std::make_unique<nn::ReLU>());
            c = cn;
        }
        head_ = std::make_unique<nn::Conv2d>(1, 1, c, cfg_.out_channels, 1, nn::Pad::same, rng,
                                             "head");
    }

    nn::Tensor forward(const nn::Tensor& x, bool train) override {
        nn::Tensor t = embed_->forward(x, train);  // N, grid, grid, D
        int N = t.dim(0);
        t.shape = {N, tokens_, cfg_.embed_dim};  // same memory layout, tokens row-major
        for (int n = 0; n < N; ++n)
            for (int tok = 0; tok < tokens_; ++tok)
                for (int i = 0; i < cfg_.embed_dim; ++i)
                    t.data[(static_cast<size_t>(n) * tokens_ + tok) * cfg_.embed_dim + i] +=
                        pos_.value[static_cast<size_t>(tok) * cfg_.embed_dim + i];
        for (auto& b : blocks_) t = b->forward(t, train);
        t = final_ln_->forward(t, train);
        t.shape = {N, grid_, grid_, cfg_.embed_dim};
        t = tail_->forward(t, train);
        return head_->forward(t, train);
    }

    nn::Tensor backward(const nn::Tensor& dy) override {
        nn::Tensor g = head_->backward(dy);
        g = tail_->backward(g);
        int N = g.dim(0);
        g.shape = {N, tokens_, cfg_.embed_dim};
        g = final_ln_->backward(g);
        for (auto it = blocks_.rbegin(); it != blocks_.rend(); ++it) g = (*it)->backward(g);
        for (int n = 0; n < N; ++n)
            for (int tok = 0; tok < tokens_; ++tok)
                for (int i = 0; i < cfg_.embed_dim; ++i)
                    pos_.grad[static_cast<size_t>(tok) * cfg_.embed_dim + i] +=
                        g.data[(static_cast<size_t>(n) * tokens_ + tok) * cfg_.embed_dim + i];
        g.shape = {N, grid_, grid_, cfg_.embed_dim};
        return embed_->backward(g);
    }

    nlohmann::json arch() const override { return cfg_.to_json(); }
    const ViTConfig& config() const { return cfg_; }

protected:
    void collect_params(std::vector<nn::Param*>& out) override {
        embed_->collect(out);
        out.push_back(&pos_);
        for (auto& b : blocks_) b->collect(out);
        final_ln_->collect(out);
        tail_->collect(out);
        head_->collect(out);
    }
    void collect_state(std::vector<std::pair<std::string, std::vector<float>*>>& out) override {
        tail_->collect_state(out);
    }

private:
    ViTConfig cfg_;
    int grid_ = 0, tokens_ = 0;
    std::unique_ptr<nn::Conv2d> embed_;
    nn::Param pos_;
    std::vector<std::unique_ptr<nn::TransformerBlock>> blocks_;
    std::unique_ptr<nn::LayerNorm> final_ln_;
    std::unique_ptr<nn::Sequential> tail_;
    std::unique_ptr<nn::Conv2d> head_;
};

inline std::unique_ptr<Model> build_unet(const UNetConfig& cfg) {
    return std::make_unique<UNet>(cfg);
}
inline std::unique_ptr<Model> build_vit(const ViTConfig& cfg) {
    return std::make_unique<ViT>(cfg);
}

/// Rebuild a model from its serialized architecture config.
inline std::unique_ptr<Model> build_model(const nlohmann::json& arch) {
    std::string kind = arch.at("kind");
    if (kind == "unet") return build_unet(UNetConfig::from_json(arch));
    if (kind == "vit") return build_vit(ViTConfig::from_json(arch));
    throw std::invalid_argument("build_model: unknown kind " + kind);
}

/// Rebuild and restore weights from a checkpoint file.
inline std::unique_ptr<Model> model_from_checkpoint(const std::string& path) {
    auto manifest = nn::checkpoint_manifest(path);
    auto model = build_model(manifest.at("arch"));
    model_load_into(*model, path);
    return model;
}

}  // namespace sstrec

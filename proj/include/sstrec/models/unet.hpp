#pragma once

#include <memory>
#include <vector>

#include "sstrec/models/model.hpp"
#include "sstrec/nn/layers.hpp"

namespace sstrec {

struct UNetConfig {
    std::vector<int> channels = {32, 64, 128, 256};
    int blocks_per_stage = 2;
    int in_channels = 7;  // 2s+1
    int out_channels = 1;
    int input_size = 256;
    uint64_t seed = 1;

    void check() const {
        if (channels.size() < 2) throw std::invalid_argument("UNetConfig: need >= 2 stages");
        if (blocks_per_stage < 1) throw std::invalid_argument("UNetConfig: blocks_per_stage < 1");
        int div = 1 << (channels.size() - 1);
        if (input_size % div) throw std::invalid_argument("UNetConfig: input size not divisible");
    }

    nlohmann::json to_json() const {
        return {{"kind", "unet"}, {"channels", channels}, {"blocks_per_stage", blocks_per_stage},
                {"in_channels", in_channels}, {"out_channels", out_channels},
                {"input_size", input_size}, {"seed", seed}};
    }
    static UNetConfig from_json(const nlohmann::json& j) {
        UNetConfig c;
        c.channels = j.at("channels").get<std::vector<int>>();
        c.blocks_per_stage = j.at("blocks_per_stage");
        c.in_channels = j.at("in_channels");
        c.out_channels = j.at("out_channels");
        c.input_size = j.at("input_size");
        c.seed = j.at("seed");
        return c;
    }
};

/// Encoder of stride-2 residual stages, decoder with skip concatenations at
/// matching resolutions, 1-channel conv head.
class UNet : public Model {
public:
    explicit UNet(UNetConfig cfg) : cfg_(cfg) {
        cfg_.check();
        std::mt19937_64 rng(cfg_.seed);
        const auto& ch = cfg_.channels;
        int K = static_cast<int>(ch.size());

        // encoder stage 0: stem conv then residual blocks at full resolution
        {
            auto s = std::make_unique<nn::Sequential>();
            s->add(std::make_unique<nn::Conv2d>(3, 3, cfg_.in_channels, ch[0], 1, nn::Pad::same,
                                                rng, "enc0.stem"));
            s->add(std::make_unique<nn::BatchNorm>(ch[0], "enc0.stem_bn"));
            s->add(std::make_unique<nn::ReLU>());
            for (int b = 0; b < cfg_.blocks_per_stage; ++b)
                s->add(std::make_unique<nn::ResidualBlock>(ch[0], ch[0], 1, rng,
                                                           "enc0.block" + std::to_string(b)));
            enc_.push_back(std::move(s));
        }
        // downsampling stages: the first block halves the resolution
        for (int i = 1; i < K; ++i) {
            auto s = std::make_unique<nn::Sequential>();
            std::string pre = "enc" + std::to_string(i);
            s->add(std::make_unique<nn::ResidualBlock>(ch[i - 1], ch[i], 2, rng, pre + ".block0"));
            for (int b = 1; b < cfg_.blocks_per_stage; ++b)
                s->add(std::make_unique<nn::ResidualBlock>(ch[i], ch[i], 1, rng,
                                                           pre + ".block" + std::to_string(b)));
            enc_.push_back(std::move(s));
        }
        // decoder, deepest first
        for (int i = K - 2; i >= 0; --i) {
            std::string pre = "dec" + std::to_string(i);
            auto up = std::make_unique<nn::Sequential>();
            up->add(std::make_unique<nn::Upsample2x>());
            up->add(std::make_unique<nn::Conv2d>(3, 3, ch[i + 1], ch[i], 1, nn::Pad::same, rng,
                                                 pre + ".up_conv"));
            up->add(std::make_unique<nn::BatchNorm>(ch[i], pre + ".up_bn"));
            up->add(std::make_unique<nn::ReLU>());
            up_.push_back(std::move(up));

            auto blocks = std::make_unique<nn::Sequential>();
            blocks->add(std::make_unique<nn::ResidualBlock>(2 * ch[i], ch[i], 1, rng,
                                                            pre + ".block0"));
            for (int b = 1; b < cfg_.blocks_per_stage; ++b)
                blocks->add(std::make_unique<nn::ResidualBlock>(ch[i], ch[i], 1, rng,
                                                                pre + ".block" + std::to_string(b)));
            dec_.push_back(std::move(blocks));
        }
        head_ = std::make_unique<nn::Conv2d>(1, 1, ch[0], cfg_.out_channels, 1, nn::Pad::same,
                                             rng, "head");
    }

    nn::Tensor forward(const nn::Tensor& x, bool train) override {
        skips_.clear();
        nn::Tensor t = x;
        for (size_t i = 0; i < enc_.size(); ++i) {
            t = enc_[i]->forward(t, train);
            if (i + 1 < enc_.size()) skips_.push_back(t);
        }
        skip_channels_.clear();
        for (size_t d = 0; d < up_.size(); ++d) {
            nn::Tensor u = up_[d]->forward(t, train);
            const nn::Tensor& skip = skips_[skips_.size() - 1 - d];
            skip_channels_.push_back({u.dim(3), skip.dim(3)});
            t = dec_[d]->forward(concat_channels(u, skip), train);
        }
        return head_->forward(t, train);
    }

    nn::Tensor backward(const nn::Tensor& dy) override {
        nn::Tensor g = head_->backward(dy);
        std::vector<nn::Tensor> skip_grads(skips_.size());
        for (size_t di = dec_.size(); di-- > 0;) {
            g = dec_[di]->backward(g);
            auto [cu, cs] = skip_channels_[di];
            auto [gu, gs] = split_channels(g, cu, cs);
            skip_grads[skips_.size() - 1 - di] = std::move(gs);
            g = up_[di]->backward(gu);
        }
        for (size_t i = enc_.size(); i-- > 1;) {
            g = enc_[i]->backward(g);
            nn::Tensor& sg = skip_grads[i - 1];
            for (size_t j = 0; j < g.size(); ++j) g[j] += sg[j];
        }
        return enc_[0]->backward(g);
    }

    nlohmann::json arch() const override { return cfg_.to_json(); }
    const UNetConfig& config() const { return cfg_; }

    /// Test hook: zero the d-th skip connection on the next forward pass.
    void ablate_skip(int d) { ablate_ = d; }

protected:
    void collect_params(std::vector<nn::Param*>& out) override {
        for (auto& s : enc_) s->collect(out);
        for (size_t d = 0; d < up_.size(); ++d) {
            up_[d]->collect(out);
            dec_[d]->collect(out);
        }
        head_->collect(out);
    }
    void collect_state(std::vector<std::pair<std::string, std::vector<float>*>>& out) override {
        for (auto& s : enc_) s->collect_state(out);
        for (size_t d = 0; d < up_.size(); ++d) {
            up_[d]->collect_state(out);
            dec_[d]->collect_state(out);
        }
    }

private:
    nn::Tensor concat_channels(const nn::Tensor& a, const nn::Tensor& b_in) {
        nn::Tensor b = b_in;
        if (ablate_ >= 0 && static_cast<size_t>(ablate_) == skip_channels_.size() - 1) b.zero();
        int N = a.dim(0), H = a.dim(1), W = a.dim(2), ca = a.dim(3), cb = b.dim(3);
        nn::Tensor y({N, H, W, ca + cb});
        size_t rows = static_cast<size_t>(N) * H * W;
        for (size_t r = 0; r < rows; ++r) {
            std::copy(&a.data[r * ca], &a.data[r * ca] + ca, &y.data[r * (ca + cb)]);
            std::copy(&b.data[r * cb], &b.data[r * cb] + cb, &y.data[r * (ca + cb) + ca]);
        }
        return y;
    }

    static std::pair<nn::Tensor, nn::Tensor> split_channels(const nn::Tensor& g, int ca, int cb) {
        int N = g.dim(0), H = g.dim(1), W = g.dim(2);
        nn::Tensor a({N, H, W, ca}), b({N, H, W, cb});
        size_t rows = static_cast<size_t>(N) * H * W;
        for (size_t r = 0; r < rows; ++r) {
            std::copy(&g.data[r * (ca + cb)], &g.data[r * (ca + cb)] + ca, &a.data[r * ca]);
            std::copy(&g.data[r * (ca + cb) + ca], &g.data[r * (ca + cb) + ca] + cb, &b.data[r * cb]);
        }
        return {std::move(a), std::move(b)};
    }

    UNetConfig cfg_;
    std::vector<std::unique_ptr<nn::Sequential>> enc_;
    std::vector<std::unique_ptr<nn::Sequential>> up_, dec_;
    std::unique_ptr<nn::Conv2d> head_;
    std::vector<nn::Tensor> skips_;
    std::vector<std::pair<int, int>> skip_channels_;
    int ablate_ = -1;
};

}  // namespace sstrec

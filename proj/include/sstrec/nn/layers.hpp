#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "sstrec/nn/tensor.hpp"

namespace sstrec::nn {

/// A differentiable layer. forward() caches whatever backward() needs;
/// backward() consumes the upstream gradient, accumulates parameter
/// gradients and returns the input gradient.
class Layer {
public:
    virtual ~Layer() = default;
    virtual Tensor forward(const Tensor& x, bool train) = 0;
    virtual Tensor backward(const Tensor& dy) = 0;
    virtual void collect(std::vector<Param*>& out) {}
    /// Non-trainable persistent state (e.g. batch-norm running stats).
    virtual void collect_state(std::vector<std::pair<std::string, std::vector<float>*>>& out) {}
};

enum class Pad { same, valid };

/// 2-D cross-correlation, NHWC in, kernel (kh, kw, cin, cout).
class Conv2d : public Layer {
public:
    Conv2d(int kh, int kw, int cin, int cout, int stride, Pad pad, std::mt19937_64& rng,
           std::string name = "conv")
        : kh_(kh), kw_(kw), cin_(cin), cout_(cout), stride_(stride), pad_(pad),
          weight_(name + ".weight", {kh, kw, cin, cout}), bias_(name + ".bias", {cout}) {
        init_fan_in(weight_.value, static_cast<size_t>(kh) * kw * cin, rng);
    }

    Tensor forward(const Tensor& x, bool) override {
        if (x.rank() != 4 || x.dim(3) != cin_) throw std::invalid_argument("Conv2d: channel mismatch");
        x_ = x;
        int N = x.dim(0), H = x.dim(1), W = x.dim(2);
        out_h_ = pad_ == Pad::same ? (H + stride_ - 1) / stride_ : (H - kh_) / stride_ + 1;
        out_w_ = pad_ == Pad::same ? (W + stride_ - 1) / stride_ : (W - kw_) / stride_ + 1;
        pad_top_ = pad_ == Pad::same ? std::max((out_h_ - 1) * stride_ + kh_ - H, 0) / 2 : 0;
        pad_left_ = pad_ == Pad::same ? std::max((out_w_ - 1) * stride_ + kw_ - W, 0) / 2 : 0;

        Tensor y({N, out_h_, out_w_, cout_});
        const float* wt = weight_.value.data.data();
        for (int n = 0; n < N; ++n)
            for (int oy = 0; oy < out_h_; ++oy)
                for (int ox = 0; ox < out_w_; ++ox) {
                    float* dst = &y.data[(((static_cast<size_t>(n) * out_h_ + oy) * out_w_) + ox) * cout_];
                    for (int co = 0; co < cout_; ++co) dst[co] = bias_.value[co];
                    for (int ky = 0; ky < kh_; ++ky) {
                        int iy = oy * stride_ + ky - pad_top_;
                        if (iy < 0 || iy >= H) continue;
                        for (int kx = 0; kx < kw_; ++kx) {
                            int ix = ox * stride_ + kx - pad_left_;
                            if (ix < 0 || ix >= W) continue;
                            const float* src = &x.data[(((static_cast<size_t>(n) * H + iy) * W) + ix) * cin_];
                            const float* wrow = &wt[((static_cast<size_t>(ky) * kw_ + kx) * cin_) * cout_];
                            for (int ci = 0; ci < cin_; ++ci) {
                                float a = src[ci];
                                const float* wr = &wrow[static_cast<size_t>(ci) * cout_];
                                for (int co = 0; co < cout_; ++co) dst[co] += a * wr[co];
                            }
                        }
                    }
                }
        return y;
    }

    Tensor backward(const Tensor& dy) override {
        int N = x_.dim(0), H = x_.dim(1), W = x_.dim(2);
        Tensor dx(x_.shape);
        float* dwt = weight_.grad.data.data();
        const float* wt = weight_.value.data.data();
        for (int n = 0; n < N; ++n)
            for (int oy = 0; oy < out_h_; ++oy)
                for (int ox = 0; ox < out_w_; ++ox) {
                    const float* g = &dy.data[(((static_cast<size_t>(n) * out_h_ + oy) * out_w_) + ox) * cout_];
                    for (int co = 0; co < cout_; ++co) bias_.grad[co] += g[co];
                    for (int ky = 0; ky < kh_; ++ky) {
                        int iy = oy * stride_ + ky - pad_top_;
                        if (iy < 0 || iy >= H) continue;
                        for (int kx = 0; kx < kw_; ++kx) {
                            int ix = ox * stride_ + kx - pad_left_;
                            if (ix < 0 || ix >= W) continue;
                            const float* src = &x_.data[(((static_cast<size_t>(n) * H + iy) * W) + ix) * cin_];
                            float* dsrc = &dx.data[(((static_cast<size_t>(n) * H + iy) * W) + ix) * cin_];
                            size_t wbase = (static_cast<size_t>(ky) * kw_ + kx) * cin_ * cout_;
                            for (int ci = 0; ci < cin_; ++ci) {
                                float a = src[ci];
                                float acc = 0;
                                const float* wr = &wt[wbase + static_cast<size_t>(ci) * cout_];
                                float* dwr = &dwt[wbase + static_cast<size_t>(ci) * cout_];
                                for (int co = 0; co < cout_; ++co) {
                                    dwr[co] += a * g[co];
                                    acc += wr[co] * g[co];
                                }
                                dsrc[ci] += acc;
                            }
                        }
                    }
                }
        return dx;
    }

    void collect(std::vector<Param*>& out) override {
        out.push_back(&weight_);
        out.push_back(&bias_);
    }

    Param& weight() { return weight_; }

private:
    int kh_, kw_, cin_, cout_, stride_;
    Pad pad_;
    Param weight_, bias_;
    Tensor x_;
    int out_h_ = 0, out_w_ = 0, pad_top_ = 0, pad_left_ = 0;
};

/// Per-channel batch statistics at train time, running averages for eval.
class BatchNorm : public Layer {
public:
    explicit BatchNorm(int channels, std::string name = "bn", double momentum = 0.1)
        : c_(channels), momentum_(momentum), name_(name),
          gamma_(name + ".gamma", {channels}), beta_(name + ".beta", {channels}),
          run_mean_(channels, 0.0f), run_var_(channels, 1.0f) {
        std::fill(gamma_.value.data.begin(), gamma_.value.data.end(), 1.0f);
    }

    Tensor forward(const Tensor& x, bool train) override {
        if (x.dim(x.rank() - 1) != c_) throw std::invalid_argument("BatchNorm: channel mismatch");
        size_t rows = x.size() / c_;
        xhat_ = Tensor(x.shape);
        inv_std_.assign(c_, 0.0f);
        std::vector<double> mean(c_, 0.0), var(c_, 0.0);
        if (train) {
            for (size_t r = 0; r < rows; ++r)
                for (int c = 0; c < c_; ++c) mean[c] += x.data[r * c_ + c];
            for (int c = 0; c < c_; ++c) mean[c] /= static_cast<double>(rows);
            for (size_t r = 0; r < rows; ++r)
                for (int c = 0; c < c_; ++c) {
                    double d = x.data[r * c_ + c] - mean[c];
                    var[c] += d * d;
                }
            for (int c = 0; c < c_; ++c) {
                var[c] /= static_cast<double>(rows);
                run_mean_[c] = static_cast<float>((1 - momentum_) * run_mean_[c] + momentum_ * mean[c]);
                run_var_[c] = static_cast<float>((1 - momentum_) * run_var_[c] + momentum_ * var[c]);
            }
        } else {
            for (int c = 0; c < c_; ++c) {
                mean[c] = run_mean_[c];
                var[c] = run_var_[c];
            }
        }
        for (int c = 0; c < c_; ++c) inv_std_[c] = static_cast<float>(1.0 / std::sqrt(var[c] + 1e-5));
        Tensor y(x.shape);
        for (size_t r = 0; r < rows; ++r)
            for (int c = 0; c < c_; ++c) {
                float xh = (x.data[r * c_ + c] - static_cast<float>(mean[c])) * inv_std_[c];
                xhat_.data[r * c_ + c] = xh;
                y.data[r * c_ + c] = gamma_.value[c] * xh + beta_.value[c];
            }
        train_ = train;
        return y;
    }

    Tensor backward(const Tensor& dy) override {
        size_t rows = dy.size() / c_;
        Tensor dx(dy.shape);
        if (!train_) {
            for (size_t r = 0; r < rows; ++r)
                for (int c = 0; c < c_; ++c) {
                    float g = dy.data[r * c_ + c];
                    gamma_.grad[c] += g * xhat_.data[r * c_ + c];
                    beta_.grad[c] += g;
                    dx.data[r * c_ + c] = g * gamma_.value[c] * inv_std_[c];
                }
            return dx;
        }
        std::vector<double> sum_dy(c_, 0.0), sum_dy_xhat(c_, 0.0);
        for (size_t r = 0; r < rows; ++r)
            for (int c = 0; c < c_; ++c) {
                float g = dy.data[r * c_ + c];
                sum_dy[c] += g;
                sum_dy_xhat[c] += g * xhat_.data[r * c_ + c];
                gamma_.grad[c] += g * xhat_.data[r * c_ + c];
                beta_.grad[c] += g;
            }
        double inv_rows = 1.0 / static_cast<double>(rows);
        for (size_t r = 0; r < rows; ++r)
            for (int c = 0; c < c_; ++c) {
                double g = dy.data[r * c_ + c];
                double term = g - sum_dy[c] * inv_rows - xhat_.data[r * c_ + c] * sum_dy_xhat[c] * inv_rows;
                dx.data[r * c_ + c] = static_cast<float>(gamma_.value[c] * inv_std_[c] * term);
            }
        return dx;
    }

    void collect(std::vector<Param*>& out) override {
        out.push_back(&gamma_);
        out.push_back(&beta_);
    }

    void collect_state(std::vector<std::pair<std::string, std::vector<float>*>>& out) override {
        out.emplace_back(name_ + ".run_mean", &run_mean_);
        out.emplace_back(name_ + ".run_var", &run_var_);
    }

    std::vector<float>& running_mean() { return run_mean_; }
    std::vector<float>& running_var() { return run_var_; }

private:
    int c_;
    double momentum_;
    std::string name_;
    Param gamma_, beta_;
    std::vector<float> run_mean_, run_var_;
    Tensor xhat_;
    std::vector<float> inv_std_;
    bool train_ = false;
};

class ReLU : public Layer {
public:
    Tensor forward(const Tensor& x, bool) override {
        x_ = x;
        Tensor y(x.shape);
        for (size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0 ? x[i] : 0.0f;
        return y;
    }
    Tensor backward(const Tensor& dy) override {
        Tensor dx(dy.shape);
        for (size_t i = 0; i < dy.size(); ++i) dx[i] = x_[i] > 0 ? dy[i] : 0.0f;
        return dx;
    }

private:
    Tensor x_;
};

/// tanh-approximation GELU.
class GELU : public Layer {
public:
    Tensor forward(const Tensor& x, bool) override {
        x_ = x;
        Tensor y(x.shape);
        for (size_t i = 0; i < x.size(); ++i) y[i] = gelu(x[i]);
        return y;
    }
    Tensor backward(const Tensor& dy) override {
        Tensor dx(dy.shape);
        for (size_t i = 0; i < dy.size(); ++i) dx[i] = dy[i] * dgelu(x_[i]);
        return dx;
    }

    static float gelu(float x) {
        const float c = 0.7978845608f;  // sqrt(2/pi)
        float t = std::tanh(c * (x + 0.044715f * x * x * x));
        return 0.5f * x * (1.0f + t);
    }
    static float dgelu(float x) {
        const float c = 0.7978845608f;
        float u = c * (x + 0.044715f * x * x * x);
        float t = std::tanh(u);
        float du = c * (1.0f + 3.0f * 0.044715f * x * x);
        return 0.5f * (1.0f + t) + 0.5f * x * (1.0f - t * t) * du;
    }

private:
    Tensor x_;
};

/// Affine map over the last dimension.
class Linear : public Layer {
public:
    Linear(int din, int dout, std::mt19937_64& rng, std::string name = "linear")
        : din_(din), dout_(dout),
          weight_(name + ".weight", {din, dout}), bias_(name + ".bias", {dout}) {
        init_fan_in(weight_.value, din, rng);
    }

    Tensor forward(const Tensor& x, bool) override {
        if (x.dim(x.rank() - 1) != din_) throw std::invalid_argument("Linear: dim mismatch");
        x_ = x;
        auto shape = x.shape;
        shape.back() = dout_;
        Tensor y(shape);
        size_t rows = x.size() / din_;
        for (size_t r = 0; r < rows; ++r) {
            float* dst = &y.data[r * dout_];
            for (int o = 0; o < dout_; ++o) dst[o] = bias_.value[o];
            const float* src = &x.data[r * din_];
            for (int i = 0; i < din_; ++i) {
                float a = src[i];
                const float* wr = &weight_.value.data[static_cast<size_t>(i) * dout_];
                for (int o = 0; o < dout_; ++o) dst[o] += a * wr[o];
            }
        }
        return y;
    }

    Tensor backward(const Tensor& dy) override {
        Tensor dx(x_.shape);
        size_t rows = x_.size() / din_;
        for (size_t r = 0; r < rows; ++r) {
            const float* g = &dy.data[r * dout_];
            const float* src = &x_.data[r * din_];
            float* dsrc = &dx.data[r * din_];
            for (int o = 0; o < dout_; ++o) bias_.grad[o] += g[o];
            for (int i = 0; i < din_; ++i) {
                const float* wr = &weight_.value.data[static_cast<size_t>(i) * dout_];
                float* dwr = &weight_.grad.data[static_cast<size_t>(i) * dout_];
                float a = src[i], acc = 0;
                for (int o = 0; o < dout_; ++o) {
                    dwr[o] += a * g[o];
                    acc += wr[o] * g[o];
                }
                dsrc[i] = acc;
            }
        }
        return dx;
    }

    void collect(std::vector<Param*>& out) override {
        out.push_back(&weight_);
        out.push_back(&bias_);
    }

private:
    int din_, dout_;
    Param weight_, bias_;
    Tensor x_;
};

/// Normalization over the last dimension (transformer blocks).
class LayerNorm : public Layer {
public:
    explicit LayerNorm(int d, std::string name = "ln")
        : d_(d), gamma_(name + ".gamma", {d}), beta_(name + ".beta", {d}) {
        std::fill(gamma_.value.data.begin(), gamma_.value.data.end(), 1.0f);
    }

    Tensor forward(const Tensor& x, bool) override {
        xhat_ = Tensor(x.shape);
        size_t rows = x.size() / d_;
        inv_std_.assign(rows, 0.0f);
        Tensor y(x.shape);
        for (size_t r = 0; r < rows; ++r) {
            const float* src = &x.data[r * d_];
            double mean = 0;
            for (int i = 0; i < d_; ++i) mean += src[i];
            mean /= d_;
            double var = 0;
            for (int i = 0; i < d_; ++i) var += (src[i] - mean) * (src[i] - mean);
            var /= d_;
            float inv = static_cast<float>(1.0 / std::sqrt(var + 1e-5));
            inv_std_[r] = inv;
            for (int i = 0; i < d_; ++i) {
                float xh = (src[i] - static_cast<float>(mean)) * inv;
                xhat_.data[r * d_ + i] = xh;
                y.data[r * d_ + i] = gamma_.value[i] * xh + beta_.value[i];
            }
        }
        return y;
    }

    Tensor backward(const Tensor& dy) override {
        size_t rows = dy.size() / d_;
        Tensor dx(dy.shape);
        for (size_t r = 0; r < rows; ++r) {
            const float* g = &dy.data[r * d_];
            const float* xh = &xhat_.data[r * d_];
            double sum_g = 0, sum_gx = 0;
            for (int i = 0; i < d_; ++i) {
                double gg = static_cast<double>(g[i]) * gamma_.value[i];
                sum_g += gg;
                sum_gx += gg * xh[i];
                gamma_.grad[i] += g[i] * xh[i];
                beta_.grad[i] += g[i];
            }
            for (int i = 0; i < d_; ++i) {
                double gg = static_cast<double>(g[i]) * gamma_.value[i];
                dx.data[r * d_ + i] = static_cast<float>(
                    inv_std_[r] * (gg - sum_g / d_ - xh[i] * sum_gx / d_));
            }
        }
        return dx;
    }

    void collect(std::vector<Param*>& out) override {
        out.push_back(&gamma_);
        out.push_back(&beta_);
    }

private:
    int d_;
    Param gamma_, beta_;
    Tensor xhat_;
    std::vector<float> inv_std_;
};

/// Nearest-neighbor 2x upsampling, NHWC.
class Upsample2x : public Layer {
public:
    Tensor forward(const Tensor& x, bool) override {
        in_shape_ = x.shape;
        int N = x.dim(0), H = x.dim(1), W = x.dim(2), C = x.dim(3);
        Tensor y({N, 2 * H, 2 * W, C});
        for (int n = 0; n < N; ++n)
            for (int yy = 0; yy < 2 * H; ++yy)
                for (int xx = 0; xx < 2 * W; ++xx) {
                    const float* src = &x.data[(((static_cast<size_t>(n) * H + yy / 2) * W) + xx / 2) * C];
                    float* dst = &y.data[(((static_cast<size_t>(n) * 2 * H + yy) * 2 * W) + xx) * C];
                    std::copy(src, src + C, dst);
                }
        return y;
    }

    Tensor backward(const Tensor& dy) override {
        int N = in_shape_[0], H = in_shape_[1], W = in_shape_[2], C = in_shape_[3];
        Tensor dx(in_shape_);
        for (int n = 0; n < N; ++n)
            for (int yy = 0; yy < 2 * H; ++yy)
                for (int xx = 0; xx < 2 * W; ++xx) {
                    const float* g = &dy.data[(((static_cast<size_t>(n) * 2 * H + yy) * 2 * W) + xx) * C];
                    float* dst = &dx.data[(((static_cast<size_t>(n) * H + yy / 2) * W) + xx / 2) * C];
                    for (int c = 0; c < C; ++c) dst[c] += g[c];
                }
        return dx;
    }

private:
    std::vector<int> in_shape_;
};

/// Layers applied in order.
class Sequential : public Layer {
public:
    Sequential() = default;

    void add(std::unique_ptr<Layer> l) { layers_.push_back(std::move(l)); }
    bool empty() const { return layers_.empty(); }

    Tensor forward(const Tensor& x, bool train) override {
        Tensor t = x;
        for (auto& l : layers_) t = l->forward(t, train);
        return t;
    }

    Tensor backward(const Tensor& dy) override {
        Tensor g = dy;
        for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
        return g;
    }

    void collect(std::vector<Param*>& out) override {
        for (auto& l : layers_) l->collect(out);
    }

    void collect_state(std::vector<std::pair<std::string, std::vector<float>*>>& out) override {
        for (auto& l : layers_) l->collect_state(out);
    }

private:
    std::vector<std::unique_ptr<Layer>> layers_;
};

/// Two 3x3 convs with normalization and activation plus an identity
/// shortcut; 1x1 projection when channels or stride change.
class ResidualBlock : public Layer {
public:
    ResidualBlock(int cin, int cout, int stride, std::mt19937_64& rng, std::string name = "res")
        : conv1_(3, 3, cin, cout, stride, Pad::same, rng, name + ".conv1"),
          bn1_(cout, name + ".bn1"),
          conv2_(3, 3, cout, cout, 1, Pad::same, rng, name + ".conv2"),
          bn2_(cout, name + ".bn2") {
        if (cin != cout || stride != 1) {
            proj_ = std::make_unique<Conv2d>(1, 1, cin, cout, stride, Pad::same, rng, name + ".proj");
            proj_bn_ = std::make_unique<BatchNorm>(cout, name + ".proj_bn");
        }
    }

    Tensor forward(const Tensor& x, bool train) override {
        Tensor main = bn2_.forward(conv2_.forward(
            relu1_.forward(bn1_.forward(conv1_.forward(x, train), train), train), train), train);
        Tensor shortcut = proj_ ? proj_bn_->forward(proj_->forward(x, train), train) : x;
        Tensor sum(main.shape);
        for (size_t i = 0; i < sum.size(); ++i) sum[i] = main[i] + shortcut[i];
        return relu_out_.forward(sum, train);
    }

    Tensor backward(const Tensor& dy) override {
        Tensor dsum = relu_out_.backward(dy);
        Tensor dmain = conv1_.backward(bn1_.backward(relu1_.backward(
            conv2_.backward(bn2_.backward(dsum)))));
        Tensor dshort = proj_ ? proj_->backward(proj_bn_->backward(dsum)) : dsum;
        Tensor dx(dmain.shape);
        for (size_t i = 0; i < dx.size(); ++i) dx[i] = dmain[i] + dshort[i];
        return dx;
    }

    void collect(std::vector<Param*>& out) override {
        conv1_.collect(out);
        bn1_.collect(out);
        conv2_.collect(out);
        bn2_.collect(out);
        if (proj_) {
            proj_->collect(out);
            proj_bn_->collect(out);
        }
    }

    void collect_state(std::vector<std::pair<std::string, std::vector<float>*>>& out) override {
        bn1_.collect_state(out);
        bn2_.collect_state(out);
        if (proj_bn_) proj_bn_->collect_state(out);
    }

private:
    Conv2d conv1_;
    BatchNorm bn1_;
    ReLU relu1_;
    Conv2d conv2_;
    BatchNorm bn2_;
    ReLU relu_out_;
    std::unique_ptr<Conv2d> proj_;
    std::unique_ptr<BatchNorm> proj_bn_;
};

}  // namespace sstrec::nn

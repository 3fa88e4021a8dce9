#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "sstrec/nn/attention.hpp"
#include "sstrec/nn/layers.hpp"
#include "sstrec/nn/optim.hpp"

using namespace sstrec::nn;

namespace {

Tensor random_tensor(std::vector<int> shape, std::mt19937_64& rng, float scale = 1.0f) {
    Tensor t(std::move(shape));
    std::normal_distribution<float> g(0.0f, scale);
    for (auto& v : t.data) v = g(rng);
    return t;
}

// Scalar objective: weighted sum of the layer output with fixed random
// weights, so d(loss)/d(output) is just the weight tensor.
double loss_of(Layer& l, const Tensor& x, const Tensor& w, bool train) {
    Tensor y = l.forward(x, train);
    REQUIRE(y.size() == w.size());
    double s = 0;
    for (size_t i = 0; i < y.size(); ++i) s += static_cast<double>(y[i]) * w[i];
    return s;
}

bool close_enough(double analytic, double numeric, double tol_abs, double tol_rel) {
    double err = std::abs(analytic - numeric);
    return err <= tol_abs + tol_rel * std::max(std::abs(analytic), std::abs(numeric));
}

/// Central-difference check of input and parameter gradients against
/// backward(). Checks a strided subset of coordinates to stay fast.
/// allowed_outliers tolerates isolated ReLU-kink coordinates where the
/// finite difference itself is wrong.
void grad_check(Layer& l, Tensor x, bool train = true, float eps = 1e-2f,
                double tol_abs = 2e-3, double tol_rel = 2e-2, int allowed_outliers = 0) {
    std::mt19937_64 rng(40);
    Tensor probe = l.forward(x, train);
    Tensor w = random_tensor(probe.shape, rng);

    std::vector<Param*> params;
    l.collect(params);
    zero_grads(params);
    l.forward(x, train);
    Tensor dx = l.backward(w);
    REQUIRE(dx.same_shape(x));

    int outliers = 0, checked = 0;
    auto compare = [&](double analytic, double numeric) {
        ++checked;
        if (!close_enough(analytic, numeric, tol_abs, tol_rel)) {
            ++outliers;
            if (outliers > allowed_outliers) {
                CAPTURE(analytic, numeric, outliers, allowed_outliers);
                FAIL("gradient mismatch");
            }
        }
    };
    size_t stride_x = std::max<size_t>(1, x.size() / 23);
    for (size_t i = 0; i < x.size(); i += stride_x) {
        float keep = x[i];
        x[i] = keep + eps;
        double up = loss_of(l, x, w, train);
        x[i] = keep - eps;
        double dn = loss_of(l, x, w, train);
        x[i] = keep;
        compare(dx[i], (up - dn) / (2.0 * eps));
    }
    for (auto* p : params) {
        size_t stride_p = std::max<size_t>(1, p->value.size() / 17);
        for (size_t i = 0; i < p->value.size(); i += stride_p) {
            float keep = p->value[i];
            p->value[i] = keep + eps;
            double up = loss_of(l, x, w, train);
            p->value[i] = keep - eps;
            double dn = loss_of(l, x, w, train);
            p->value[i] = keep;
            compare(p->grad[i], (up - dn) / (2.0 * eps));
        }
    }
    CHECK(checked > 10);
}

}  // namespace

TEST_CASE("conv2d forward matches a direct cross-correlation") {
    std::mt19937_64 rng(1);
    Conv2d conv(3, 3, 2, 3, 1, Pad::same, rng);
    Tensor x = random_tensor({2, 5, 6, 2}, rng);
    Tensor y = conv.forward(x, true);
    REQUIRE(y.shape == std::vector<int>({2, 5, 6, 3}));

    std::vector<Param*> ps;
    conv.collect(ps);
    const Tensor& wt = ps[0]->value;   // (kh, kw, cin, cout)
    const Tensor& bias = ps[1]->value;
    for (int n = 0; n < 2; ++n)
        for (int oy = 0; oy < 5; ++oy)
            for (int ox = 0; ox < 6; ++ox)
                for (int co = 0; co < 3; ++co) {
                    double want = bias[co];
                    for (int ky = 0; ky < 3; ++ky)
                        for (int kx = 0; kx < 3; ++kx) {
                            int iy = oy + ky - 1, ix = ox + kx - 1;
                            if (iy < 0 || iy >= 5 || ix < 0 || ix >= 6) continue;
                            for (int ci = 0; ci < 2; ++ci)
                                want += x.data[(((size_t(n) * 5 + iy) * 6) + ix) * 2 + ci] *
                                        wt.data[(((size_t(ky) * 3 + kx) * 2) + ci) * 3 + co];
                        }
                    double got = y.data[(((size_t(n) * 5 + oy) * 6) + ox) * 3 + co];
                    REQUIRE(got == Catch::Approx(want).margin(1e-4));
                }
}

TEST_CASE("conv2d gradients (same and valid, stride 1 and 2)") {
    std::mt19937_64 rng(2);
    {
        Conv2d c(3, 3, 2, 3, 1, Pad::same, rng);
        grad_check(c, random_tensor({2, 6, 5, 2}, rng));
    }
    {
        Conv2d c(3, 3, 2, 4, 2, Pad::same, rng);
        grad_check(c, random_tensor({1, 8, 8, 2}, rng));
    }
    {
        Conv2d c(4, 4, 3, 2, 4, Pad::valid, rng);
        grad_check(c, random_tensor({1, 8, 8, 3}, rng));
    }
}

TEST_CASE("batchnorm normalizes in train mode and gradients check out") {
    std::mt19937_64 rng(3);
    BatchNorm bn(4);
    Tensor x = random_tensor({3, 4, 4, 4}, rng, 2.0f);
    for (auto& v : x.data) v += 1.5f;  // non-zero mean input
    Tensor y = bn.forward(x, true);
    size_t rows = y.size() / 4;
    for (int c = 0; c < 4; ++c) {
        double mean = 0, var = 0;
        for (size_t r = 0; r < rows; ++r) mean += y.data[r * 4 + c];
        mean /= rows;
        for (size_t r = 0; r < rows; ++r) {
            double d = y.data[r * 4 + c] - mean;
            var += d * d;
        }
        var /= rows;
        CHECK(mean == Catch::Approx(0.0).margin(1e-4));
        CHECK(var == Catch::Approx(1.0).margin(1e-2));
    }
    BatchNorm bn2(3);
    grad_check(bn2, random_tensor({2, 3, 3, 3}, rng), true, 1e-2f, 5e-3, 3e-2);
}

TEST_CASE("batchnorm eval mode uses running statistics") {
    std::mt19937_64 rng(4);
    BatchNorm bn(2);
    // train on shifted data so the running stats move off the initial (0, 1)
    for (int step = 0; step < 200; ++step) {
        Tensor x = random_tensor({4, 2, 2, 2}, rng);
        for (size_t i = 0; i < x.size(); i += 2) x[i] = x[i] * 3.0f + 5.0f;
        bn.forward(x, true);
    }
    CHECK(bn.running_mean()[0] == Catch::Approx(5.0).margin(0.3));
    CHECK(bn.running_var()[0] == Catch::Approx(9.0).margin(1.5));
    CHECK(bn.running_mean()[1] == Catch::Approx(0.0).margin(0.3));
    // eval: a constant input maps through the running stats, not batch stats
    Tensor probe({1, 1, 1, 2});
    probe[0] = 5.0f;
    probe[1] = 0.0f;
    Tensor out = bn.forward(probe, false);
    CHECK(out[0] == Catch::Approx(0.0).margin(0.15));
    CHECK(out[1] == Catch::Approx(0.0).margin(0.15));
}

TEST_CASE("activation gradients and GELU values") {
    std::mt19937_64 rng(5);
    ReLU relu;
    Tensor rx = random_tensor({40}, rng);
    for (auto& v : rx.data)  // keep inputs away from the kink at 0
        if (std::abs(v) < 0.05f) v = v < 0 ? -0.05f : 0.05f;
    grad_check(relu, rx);
    GELU gelu;
    grad_check(gelu, random_tensor({40}, rng), true, 1e-3f, 1e-4, 1e-2);
    CHECK(GELU::gelu(0.0f) == Catch::Approx(0.0));
    CHECK(GELU::gelu(10.0f) == Catch::Approx(10.0).margin(1e-3));
    CHECK(GELU::gelu(-10.0f) == Catch::Approx(0.0).margin(1e-3));
    CHECK(GELU::gelu(1.0f) == Catch::Approx(0.8412).margin(1e-3));
}

TEST_CASE("linear and layernorm gradients") {
    std::mt19937_64 rng(6);
    Linear lin(5, 7, rng);
    grad_check(lin, random_tensor({3, 4, 5}, rng));
    LayerNorm ln(6);
    grad_check(ln, random_tensor({4, 6}, rng), true, 1e-2f, 5e-3, 3e-2);
}

TEST_CASE("upsample2x repeats pixels and routes gradients back") {
    std::mt19937_64 rng(7);
    Upsample2x up;
    Tensor x = random_tensor({1, 2, 3, 2}, rng);
    Tensor y = up.forward(x, true);
    REQUIRE(y.shape == std::vector<int>({1, 4, 6, 2}));
    for (int yy = 0; yy < 4; ++yy)
        for (int xx = 0; xx < 6; ++xx)
            for (int c = 0; c < 2; ++c)
                CHECK(y.data[(size_t(yy) * 6 + xx) * 2 + c] ==
                      x.data[(size_t(yy / 2) * 3 + xx / 2) * 2 + c]);
    grad_check(up, x);
}

TEST_CASE("residual block, attention and transformer block gradients") {
    std::mt19937_64 rng(8);
    {
        ResidualBlock rb(3, 3, 1, rng);  // identity shortcut
        grad_check(rb, random_tensor({2, 4, 4, 3}, rng), true, 3e-3f, 2e-2, 5e-2, 10);
    }
    {
        ResidualBlock rb(2, 4, 2, rng);  // projection shortcut
        grad_check(rb, random_tensor({2, 6, 6, 2}, rng), true, 3e-3f, 2e-2, 5e-2, 10);
    }
    {
        MultiHeadAttention mha(8, 2, rng);
        grad_check(mha, random_tensor({2, 5, 8}, rng), true, 1e-2f, 4e-3, 3e-2);
    }
    {
        TransformerBlock blk(8, 2, 2, rng);
        grad_check(blk, random_tensor({1, 4, 8}, rng), true, 1e-2f, 8e-3, 4e-2);
    }
}

TEST_CASE("attention rows are a probability distribution") {
    std::mt19937_64 rng(9);
    MultiHeadAttention mha(8, 2, rng);
    Tensor x = random_tensor({2, 6, 8}, rng);
    mha.forward(x, false);
    const Tensor& a = mha.attention();
    REQUIRE(a.shape == std::vector<int>({2, 2, 6, 6}));
    for (size_t row = 0; row < a.size() / 6; ++row) {
        double s = 0;
        for (int u = 0; u < 6; ++u) {
            float v = a.data[row * 6 + u];
            CHECK(v >= 0.0f);
            s += v;
        }
        CHECK(s == Catch::Approx(1.0).margin(1e-4));
    }
}

TEST_CASE("AdamW follows a hand-computed trajectory") {
    // single scalar parameter with constant gradient g: the first-step update
    // is -lr * (g/|g| + wd*p) thanks to bias correction.
    Param p("w", {1});
    p.value[0] = 1.0f;
    std::vector<Param*> ps = {&p};
    AdamWState st;
    st.lr = 0.1;
    st.beta1 = 0.9;
    st.beta2 = 0.999;
    st.eps = 0.0;
    st.weight_decay = 0.5;

    // independent oracle in double precision
    double w = 1.0, m = 0, v = 0;
    const double g = 3.0;
    for (int step = 1; step <= 5; ++step) {
        p.zero_grad();
        p.grad[0] = static_cast<float>(g);
        adamw_step(ps, st);
        m = 0.9 * m + 0.1 * g;
        v = 0.999 * v + 0.001 * g * g;
        double mh = m / (1.0 - std::pow(0.9, step));
        double vh = v / (1.0 - std::pow(0.999, step));
        w -= 0.1 * (mh / std::sqrt(vh) + 0.5 * w);
        CHECK(p.value[0] == Catch::Approx(w).margin(1e-5));
    }
    // weight decay is decoupled: with zero gradient the parameter shrinks
    Param q("q", {1});
    q.value[0] = 2.0f;
    std::vector<Param*> qs = {&q};
    AdamWState st2;
    st2.lr = 0.1;
    st2.weight_decay = 0.1;
    q.grad[0] = 0.0f;
    adamw_step(qs, st2);
    CHECK(q.value[0] == Catch::Approx(2.0 * (1.0 - 0.1 * 0.1)).margin(1e-6));

    AdamWState bad;
    bad.lr = -1;
    CHECK_THROWS_AS(adamw_step(qs, bad), std::invalid_argument);
}

TEST_CASE("AdamW reduces loss on a tiny least-squares problem") {
    std::mt19937_64 rng(10);
    Linear lin(4, 1, rng);
    std::vector<Param*> ps;
    lin.collect(ps);
    AdamWState st;
    st.lr = 0.05;
    st.weight_decay = 0.0;
    Tensor X = random_tensor({64, 4}, rng);
    Tensor t({64, 1});
    for (int r = 0; r < 64; ++r)
        t[r] = 2.0f * X.data[r * 4] - 1.0f * X.data[r * 4 + 2] + 0.5f;
    auto mse = [&] {
        Tensor y = lin.forward(X, true);
        double s = 0;
        for (int r = 0; r < 64; ++r) s += (y[r] - t[r]) * (y[r] - t[r]);
        return s / 64;
    };
    double first = mse();
    for (int it = 0; it < 300; ++it) {
        zero_grads(ps);
        Tensor y = lin.forward(X, true);
        Tensor dy({64, 1});
        for (int r = 0; r < 64; ++r) dy[r] = 2.0f * (y[r] - t[r]) / 64.0f;
        lin.backward(dy);
        adamw_step(ps, st);
    }
    CHECK(mse() < 0.01 * first);
}

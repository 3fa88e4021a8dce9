#pragma once

#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace sstrec::nn {

/// Dense float32 tensor, channel-last layout for images (N, H, W, C).
struct Tensor {
    std::vector<int> shape;
    std::vector<float> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> s) : shape(std::move(s)), data(numel(shape), 0.0f) {}

    static size_t numel(const std::vector<int>& s) {
        size_t n = 1;
        for (int d : s) {
            if (d <= 0) throw std::invalid_argument("Tensor: non-positive dim");
            n *= static_cast<size_t>(d);
        }
        return n;
    }

    size_t size() const { return data.size(); }
    int dim(int i) const { return shape[i]; }
    int rank() const { return static_cast<int>(shape.size()); }

    float& operator[](size_t i) { return data[i]; }
    const float& operator[](size_t i) const { return data[i]; }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    void zero() { std::fill(data.begin(), data.end(), 0.0f); }
};

/// Named parameter with its gradient accumulator.
struct Param {
    std::string name;
    Tensor value;
    Tensor grad;

    Param() = default;
    Param(std::string n, std::vector<int> shape)
        : name(std::move(n)), value(shape), grad(std::move(shape)) {}

    void zero_grad() { grad.zero(); }
};

/// Fan-in-scaled uniform init, U(-sqrt(6/fan_in), +sqrt(6/fan_in)).
inline void init_fan_in(Tensor& t, size_t fan_in, std::mt19937_64& rng) {
    float bound = std::sqrt(6.0f / static_cast<float>(fan_in));
    std::uniform_real_distribution<float> u(-bound, bound);
    for (auto& v : t.data) v = u(rng);
}

}  // namespace sstrec::nn

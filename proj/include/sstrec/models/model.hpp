#pragma once

#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "sstrec/nn/checkpoint.hpp"
#include "sstrec/nn/layers.hpp"

namespace sstrec {

/// A reconstructor: maps an (N, H, W, 2s+1) input stack to an (N, H, W, 1)
/// normalized output raster.
class Model {
public:
    virtual ~Model() = default;
    virtual nn::Tensor forward(const nn::Tensor& x, bool train) = 0;
    virtual nn::Tensor backward(const nn::Tensor& dy) = 0;
    virtual nlohmann::json arch() const = 0;

    std::vector<nn::Param*>& params() {
        if (params_.empty()) collect_params(params_);
        return params_;
    }

    nn::StateBuffers state() {
        nn::StateBuffers s;
        collect_state(s.entries);
        return s;
    }

    size_t param_count() {
        size_t n = 0;
        for (auto* p : params()) n += p->value.size();
        return n;
    }

protected:
    virtual void collect_params(std::vector<nn::Param*>& out) = 0;
    virtual void collect_state(
        std::vector<std::pair<std::string, std::vector<float>*>>& out) = 0;

private:
    std::vector<nn::Param*> params_;
};

/// Deterministic eval-mode prediction.
inline nn::Tensor predict(Model& model, const nn::Tensor& batch_x) {
    return model.forward(batch_x, false);
}

inline void model_save(Model& model, const std::string& path,
                       nlohmann::json extra = nlohmann::json::object()) {
    nlohmann::json manifest = {{"arch", model.arch()}, {"extra", extra}};
    nn::StateBuffers state = model.state();
    nn::checkpoint_save(path, manifest, model.params(), state);
}

inline nlohmann::json model_load_into(Model& model, const std::string& path) {
    nn::StateBuffers state = model.state();
    return nn::checkpoint_load(path, model.params(), state);
}

}  // namespace sstrec

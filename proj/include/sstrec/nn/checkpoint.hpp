#pragma once

#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "sstrec/nn/tensor.hpp"

namespace sstrec::nn {

/// Checkpoint file: one JSON header line
/// {"manifest": {...}, "tensors": [{"name","shape","offset"}...]}
/// followed by the concatenated little-endian float32 payloads. Named state
/// buffers (running stats) are stored alongside parameters with shape [len].
struct StateBuffers {
    std::vector<std::pair<std::string, std::vector<float>*>> entries;
};

inline void checkpoint_save(const std::string& path, const nlohmann::json& manifest,
                            const std::vector<Param*>& params, const StateBuffers& state = {}) {
    nlohmann::json tensors = nlohmann::json::array();
    size_t offset = 0;
    auto add = [&](const std::string& name, const std::vector<int>& shape, size_t n) {
        tensors.push_back({{"name", name}, {"shape", shape}, {"offset", offset}});
        offset += n * sizeof(float);
    };
    for (const auto* p : params) add(p->name, p->value.shape, p->value.size());
    for (const auto& [name, buf] : state.entries)
        add(name, {static_cast<int>(buf->size())}, buf->size());

    nlohmann::json hdr = {{"manifest", manifest}, {"tensors", tensors}};
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("checkpoint_save: cannot open " + path);
    out << hdr.dump() << '\n';
    for (const auto* p : params)
        out.write(reinterpret_cast<const char*>(p->value.data.data()),
                  static_cast<std::streamsize>(p->value.size() * sizeof(float)));
    for (const auto& [name, buf] : state.entries)
        out.write(reinterpret_cast<const char*>(buf->data()),
                  static_cast<std::streamsize>(buf->size() * sizeof(float)));
    if (!out) throw std::runtime_error("checkpoint_save: write failed " + path);
}

inline nlohmann::json checkpoint_manifest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
    std::string line;
    std::getline(in, line);
    return nlohmann::json::parse(line).at("manifest");
}

/// Loads by name into existing tensors; every target must be present with a
/// matching element count, extra file tensors are an error to ignore silently
/// only when allow_extra is set.
inline nlohmann::json checkpoint_load(const std::string& path, std::vector<Param*>& params,
                                      const StateBuffers& state = {}) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("checkpoint_load: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("checkpoint_load: missing header");
    auto hdr = nlohmann::json::parse(line);
    std::streampos payload_start = in.tellg();

    struct Entry {
        size_t offset;
        size_t count;
    };
    std::map<std::string, Entry> index;
    for (const auto& t : hdr.at("tensors")) {
        size_t n = 1;
        for (int d : t.at("shape").get<std::vector<int>>()) n *= static_cast<size_t>(d);
        index[t.at("name")] = {t.at("offset").get<size_t>(), n};
    }
    auto read_into = [&](const std::string& name, float* dst, size_t count) {
        auto it = index.find(name);
        if (it == index.end()) throw std::runtime_error("checkpoint_load: missing tensor " + name);
        if (it->second.count != count)
            throw std::runtime_error("checkpoint_load: size mismatch for " + name);
        in.clear();
        in.seekg(payload_start + static_cast<std::streamoff>(it->second.offset));
        in.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(count * sizeof(float)));
        if (!in) throw std::runtime_error("checkpoint_load: truncated tensor " + name);
    };
    for (auto* p : params) read_into(p->name, p->value.data.data(), p->value.size());
    for (const auto& [name, buf] : state.entries) read_into(name, buf->data(), buf->size());
    return hdr.at("manifest");
}

}  // namespace sstrec::nn

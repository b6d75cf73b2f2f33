#include "esfp/params.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace esfp::ad {

Value ParameterStore::add(const std::string& name, Tensor init) {
    if (index_.count(name)) throw std::invalid_argument("ParameterStore: duplicate name " + name);
    Parameter p;
    p.name = name;
    Value v = Value::leaf(std::move(init));
    p.node = v.node();
    p.m = Tensor(p.node->value.shape());
    p.v = Tensor(p.node->value.shape());
    index_[name] = params_.size();
    params_.push_back(std::move(p));
    return v;
}

Parameter& ParameterStore::at(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("ParameterStore: no parameter " + name);
    return params_[it->second];
}

const Parameter& ParameterStore::at(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("ParameterStore: no parameter " + name);
    return params_[it->second];
}

std::vector<NodePtr> ParameterStore::nodes() const {
    std::vector<NodePtr> out;
    out.reserve(params_.size());
    for (const auto& p : params_) out.push_back(p.node);
    return out;
}

std::size_t ParameterStore::total_size() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.node->value.size();
    return n;
}

void ParameterStore::zero_grads() {
    for (auto& p : params_) p.node->grad = Tensor(p.node->value.shape());
}

namespace {

static_assert(sizeof(double) == 8);

void write_f64le(std::ofstream& os, const double* data, std::size_t n) {
    if constexpr (std::endian::native == std::endian::little) {
        os.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n * 8));
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            char buf[8];
            std::memcpy(buf, &data[i], 8);
            std::swap(buf[0], buf[7]);
            std::swap(buf[1], buf[6]);
            std::swap(buf[2], buf[5]);
            std::swap(buf[3], buf[4]);
            os.write(buf, 8);
        }
    }
}

void read_f64le(std::ifstream& is, double* data, std::size_t n) {
    is.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(n * 8));
    if (!is) throw std::runtime_error("checkpoint: truncated payload");
    if constexpr (std::endian::native != std::endian::little) {
        for (std::size_t i = 0; i < n; ++i) {
            char buf[8];
            std::memcpy(buf, &data[i], 8);
            std::swap(buf[0], buf[7]);
            std::swap(buf[1], buf[6]);
            std::swap(buf[2], buf[5]);
            std::swap(buf[3], buf[4]);
            std::memcpy(&data[i], buf, 8);
        }
    }
}

}  // namespace

void save_checkpoint(const ParameterStore& store, const std::string& path_prefix) {
    nlohmann::json manifest;
    std::size_t offset = 0;
    for (const auto& p : store.all()) {
        manifest[p.name] = {{"shape", p.node->value.shape()}, {"offset", offset}};
        offset += p.node->value.size() * 8;
    }
    {
        std::ofstream js(path_prefix + ".json");
        if (!js) throw std::runtime_error("checkpoint: cannot write " + path_prefix + ".json");
        js << manifest.dump(2) << "\n";
    }
    std::ofstream bin(path_prefix + ".bin", std::ios::binary);
    if (!bin) throw std::runtime_error("checkpoint: cannot write " + path_prefix + ".bin");
    for (const auto& p : store.all())
        write_f64le(bin, p.node->value.data(), p.node->value.size());
}

void load_checkpoint(ParameterStore& store, const std::string& path_prefix) {
    std::ifstream js(path_prefix + ".json");
    if (!js) throw std::runtime_error("checkpoint: cannot read " + path_prefix + ".json");
    nlohmann::json manifest = nlohmann::json::parse(js);
    std::ifstream bin(path_prefix + ".bin", std::ios::binary);
    if (!bin) throw std::runtime_error("checkpoint: cannot read " + path_prefix + ".bin");
    for (auto& p : store.all()) {
        if (!manifest.contains(p.name))
            throw std::runtime_error("checkpoint: missing parameter " + p.name);
        const auto& entry = manifest.at(p.name);
        const auto shape = entry.at("shape").get<std::vector<std::size_t>>();
        if (shape != p.node->value.shape())
            throw std::runtime_error("checkpoint: shape mismatch for " + p.name);
        const auto offset = entry.at("offset").get<std::size_t>();
        bin.seekg(static_cast<std::streamoff>(offset));
        read_f64le(bin, p.node->value.data(), p.node->value.size());
    }
}

}  // namespace esfp::ad

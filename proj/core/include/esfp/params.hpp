#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "esfp/graph.hpp"

namespace esfp::ad {

// Named trainable leaf plus AdamW moment slots.
struct Parameter {
    std::string name;
    NodePtr node;
    Tensor m;  // first moment
    Tensor v;  // second moment
};

// Ordered collection of trainable parameters. Order is insertion order and is
// part of the checkpoint layout contract.
class ParameterStore {
public:
    // Registers a new parameter; throws on duplicate name.
    Value add(const std::string& name, Tensor init);

    Parameter& at(const std::string& name);
    const Parameter& at(const std::string& name) const;
    bool contains(const std::string& name) const { return index_.count(name) != 0; }

    std::vector<Parameter>& all() { return params_; }
    const std::vector<Parameter>& all() const { return params_; }

    std::vector<NodePtr> nodes() const;
    std::size_t total_size() const;
    void zero_grads();

private:
    std::vector<Parameter> params_;
    std::map<std::string, std::size_t> index_;
};

// Checkpoint: <path>.json manifest mapping param name -> {shape, byte offset}
// plus <path>.bin holding raw little-endian float64 payloads.
void save_checkpoint(const ParameterStore& store, const std::string& path_prefix);
void load_checkpoint(ParameterStore& store, const std::string& path_prefix);

}  // namespace esfp::ad

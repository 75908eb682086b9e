#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "lgan/tensor.hpp"

namespace lgan {

// Named trainable parameters of both networks ("g.enc1.w", "d.block3.b", ...).
// Iteration is lexicographic and stable, which fixes the checkpoint layout,
// the optimizer update order and the init draw order.
class ParamStore {
public:
    void add(const std::string& name, Tensor t);
    Tensor& at(const std::string& name);
    const Tensor& at(const std::string& name) const;
    bool contains(const std::string& name) const { return params_.count(name) > 0; }

    std::size_t size() const { return params_.size(); }
    std::vector<std::string> names() const;
    std::vector<std::string> names_with_prefix(const std::string& prefix) const;

    auto begin() const { return params_.begin(); }
    auto end() const { return params_.end(); }

    // Checkpoint format: magic "LSGP2P01", u32-LE count, then per parameter
    // (lexicographic) u16-LE name length, name, u8 rank, u32-LE dims, raw
    // f32-LE data; closed by a u64-LE FNV-1a checksum of all preceding bytes.
    void save(const std::filesystem::path& path) const;
    static ParamStore load(const std::filesystem::path& path);

    bool operator==(const ParamStore& other) const;

private:
    std::map<std::string, Tensor> params_;
};

} // namespace lgan

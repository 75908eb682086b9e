#include "lgan/params.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include "lgan/errors.hpp"

namespace lgan {

namespace {

constexpr char kMagic[8] = {'L', 'S', 'G', 'P', '2', 'P', '0', '1'};
constexpr std::uint64_t kFnvOffset = 14695981039346656037ull;
constexpr std::uint64_t kFnvPrime = 1099511628211ull;

struct HashedWriter {
    std::ofstream out;
    std::uint64_t hash = kFnvOffset;

    void bytes(const void* p, std::size_t n) {
        const auto* b = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) {
            hash ^= b[i];
            hash *= kFnvPrime;
        }
        out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    }
    void u8(std::uint8_t v) { bytes(&v, 1); }
    void u16(std::uint16_t v) {
        unsigned char b[2] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8)};
        bytes(b, 2);
    }
    void u32(std::uint32_t v) {
        unsigned char b[4];
        for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
        bytes(b, 4);
    }
    void f32(float v) {
        std::uint32_t bits;
        std::memcpy(&bits, &v, 4);
        u32(bits);
    }
};

struct HashedReader {
    std::ifstream in;
    std::uint64_t hash = kFnvOffset;
    std::string path;

    void bytes(void* p, std::size_t n) {
        in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in.gcount()) != n)
            throw IntegrityError("checkpoint truncated: " + path);
        const auto* b = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) {
            hash ^= b[i];
            hash *= kFnvPrime;
        }
    }
    std::uint8_t u8() {
        std::uint8_t v;
        bytes(&v, 1);
        return v;
    }
    std::uint16_t u16() {
        unsigned char b[2];
        bytes(b, 2);
        return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
    }
    std::uint32_t u32() {
        unsigned char b[4];
        bytes(b, 4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
        return v;
    }
    float f32() {
        const std::uint32_t bits = u32();
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }
};

} // namespace

void ParamStore::add(const std::string& name, Tensor t) {
    if (params_.count(name))
        throw ConfigError("parameter '" + name + "' already registered");
    params_.emplace(name, std::move(t));
}

Tensor& ParamStore::at(const std::string& name) {
    auto it = params_.find(name);
    if (it == params_.end()) throw ConfigError("unknown parameter '" + name + "'");
    return it->second;
}

const Tensor& ParamStore::at(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw ConfigError("unknown parameter '" + name + "'");
    return it->second;
}

std::vector<std::string> ParamStore::names() const {
    std::vector<std::string> out;
    out.reserve(params_.size());
    for (const auto& [k, v] : params_) out.push_back(k);
    return out;
}

std::vector<std::string> ParamStore::names_with_prefix(const std::string& prefix) const {
    std::vector<std::string> out;
    for (const auto& [k, v] : params_)
        if (k.rfind(prefix, 0) == 0) out.push_back(k);
    return out;
}

void ParamStore::save(const std::filesystem::path& path) const {
    HashedWriter w;
    w.out.open(path, std::ios::binary | std::ios::trunc);
    if (!w.out) throw IoError("cannot open checkpoint for writing: " + path.string());

    w.bytes(kMagic, sizeof(kMagic));
    w.u32(static_cast<std::uint32_t>(params_.size()));
    for (const auto& [name, t] : params_) {
        if (name.size() > 0xFFFF) throw ConfigError("parameter name too long: " + name);
        w.u16(static_cast<std::uint16_t>(name.size()));
        w.bytes(name.data(), name.size());
        w.u8(static_cast<std::uint8_t>(t.rank()));
        for (int d = 0; d < t.rank(); ++d) w.u32(static_cast<std::uint32_t>(t.size(d)));
        for (float v : t.data) w.f32(v);
    }
    const std::uint64_t h = w.hash;
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(h >> (8 * i));
    w.out.write(reinterpret_cast<const char*>(b), 8);
    w.out.flush();
    if (!w.out) throw IoError("failed writing checkpoint: " + path.string());
}

ParamStore ParamStore::load(const std::filesystem::path& path) {
    HashedReader r;
    r.path = path.string();
    r.in.open(path, std::ios::binary);
    if (!r.in) throw IoError("cannot open checkpoint: " + path.string());

    char magic[8];
    r.bytes(magic, 8);
    if (std::memcmp(magic, kMagic, 8) != 0)
        throw IntegrityError("bad checkpoint magic in " + path.string());

    ParamStore store;
    const std::uint32_t count = r.u32();
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint16_t len = r.u16();
        std::string name(len, '\0');
        r.bytes(name.data(), len);
        const int rank = r.u8();
        std::vector<int> shape(static_cast<std::size_t>(rank));
        for (int d = 0; d < rank; ++d) shape[static_cast<std::size_t>(d)] = static_cast<int>(r.u32());
        Tensor t(shape);
        for (auto& v : t.data) v = r.f32();
        store.add(name, std::move(t));
    }
    const std::uint64_t computed = r.hash;
    unsigned char b[8];
    r.in.read(reinterpret_cast<char*>(b), 8);
    if (r.in.gcount() != 8) throw IntegrityError("checkpoint truncated: " + path.string());
    std::uint64_t stored = 0;
    for (int i = 0; i < 8; ++i) stored |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    if (stored != computed)
        throw IntegrityError("checkpoint checksum mismatch in " + path.string());
    return store;
}

bool ParamStore::operator==(const ParamStore& other) const {
    if (params_.size() != other.params_.size()) return false;
    auto ita = params_.begin();
    auto itb = other.params_.begin();
    for (; ita != params_.end(); ++ita, ++itb) {
        if (ita->first != itb->first) return false;
        if (ita->second.shape != itb->second.shape) return false;
        if (std::memcmp(ita->second.data.data(), itb->second.data.data(),
                        ita->second.numel() * sizeof(float)) != 0)
            return false;
    }
    return true;
}

} // namespace lgan

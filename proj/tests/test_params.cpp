#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "lgan/errors.hpp"
#include "lgan/params.hpp"
#include "lgan/rng.hpp"

using namespace lgan;
namespace fs = std::filesystem;

namespace {

ParamStore sample_store() {
    ParamStore s;
    RngState rng(31);
    Tensor a({3, 2, 4, 4});
    for (auto& v : a.data) v = rng.next_float() - 0.5f;
    Tensor b({3});
    for (auto& v : b.data) v = rng.next_float();
    s.add("g.enc1.w", std::move(a));
    s.add("g.enc1.b", std::move(b));
    s.add("d.block1.w", Tensor::full({2, 9, 4, 4}, 0.25f));
    return s;
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("lgan_test_" + std::to_string(::getpid()) + "_" +
                                            std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

} // namespace

TEST_CASE("iteration order is lexicographic") {
    const ParamStore s = sample_store();
    const auto names = s.names();
    REQUIRE(names.size() == 3);
    CHECK(names[0] == "d.block1.w");
    CHECK(names[1] == "g.enc1.b");
    CHECK(names[2] == "g.enc1.w");
    CHECK(s.names_with_prefix("g.").size() == 2);
}

TEST_CASE("duplicate registration is rejected") {
    ParamStore s;
    s.add("g.x", Tensor({1}));
    CHECK_THROWS_AS(s.add("g.x", Tensor({1})), ConfigError);
}

TEST_CASE("checkpoint round-trips bit-exactly") {
    TempDir dir;
    const ParamStore s = sample_store();
    const fs::path path = dir.path / "ckpt.ckpt";
    s.save(path);
    const ParamStore loaded = ParamStore::load(path);
    CHECK(loaded == s);
}

TEST_CASE("checkpoint header matches the documented layout") {
    TempDir dir;
    const ParamStore s = sample_store();
    const fs::path path = dir.path / "ckpt.ckpt";
    s.save(path);

    std::ifstream in(path, std::ios::binary);
    char magic[8];
    in.read(magic, 8);
    CHECK(std::string(magic, 8) == "LSGP2P01");
    unsigned char count_le[4];
    in.read(reinterpret_cast<char*>(count_le), 4);
    CHECK(count_le[0] == 3); // three parameters, little-endian
    CHECK(count_le[1] == 0);
    unsigned char name_len[2];
    in.read(reinterpret_cast<char*>(name_len), 2);
    CHECK(name_len[0] == std::string("d.block1.w").size()); // lexicographically first
}

TEST_CASE("flipping any byte fails the checksum") {
    TempDir dir;
    const ParamStore s = sample_store();
    const fs::path path = dir.path / "ckpt.ckpt";
    s.save(path);

    auto flip_at = [&](std::size_t offset) {
        std::fstream f(path, std::ios::binary | std::ios::in | std::ios::out);
        f.seekg(0, std::ios::end);
        const auto size = static_cast<std::size_t>(f.tellg());
        REQUIRE(offset < size);
        f.seekg(static_cast<std::streamoff>(offset));
        char byte;
        f.read(&byte, 1);
        byte = static_cast<char>(byte ^ 0x40);
        f.seekp(static_cast<std::streamoff>(offset));
        f.write(&byte, 1);
    };

    flip_at(64); // somewhere inside the first tensor payload
    CHECK_THROWS_AS(ParamStore::load(path), IntegrityError);
}

TEST_CASE("truncated checkpoints are integrity errors") {
    TempDir dir;
    const ParamStore s = sample_store();
    const fs::path path = dir.path / "ckpt.ckpt";
    s.save(path);
    const auto size = fs::file_size(path);
    fs::resize_file(path, size - 5);
    CHECK_THROWS_AS(ParamStore::load(path), IntegrityError);
}

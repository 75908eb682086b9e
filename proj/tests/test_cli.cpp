#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "lgan/params.hpp"

namespace fs = std::filesystem;

namespace {

std::string cli() {
    const char* path = std::getenv("LESIONGAN_CLI");
    REQUIRE_MESSAGE(path != nullptr, "LESIONGAN_CLI must point at the tool binary");
    return path;
}

struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() /
               ("lgan_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

int run(const std::string& args, const fs::path& log) {
    const std::string cmd = cli() + " " + args + " >" + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

} // namespace

TEST_CASE("usage errors exit with the documented code") {
    TempDir d;
    CHECK(run("train --synth 4 --disc-channels 5 --out " + (d.path / "r").string(),
              d.path / "log1") == 2);
    CHECK(run("train --out " + (d.path / "r2").string(), d.path / "log2") == 2); // no data source
    CHECK(run("definitely-not-a-command", d.path / "log3") == 2);
    const std::string log = slurp(d.path / "log1");
    CHECK(log.find("1") != std::string::npos); // message lists the valid set {1,6}
    CHECK(log.find("6") != std::string::npos);
}

TEST_CASE("tiny train run writes checkpoint, manifest and metrics") {
    TempDir d;
    const fs::path run_dir = d.path / "run";
    const int code = run("train --synth 4 --image-size 32 --epochs 2 --seed 3 --threads 2 --out " +
                             run_dir.string(),
                         d.path / "train.log");
    REQUIRE(code == 0);
    CHECK(fs::exists(run_dir / "checkpoint.ckpt"));
    CHECK(fs::exists(run_dir / "manifest.json"));
    CHECK(fs::exists(run_dir / "metrics.jsonl"));

    // metrics: one JSON line per epoch with the documented keys in order
    std::ifstream metrics(run_dir / "metrics.jsonl");
    std::string line;
    int lines = 0;
    while (std::getline(metrics, line)) {
        ++lines;
        CHECK(line.find("\"epoch\"") < line.find("\"loss_d\""));
        CHECK(line.find("\"loss_d\"") < line.find("\"loss_g_adv\""));
        CHECK(line.find("\"loss_g_adv\"") < line.find("\"loss_g_l1\""));
        CHECK(line.find("\"loss_g_l1\"") < line.find("\"loss_g_total\""));
    }
    CHECK(lines == 2);

    // refusing to clobber a non-empty run dir is a usage-level error
    CHECK(run("train --synth 4 --image-size 32 --epochs 1 --out " + run_dir.string(),
              d.path / "clobber.log") == 3);

    SUBCASE("eval consumes the manifest and writes reports") {
        const int ecode = run("eval --checkpoint " + (run_dir / "checkpoint.ckpt").string() +
                                  " --manifest " + (run_dir / "manifest.json").string() +
                                  " --on train --out " + (d.path / "eval").string(),
                              d.path / "eval.log");
        REQUIRE(ecode == 0);
        CHECK(fs::exists(d.path / "eval" / "report.json"));
        const std::string table = slurp(d.path / "eval" / "report.txt");
        CHECK(table.find("lesion boundary") != std::string::npos);
        CHECK(table.find("globules") != std::string::npos);
    }

    SUBCASE("corrupted checkpoints are rejected with the integrity exit code") {
        const fs::path bad = d.path / "bad.ckpt";
        fs::copy_file(run_dir / "checkpoint.ckpt", bad);
        std::fstream f(bad, std::ios::binary | std::ios::in | std::ios::out);
        f.seekp(100);
        char byte;
        f.seekg(100);
        f.read(&byte, 1);
        byte = static_cast<char>(byte ^ 0x01);
        f.seekp(100);
        f.write(&byte, 1);
        f.close();
        CHECK(run("eval --checkpoint " + bad.string() + " --synth 4 --on train",
                  d.path / "bad.log") == 5);
    }

    SUBCASE("predict writes binary pack PNGs deterministically") {
        // Any photo of the right family works; reuse a synth one.
        const int scode =
            run("synth --n 1 --image-size 32 --seed 9 --out " + (d.path / "data").string(),
                d.path / "synth.log");
        REQUIRE(scode == 0);
        const std::string img = (d.path / "data" / "images" / "ISIC_0000001.jpg").string();
        const int p1 = run("predict --checkpoint " + (run_dir / "checkpoint.ckpt").string() +
                               " --image " + img + " --out " + (d.path / "pred1").string(),
                           d.path / "pred1.log");
        REQUIRE(p1 == 0);
        const int p2 = run("predict --checkpoint " + (run_dir / "checkpoint.ckpt").string() +
                               " --image " + img + " --out " + (d.path / "pred2").string(),
                           d.path / "pred2.log");
        REQUIRE(p2 == 0);
        const std::string a1 = slurp(d.path / "pred1" / "ISIC_0000001_packA.png");
        CHECK(a1 == slurp(d.path / "pred2" / "ISIC_0000001_packA.png"));
        CHECK(!a1.empty());
    }
}

TEST_CASE("pack and unpack round-trip a synthetic mask directory") {
    TempDir d;
    REQUIRE(run("synth --n 3 --image-size 32 --seed 5 --out " + (d.path / "data").string(),
                d.path / "synth.log") == 0);
    REQUIRE(run("pack --masks-dir " + (d.path / "data" / "masks").string() + " --out " +
                    (d.path / "packed").string(),
                d.path / "pack.log") == 0);
    CHECK(fs::exists(d.path / "packed" / "A" / "ISIC_0000001_packA.png"));
    REQUIRE(run("unpack --packed-dir " + (d.path / "packed").string() + " --out " +
                    (d.path / "masks2").string(),
                d.path / "unpack.log") == 0);

    for (const auto& e : fs::directory_iterator(d.path / "data" / "masks")) {
        const fs::path original = e.path();
        const fs::path round = d.path / "masks2" / original.filename();
        REQUIRE_MESSAGE(fs::exists(round), round.string());
        CHECK(slurp(original) == slurp(round));
    }

    // empty input directory is an explicit error
    fs::create_directories(d.path / "empty");
    CHECK(run("pack --masks-dir " + (d.path / "empty").string() + " --out " +
                  (d.path / "x").string(),
              d.path / "empty.log") == 3);
}

TEST_CASE("gradcheck subcommand: filtering, --all, and the mutation fixture") {
    TempDir d;
    CHECK(run("gradcheck --op conv2d", d.path / "g1.log") == 0);
    const std::string out = slurp(d.path / "g1.log");
    CHECK(out.find("conv2d") != std::string::npos);
    CHECK(out.find("batch_norm2d") == std::string::npos); // filtered out

    CHECK(run("gradcheck --op not_an_op", d.path / "g2.log") == 2);
    CHECK(run("gradcheck --op tanh --mutate-grad", d.path / "g3.log") == 4);
    const std::string broken = slurp(d.path / "g3.log");
    CHECK(broken.find("FAIL") != std::string::npos);
}

TEST_CASE("identical flag sets reproduce metrics byte-identically") {
    TempDir d;
    const std::string flags = "train --synth 4 --image-size 32 --epochs 2 --seed 11 ";
    REQUIRE(run(flags + "--threads 1 --out " + (d.path / "a").string(), d.path / "a.log") == 0);
    REQUIRE(run(flags + "--threads 2 --out " + (d.path / "b").string(), d.path / "b.log") == 0);
    CHECK(slurp(d.path / "a" / "metrics.jsonl") == slurp(d.path / "b" / "metrics.jsonl"));
    CHECK(slurp(d.path / "a" / "checkpoint.ckpt") == slurp(d.path / "b" / "checkpoint.ckpt"));
}

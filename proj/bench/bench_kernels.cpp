// Serial reference vs OpenMP kernels at pix2pix-typical layer shapes.
// Run: ./bench_kernels [--benchmark_filter=...]

#include <benchmark/benchmark.h>

#include <vector>

#include "lgan/kernels.hpp"
#include "lgan/rng.hpp"
#include "lgan/threads.hpp"

using namespace lgan;
using kernels::ConvShape;

namespace {

struct ConvData {
    ConvShape s;
    std::vector<float> in, w, b, out;

    ConvData(int c_in, int hw, int c_out, int stride) {
        s.n = 1;
        s.c_in = c_in;
        s.h = s.w = hw;
        s.c_out = c_out;
        s.kh = s.kw = 4;
        s.stride = stride;
        s.pad = 1;
        s.out_h = (s.h + 2 - 4) / stride + 1;
        s.out_w = s.out_h;
        RngState rng(1);
        in.resize(static_cast<std::size_t>(s.c_in) * s.h * s.w);
        w.resize(static_cast<std::size_t>(s.c_out) * s.c_in * 16);
        b.resize(static_cast<std::size_t>(s.c_out));
        out.resize(static_cast<std::size_t>(s.c_out) * s.out_h * s.out_w);
        for (auto& v : in) v = rng.next_float() - 0.5f;
        for (auto& v : w) v = rng.next_float() - 0.5f;
    }
};

void conv_serial(benchmark::State& state) {
    ConvData d(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)),
               static_cast<int>(state.range(2)), 2);
    for (auto _ : state) {
        kernels::serial::conv_forward(d.in.data(), d.w.data(), d.b.data(), d.out.data(), d.s);
        benchmark::ClobberMemory();
    }
}

void conv_omp(benchmark::State& state) {
    set_threads(0);
    ConvData d(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)),
               static_cast<int>(state.range(2)), 2);
    for (auto _ : state) {
        kernels::par::conv_forward(d.in.data(), d.w.data(), d.b.data(), d.out.data(), d.s);
        benchmark::ClobberMemory();
    }
}

void convT_serial(benchmark::State& state) {
    ConvShape s;
    s.c_in = 256;
    s.c_out = 128;
    s.h = s.w = 16;
    s.kh = s.kw = 4;
    s.stride = 2;
    s.pad = 1;
    s.out_h = s.out_w = 32;
    RngState rng(2);
    std::vector<float> in(static_cast<std::size_t>(s.c_in) * s.h * s.w);
    std::vector<float> w(static_cast<std::size_t>(s.c_in) * s.c_out * 16);
    std::vector<float> b(static_cast<std::size_t>(s.c_out));
    std::vector<float> out(static_cast<std::size_t>(s.c_out) * s.out_h * s.out_w);
    for (auto& v : in) v = rng.next_float() - 0.5f;
    for (auto& v : w) v = rng.next_float() - 0.5f;
    for (auto _ : state) {
        kernels::serial::conv_transpose_forward(in.data(), w.data(), b.data(), out.data(), s);
        benchmark::ClobberMemory();
    }
}

void convT_omp(benchmark::State& state) {
    set_threads(0);
    ConvShape s;
    s.c_in = 256;
    s.c_out = 128;
    s.h = s.w = 16;
    s.kh = s.kw = 4;
    s.stride = 2;
    s.pad = 1;
    s.out_h = s.out_w = 32;
    RngState rng(2);
    std::vector<float> in(static_cast<std::size_t>(s.c_in) * s.h * s.w);
    std::vector<float> w(static_cast<std::size_t>(s.c_in) * s.c_out * 16);
    std::vector<float> b(static_cast<std::size_t>(s.c_out));
    std::vector<float> out(static_cast<std::size_t>(s.c_out) * s.out_h * s.out_w);
    for (auto& v : in) v = rng.next_float() - 0.5f;
    for (auto& v : w) v = rng.next_float() - 0.5f;
    for (auto _ : state) {
        kernels::par::conv_transpose_forward(in.data(), w.data(), b.data(), out.data(), s);
        benchmark::ClobberMemory();
    }
}

void grad_weight_serial(benchmark::State& state) {
    ConvData d(128, 16, 256, 2);
    std::vector<float> gout(static_cast<std::size_t>(d.s.c_out) * d.s.out_h * d.s.out_w, 0.1f);
    std::vector<float> gw(d.w.size());
    for (auto _ : state) {
        kernels::serial::conv_backward_weight(d.in.data(), gout.data(), gw.data(), d.s);
        benchmark::ClobberMemory();
    }
}

void grad_weight_omp(benchmark::State& state) {
    set_threads(0);
    ConvData d(128, 16, 256, 2);
    std::vector<float> gout(static_cast<std::size_t>(d.s.c_out) * d.s.out_h * d.s.out_w, 0.1f);
    std::vector<float> gw(d.w.size());
    for (auto _ : state) {
        kernels::par::conv_backward_weight(d.in.data(), gout.data(), gw.data(), d.s);
        benchmark::ClobberMemory();
    }
}

void batchnorm_serial(benchmark::State& state) {
    const int c = 128, hw = 32;
    RngState rng(3);
    std::vector<float> x(static_cast<std::size_t>(c) * hw * hw);
    std::vector<float> gamma(c, 1.0f), beta(c, 0.0f);
    std::vector<float> y(x.size()), xh(x.size()), istd(c);
    for (auto& v : x) v = rng.next_float() - 0.5f;
    for (auto _ : state) {
        kernels::serial::batchnorm_forward(x.data(), gamma.data(), beta.data(), 1e-5f, 1, c, hw,
                                           hw, y.data(), xh.data(), istd.data());
        benchmark::ClobberMemory();
    }
}

void batchnorm_omp(benchmark::State& state) {
    set_threads(0);
    const int c = 128, hw = 32;
    RngState rng(3);
    std::vector<float> x(static_cast<std::size_t>(c) * hw * hw);
    std::vector<float> gamma(c, 1.0f), beta(c, 0.0f);
    std::vector<float> y(x.size()), xh(x.size()), istd(c);
    for (auto& v : x) v = rng.next_float() - 0.5f;
    for (auto _ : state) {
        kernels::par::batchnorm_forward(x.data(), gamma.data(), beta.data(), 1e-5f, 1, c, hw, hw,
                                        y.data(), xh.data(), istd.data());
        benchmark::ClobberMemory();
    }
}

} // namespace

// encoder-ish (64ch 64px -> 128ch) and deeper (256ch 16px -> 512ch) shapes
BENCHMARK(conv_serial)->Args({64, 64, 128})->Args({256, 16, 512})->Unit(benchmark::kMillisecond);
BENCHMARK(conv_omp)->Args({64, 64, 128})->Args({256, 16, 512})->Unit(benchmark::kMillisecond);
BENCHMARK(convT_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(convT_omp)->Unit(benchmark::kMillisecond);
BENCHMARK(grad_weight_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(grad_weight_omp)->Unit(benchmark::kMillisecond);
BENCHMARK(batchnorm_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(batchnorm_omp)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();

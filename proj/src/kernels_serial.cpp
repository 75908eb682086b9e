#include "lgan/kernels.hpp"

#include <cmath>
#include <cstddef>

// Reference kernels: one accumulator per output element, innermost loops in
// (c, kh, kw) order for the conv family and (n, oy, ox) order for weight
// gradients. The OpenMP versions replay exactly these per-element orders.

namespace lgan::kernels::serial {

template <typename T>
void conv_forward(const T* in, const T* weight, const T* bias, T* out,
                  const ConvShape& s, bool accumulate) {
    const std::size_t in_ch = static_cast<std::size_t>(s.h) * s.w;
    const std::size_t k_ch = static_cast<std::size_t>(s.kh) * s.kw;
    for (int n = 0; n < s.n; ++n) {
        for (int f = 0; f < s.c_out; ++f) {
            const T* wf = weight + static_cast<std::size_t>(f) * s.c_in * k_ch;
            for (int oy = 0; oy < s.out_h; ++oy) {
                for (int ox = 0; ox < s.out_w; ++ox) {
                    T& dst = out[((static_cast<std::size_t>(n) * s.c_out + f) * s.out_h + oy) * s.out_w + ox];
                    T acc = accumulate ? dst : (bias ? bias[f] : T(0));
                    for (int c = 0; c < s.c_in; ++c) {
                        const T* inc = in + (static_cast<std::size_t>(n) * s.c_in + c) * in_ch;
                        const T* wc = wf + static_cast<std::size_t>(c) * k_ch;
                        for (int kh = 0; kh < s.kh; ++kh) {
                            const int iy = oy * s.stride - s.pad + kh;
                            if (iy < 0 || iy >= s.h) continue;
                            for (int kw = 0; kw < s.kw; ++kw) {
                                const int ix = ox * s.stride - s.pad + kw;
                                if (ix < 0 || ix >= s.w) continue;
                                acc += inc[static_cast<std::size_t>(iy) * s.w + ix] * wc[kh * s.kw + kw];
                            }
                        }
                    }
                    dst = acc;
                }
            }
        }
    }
}

template <typename T>
void conv_transpose_forward(const T* in, const T* weight, const T* bias, T* out,
                            const ConvShape& s, bool accumulate) {
    // Gather form: for an output cell, each (kh, kw) maps back to at most one
    // input cell (y, x) with oy = y*stride - pad + kh.
    const std::size_t in_ch = static_cast<std::size_t>(s.h) * s.w;
    const std::size_t k_ch = static_cast<std::size_t>(s.kh) * s.kw;
    for (int n = 0; n < s.n; ++n) {
        for (int g = 0; g < s.c_out; ++g) {
            for (int oy = 0; oy < s.out_h; ++oy) {
                for (int ox = 0; ox < s.out_w; ++ox) {
                    T& dst = out[((static_cast<std::size_t>(n) * s.c_out + g) * s.out_h + oy) * s.out_w + ox];
                    T acc = accumulate ? dst : (bias ? bias[g] : T(0));
                    for (int d = 0; d < s.c_in; ++d) {
                        const T* ind = in + (static_cast<std::size_t>(n) * s.c_in + d) * in_ch;
                        const T* wd = weight + (static_cast<std::size_t>(d) * s.c_out + g) * k_ch;
                        for (int kh = 0; kh < s.kh; ++kh) {
                            const int ty = oy + s.pad - kh;
                            if (ty < 0 || ty % s.stride != 0) continue;
                            const int y = ty / s.stride;
                            if (y >= s.h) continue;
                            for (int kw = 0; kw < s.kw; ++kw) {
                                const int tx = ox + s.pad - kw;
                                if (tx < 0 || tx % s.stride != 0) continue;
                                const int x = tx / s.stride;
                                if (x >= s.w) continue;
                                acc += ind[static_cast<std::size_t>(y) * s.w + x] * wd[kh * s.kw + kw];
                            }
                        }
                    }
                    dst = acc;
                }
            }
        }
    }
}

template <typename T>
void conv_backward_weight(const T* in, const T* grad_out, T* grad_weight,
                          const ConvShape& s) {
    const std::size_t in_ch = static_cast<std::size_t>(s.h) * s.w;
    const std::size_t out_ch = static_cast<std::size_t>(s.out_h) * s.out_w;
    for (int f = 0; f < s.c_out; ++f) {
        for (int c = 0; c < s.c_in; ++c) {
            for (int kh = 0; kh < s.kh; ++kh) {
                for (int kw = 0; kw < s.kw; ++kw) {
                    T acc = grad_weight[((static_cast<std::size_t>(f) * s.c_in + c) * s.kh + kh) * s.kw + kw];
                    for (int n = 0; n < s.n; ++n) {
                        const T* inc = in + (static_cast<std::size_t>(n) * s.c_in + c) * in_ch;
                        const T* gof = grad_out + (static_cast<std::size_t>(n) * s.c_out + f) * out_ch;
                        for (int oy = 0; oy < s.out_h; ++oy) {
                            const int iy = oy * s.stride - s.pad + kh;
                            if (iy < 0 || iy >= s.h) continue;
                            for (int ox = 0; ox < s.out_w; ++ox) {
                                const int ix = ox * s.stride - s.pad + kw;
                                if (ix < 0 || ix >= s.w) continue;
                                acc += inc[static_cast<std::size_t>(iy) * s.w + ix] *
                                       gof[static_cast<std::size_t>(oy) * s.out_w + ox];
                            }
                        }
                    }
                    grad_weight[((static_cast<std::size_t>(f) * s.c_in + c) * s.kh + kh) * s.kw + kw] = acc;
                }
            }
        }
    }
}

template <typename T>
void conv_backward_bias(const T* grad_out, T* grad_bias, int n, int c, int h, int w) {
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    for (int f = 0; f < c; ++f) {
        T acc = grad_bias[f];
        for (int b = 0; b < n; ++b) {
            const T* g = grad_out + (static_cast<std::size_t>(b) * c + f) * plane;
            for (std::size_t i = 0; i < plane; ++i) acc += g[i];
        }
        grad_bias[f] = acc;
    }
}

template <typename T>
void batchnorm_forward(const T* x, const T* gamma, const T* beta, T eps,
                       int n, int c, int h, int w, T* y, T* x_hat, T* inv_std) {
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    const double m = static_cast<double>(n) * h * w;
    for (int ch = 0; ch < c; ++ch) {
        double sum = 0.0;
        for (int b = 0; b < n; ++b) {
            const T* xc = x + (static_cast<std::size_t>(b) * c + ch) * plane;
            for (std::size_t i = 0; i < plane; ++i) sum += static_cast<double>(xc[i]);
        }
        const double mean = sum / m;
        double var = 0.0;
        for (int b = 0; b < n; ++b) {
            const T* xc = x + (static_cast<std::size_t>(b) * c + ch) * plane;
            for (std::size_t i = 0; i < plane; ++i) {
                const double d = static_cast<double>(xc[i]) - mean;
                var += d * d;
            }
        }
        var /= m;
        const T istd = static_cast<T>(1.0 / std::sqrt(var + static_cast<double>(eps)));
        inv_std[ch] = istd;
        const T mu = static_cast<T>(mean);
        const T g = gamma[ch], bb = beta[ch];
        for (int b = 0; b < n; ++b) {
            const std::size_t base = (static_cast<std::size_t>(b) * c + ch) * plane;
            for (std::size_t i = 0; i < plane; ++i) {
                const T xh = (x[base + i] - mu) * istd;
                x_hat[base + i] = xh;
                y[base + i] = g * xh + bb;
            }
        }
    }
}

template <typename T>
void batchnorm_backward(const T* gy, const T* x_hat, const T* inv_std, const T* gamma,
                        int n, int c, int h, int w, T* gx, T* ggamma, T* gbeta) {
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    const double m = static_cast<double>(n) * h * w;
    for (int ch = 0; ch < c; ++ch) {
        double s1 = 0.0, s2 = 0.0;
        for (int b = 0; b < n; ++b) {
            const std::size_t base = (static_cast<std::size_t>(b) * c + ch) * plane;
            for (std::size_t i = 0; i < plane; ++i) {
                s1 += static_cast<double>(gy[base + i]);
                s2 += static_cast<double>(gy[base + i]) * static_cast<double>(x_hat[base + i]);
            }
        }
        gbeta[ch] += static_cast<T>(s1);
        ggamma[ch] += static_cast<T>(s2);
        const T k1 = static_cast<T>(s1 / m);
        const T k2 = static_cast<T>(s2 / m);
        const T a = gamma[ch] * inv_std[ch];
        for (int b = 0; b < n; ++b) {
            const std::size_t base = (static_cast<std::size_t>(b) * c + ch) * plane;
            for (std::size_t i = 0; i < plane; ++i)
                gx[base + i] += a * (gy[base + i] - k1 - x_hat[base + i] * k2);
        }
    }
}

template void conv_forward<float>(const float*, const float*, const float*, float*, const ConvShape&, bool);
template void conv_forward<double>(const double*, const double*, const double*, double*, const ConvShape&, bool);
template void conv_transpose_forward<float>(const float*, const float*, const float*, float*, const ConvShape&, bool);
template void conv_transpose_forward<double>(const double*, const double*, const double*, double*, const ConvShape&, bool);
template void conv_backward_weight<float>(const float*, const float*, float*, const ConvShape&);
template void conv_backward_weight<double>(const double*, const double*, double*, const ConvShape&);
template void conv_backward_bias<float>(const float*, float*, int, int, int, int);
template void conv_backward_bias<double>(const double*, double*, int, int, int, int);
template void batchnorm_forward<float>(const float*, const float*, const float*, float, int, int, int, int, float*, float*, float*);
template void batchnorm_forward<double>(const double*, const double*, const double*, double, int, int, int, int, double*, double*, double*);
template void batchnorm_backward<float>(const float*, const float*, const float*, const float*, int, int, int, int, float*, float*, float*);
template void batchnorm_backward<double>(const double*, const double*, const double*, const double*, int, int, int, int, double*, double*, double*);

} // namespace lgan::kernels::serial

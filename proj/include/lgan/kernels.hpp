#pragma once

#include <cstddef>

namespace lgan::kernels {

// Geometry for the conv family. For conv_forward the weight is
// [c_out, c_in, kh, kw]; for conv_transpose_forward it is
// [c_in, c_out, kh, kw]. out_h/out_w are always explicit so the same
// kernels serve as each other's backward passes:
//
//   conv grad-input    = conv_transpose_forward(grad_out, w)
//   convT grad-input   = conv_forward(grad_out, w)
//   convT grad-weight  = conv_backward_weight(grad_out, input)
//
// with the weight buffer passed verbatim (the [F,C] and [C,F] layouts
// coincide under the role swap).
struct ConvShape {
    int n = 1;
    int c_in = 1;
    int h = 1, w = 1;
    int c_out = 1;
    int kh = 1, kw = 1;
    int stride = 1, pad = 0;
    int out_h = 1, out_w = 1;
};

// Each kernel exists twice: `serial` is the plain reference used by tests
// and the benchmark baseline; `par` is the OpenMP version used everywhere
// else. Both accumulate per output element in the same fixed order, so
// their results are bit-identical at any thread count.

namespace serial {

template <typename T>
void conv_forward(const T* in, const T* weight, const T* bias, T* out,
                  const ConvShape& s, bool accumulate = false);

template <typename T>
void conv_transpose_forward(const T* in, const T* weight, const T* bias, T* out,
                            const ConvShape& s, bool accumulate = false);

// grad_weight[c_out, c_in, kh, kw] += sum over (n, oy, ox); `in` follows the
// conv_forward input layout and `grad_out` its output layout.
template <typename T>
void conv_backward_weight(const T* in, const T* grad_out, T* grad_weight,
                          const ConvShape& s);

template <typename T>
void conv_backward_bias(const T* grad_out, T* grad_bias, int n, int c, int h, int w);

// Per-channel batch statistics over (n, h, w); writes y, x_hat and inv_std.
template <typename T>
void batchnorm_forward(const T* x, const T* gamma, const T* beta, T eps,
                       int n, int c, int h, int w, T* y, T* x_hat, T* inv_std);

// Accumulates into gx, ggamma, gbeta.
template <typename T>
void batchnorm_backward(const T* gy, const T* x_hat, const T* inv_std, const T* gamma,
                        int n, int c, int h, int w, T* gx, T* ggamma, T* gbeta);

} // namespace serial

namespace par {

template <typename T>
void conv_forward(const T* in, const T* weight, const T* bias, T* out,
                  const ConvShape& s, bool accumulate = false);

template <typename T>
void conv_transpose_forward(const T* in, const T* weight, const T* bias, T* out,
                            const ConvShape& s, bool accumulate = false);

template <typename T>
void conv_backward_weight(const T* in, const T* grad_out, T* grad_weight,
                          const ConvShape& s);

template <typename T>
void conv_backward_bias(const T* grad_out, T* grad_bias, int n, int c, int h, int w);

template <typename T>
void batchnorm_forward(const T* x, const T* gamma, const T* beta, T eps,
                       int n, int c, int h, int w, T* y, T* x_hat, T* inv_std);

template <typename T>
void batchnorm_backward(const T* gy, const T* x_hat, const T* inv_std, const T* gamma,
                        int n, int c, int h, int w, T* gx, T* ggamma, T* gbeta);

} // namespace par

// Loop-bound helpers for zero padding: indices i in [0, count) with
// 0 <= i*stride + off < limit.
inline int conv_lo(int off, int stride) {
    return off >= 0 ? 0 : (-off + stride - 1) / stride;
}
inline int conv_hi(int off, int stride, int limit, int count) {
    if (limit - 1 - off < 0) return 0;
    const int last = (limit - 1 - off) / stride + 1;
    return last < count ? last : count;
}

} // namespace lgan::kernels

#pragma once

#include "hrst/tensor.hpp"

namespace hrst::kernels {

// Which kernel implementations run behind the public entry points.
// `Serial` is the plain-loop reference used by tests and benchmarks;
// `Parallel` is the OpenMP + GEMM path used everywhere else.
enum class Backend { Serial, Parallel };

Backend backend();
void set_backend(Backend b);

// ---- 2-D convolution, single image, NCHW without the N ----
// x: [Cin,H,W], w: [Cout,Cin,k,k], b: [Cout] (may be empty).
// Zero padding `pad`, stride `stride`. Output [Cout,Ho,Wo].
Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b,
                      int stride, int pad);
// Gradients given upstream grad gy of the output.
Tensor conv2d_backward_input(const Tensor& gy, const Tensor& w,
                             int stride, int pad, int H, int W);
Tensor conv2d_backward_weight(const Tensor& gy, const Tensor& x,
                              int stride, int pad, int k);
Tensor conv2d_backward_bias(const Tensor& gy);

// ---- bilinear resize (align_corners = false) ----
// Works on [C,H,W]; preserves constants. Backward scatters with the
// same interpolation weights (exact transpose of forward).
Tensor bilinear_resize(const Tensor& x, int out_h, int out_w);
Tensor bilinear_resize_backward(const Tensor& gy, int in_h, int in_w);

// ---- 2x2 max pooling, stride 2 (floor semantics) ----
// `argmax` receives one flat input index per output element.
Tensor maxpool2_forward(const Tensor& x, std::vector<std::int64_t>& argmax);
Tensor maxpool2_backward(const Tensor& gy, const std::vector<std::int64_t>& argmax,
                         const std::vector<int>& in_shape);

// ---- Gram matrix ----
// feat: [C,H,W] -> [C,C], G = psi psi^T / (C*H*W) with psi the [C,H*W]
// flattening.
Tensor gram(const Tensor& feat);
// Gradient of <G, ggram> w.r.t. feat.
Tensor gram_backward(const Tensor& ggram, const Tensor& feat);

namespace serial {
Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b,
                      int stride, int pad);
Tensor conv2d_backward_input(const Tensor& gy, const Tensor& w,
                             int stride, int pad, int H, int W);
Tensor conv2d_backward_weight(const Tensor& gy, const Tensor& x,
                              int stride, int pad, int k);
Tensor bilinear_resize(const Tensor& x, int out_h, int out_w);
Tensor bilinear_resize_backward(const Tensor& gy, int in_h, int in_w);
Tensor gram(const Tensor& feat);
Tensor gram_backward(const Tensor& ggram, const Tensor& feat);
} // namespace serial

namespace parallel {
Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b,
                      int stride, int pad);
Tensor conv2d_backward_input(const Tensor& gy, const Tensor& w,
                             int stride, int pad, int H, int W);
Tensor conv2d_backward_weight(const Tensor& gy, const Tensor& x,
                              int stride, int pad, int k);
Tensor bilinear_resize(const Tensor& x, int out_h, int out_w);
Tensor bilinear_resize_backward(const Tensor& gy, int in_h, int in_w);
Tensor gram(const Tensor& feat);
Tensor gram_backward(const Tensor& ggram, const Tensor& feat);
} // namespace parallel

inline int conv_out_dim(int in, int k, int stride, int pad) {
    return (in + 2 * pad - k) / stride + 1;
}

} // namespace hrst::kernels

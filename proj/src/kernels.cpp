#include "hrst/kernels.hpp"

#include <Eigen/Core>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace hrst::kernels {

namespace {

Backend g_backend = Backend::Parallel;

using MatRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRM = Eigen::Map<MatRM>;
using CMapRM = Eigen::Map<const MatRM>;

void check_conv_args(const Tensor& x, const Tensor& w, const Tensor& b) {
    if (x.rank() != 3 || w.rank() != 4)
        throw std::invalid_argument("conv2d: expected x[C,H,W], w[Cout,Cin,k,k]");
    if (w.dim(1) != x.dim(0))
        throw std::invalid_argument("conv2d: input channel mismatch");
    if (w.dim(2) != w.dim(3))
        throw std::invalid_argument("conv2d: non-square kernel");
    if (!b.empty() && (b.rank() != 1 || b.dim(0) != w.dim(0)))
        throw std::invalid_argument("conv2d: bad bias shape");
}

// Scratch budget for the unrolled im2col patch matrix; larger images are
// processed in output-row chunks to stay under it.
constexpr std::int64_t kColBudgetDoubles = 8 << 20;

// col layout: [Cin*k*k, (oh1-oh0)*Wo], row index = (ci*k + kh)*k + kw.
void im2col(const Tensor& x, int k, int stride, int pad, int oh0, int oh1, int Wo,
            std::vector<double>& col) {
    const int Cin = x.dim(0), H = x.dim(1), W = x.dim(2);
    const std::int64_t plane = static_cast<std::int64_t>(oh1 - oh0) * Wo;
    col.assign(static_cast<std::size_t>(Cin) * k * k * plane, 0.0);
#pragma omp parallel for schedule(static)
    for (int ci = 0; ci < Cin; ++ci) {
        for (int kh = 0; kh < k; ++kh) {
            for (int kw = 0; kw < k; ++kw) {
                double* row = col.data() + ((static_cast<std::int64_t>(ci) * k + kh) * k + kw) * plane;
                for (int oh = oh0; oh < oh1; ++oh) {
                    const int ih = oh * stride - pad + kh;
                    if (ih < 0 || ih >= H) continue;
                    const double* src = x.data() + (static_cast<std::int64_t>(ci) * H + ih) * W;
                    double* dst = row + static_cast<std::int64_t>(oh - oh0) * Wo;
                    for (int ow = 0; ow < Wo; ++ow) {
                        const int iw = ow * stride - pad + kw;
                        if (iw >= 0 && iw < W) dst[ow] = src[iw];
                    }
                }
            }
        }
    }
}

void col2im(const std::vector<double>& col, int Cin, int H, int W,
            int k, int stride, int pad, int oh0, int oh1, int Wo, Tensor& gx) {
    const std::int64_t plane = static_cast<std::int64_t>(oh1 - oh0) * Wo;
#pragma omp parallel for schedule(static)
    for (int ci = 0; ci < Cin; ++ci) {
        for (int kh = 0; kh < k; ++kh) {
            for (int kw = 0; kw < k; ++kw) {
                const double* row = col.data() + ((static_cast<std::int64_t>(ci) * k + kh) * k + kw) * plane;
                for (int oh = oh0; oh < oh1; ++oh) {
                    const int ih = oh * stride - pad + kh;
                    if (ih < 0 || ih >= H) continue;
                    double* dst = gx.data() + (static_cast<std::int64_t>(ci) * H + ih) * W;
                    const double* src = row + static_cast<std::int64_t>(oh - oh0) * Wo;
                    for (int ow = 0; ow < Wo; ++ow) {
                        const int iw = ow * stride - pad + kw;
                        if (iw >= 0 && iw < W) dst[iw] += src[ow];
                    }
                }
            }
        }
    }
}

int chunk_rows(int Cin, int k, int Wo, int Ho) {
    const std::int64_t per_row = static_cast<std::int64_t>(Cin) * k * k * Wo;
    int rows = static_cast<int>(std::max<std::int64_t>(1, kColBudgetDoubles / std::max<std::int64_t>(1, per_row)));
    return std::min(rows, Ho);
}

struct LerpAxis {
    std::vector<int> lo, hi;
    std::vector<double> wlo, whi;
};

// align_corners=false sample positions, clamped to the border.
LerpAxis make_axis(int out, int in) {
    LerpAxis a;
    a.lo.resize(out); a.hi.resize(out); a.wlo.resize(out); a.whi.resize(out);
    const double scale = static_cast<double>(in) / out;
    for (int i = 0; i < out; ++i) {
        double src = (i + 0.5) * scale - 0.5;
        if (src < 0) src = 0;
        if (src > in - 1) src = in - 1;
        const int lo = static_cast<int>(src);
        const int hi = lo + 1 < in ? lo + 1 : lo;
        const double f = src - lo;
        a.lo[i] = lo; a.hi[i] = hi; a.wlo[i] = 1.0 - f; a.whi[i] = f;
    }
    return a;
}

} // namespace

Backend backend() { return g_backend; }
void set_backend(Backend b) { g_backend = b; }

// ---------------- serial reference ----------------

namespace serial {

Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b,
                      int stride, int pad) {
    check_conv_args(x, w, b);
    const int Cin = x.dim(0), H = x.dim(1), W = x.dim(2);
    const int Cout = w.dim(0), k = w.dim(2);
    const int Ho = conv_out_dim(H, k, stride, pad);
    const int Wo = conv_out_dim(W, k, stride, pad);
    Tensor y({Cout, Ho, Wo});
    for (int co = 0; co < Cout; ++co)
        for (int oh = 0; oh < Ho; ++oh)
            for (int ow = 0; ow < Wo; ++ow) {
                double acc = b.empty() ? 0.0 : b[co];
                for (int ci = 0; ci < Cin; ++ci)
                    for (int kh = 0; kh < k; ++kh)
                        for (int kw = 0; kw < k; ++kw) {
                            const int ih = oh * stride - pad + kh;
                            const int iw = ow * stride - pad + kw;
                            if (ih < 0 || ih >= H || iw < 0 || iw >= W) continue;
                            acc += x.at3(ci, ih, iw) *
                                   w[((static_cast<std::int64_t>(co) * Cin + ci) * k + kh) * k + kw];
                        }
                y.at3(co, oh, ow) = acc;
            }
    return y;
}

Tensor conv2d_backward_input(const Tensor& gy, const Tensor& w,
                             int stride, int pad, int H, int W) {
    const int Cout = gy.dim(0), Ho = gy.dim(1), Wo = gy.dim(2);
    const int Cin = w.dim(1), k = w.dim(2);
    Tensor gx({Cin, H, W});
    for (int co = 0; co < Cout; ++co)
        for (int oh = 0; oh < Ho; ++oh)
            for (int ow = 0; ow < Wo; ++ow) {
                const double g = gy.at3(co, oh, ow);
                for (int ci = 0; ci < Cin; ++ci)
                    for (int kh = 0; kh < k; ++kh)
                        for (int kw = 0; kw < k; ++kw) {
                            const int ih = oh * stride - pad + kh;
                            const int iw = ow * stride - pad + kw;
                            if (ih < 0 || ih >= H || iw < 0 || iw >= W) continue;
                            gx.at3(ci, ih, iw) +=
                                g * w[((static_cast<std::int64_t>(co) * Cin + ci) * k + kh) * k + kw];
                        }
            }
    return gx;
}

Tensor conv2d_backward_weight(const Tensor& gy, const Tensor& x,
                              int stride, int pad, int k) {
    const int Cout = gy.dim(0), Ho = gy.dim(1), Wo = gy.dim(2);
    const int Cin = x.dim(0), H = x.dim(1), W = x.dim(2);
    Tensor gw({Cout, Cin, k, k});
    for (int co = 0; co < Cout; ++co)
        for (int ci = 0; ci < Cin; ++ci)
            for (int kh = 0; kh < k; ++kh)
                for (int kw = 0; kw < k; ++kw) {
                    double acc = 0.0;
                    for (int oh = 0; oh < Ho; ++oh)
                        for (int ow = 0; ow < Wo; ++ow) {
                            const int ih = oh * stride - pad + kh;
                            const int iw = ow * stride - pad + kw;
                            if (ih < 0 || ih >= H || iw < 0 || iw >= W) continue;
                            acc += gy.at3(co, oh, ow) * x.at3(ci, ih, iw);
                        }
                    gw[((static_cast<std::int64_t>(co) * Cin + ci) * k + kh) * k + kw] = acc;
                }
    return gw;
}

Tensor bilinear_resize(const Tensor& x, int out_h, int out_w) {
    const int C = x.dim(0), H = x.dim(1), W = x.dim(2);
    const LerpAxis ay = make_axis(out_h, H), ax = make_axis(out_w, W);
    Tensor y({C, out_h, out_w});
    for (int c = 0; c < C; ++c)
        for (int oh = 0; oh < out_h; ++oh)
            for (int ow = 0; ow < out_w; ++ow)
                y.at3(c, oh, ow) =
                    ay.wlo[oh] * (ax.wlo[ow] * x.at3(c, ay.lo[oh], ax.lo[ow]) +
                                  ax.whi[ow] * x.at3(c, ay.lo[oh], ax.hi[ow])) +
                    ay.whi[oh] * (ax.wlo[ow] * x.at3(c, ay.hi[oh], ax.lo[ow]) +
                                  ax.whi[ow] * x.at3(c, ay.hi[oh], ax.hi[ow]));
    return y;
}

Tensor bilinear_resize_backward(const Tensor& gy, int in_h, int in_w) {
    const int C = gy.dim(0), Ho = gy.dim(1), Wo = gy.dim(2);
    const LerpAxis ay = make_axis(Ho, in_h), ax = make_axis(Wo, in_w);
    Tensor gx({C, in_h, in_w});
    for (int c = 0; c < C; ++c)
        for (int oh = 0; oh < Ho; ++oh)
            for (int ow = 0; ow < Wo; ++ow) {
                const double g = gy.at3(c, oh, ow);
                gx.at3(c, ay.lo[oh], ax.lo[ow]) += g * ay.wlo[oh] * ax.wlo[ow];
                gx.at3(c, ay.lo[oh], ax.hi[ow]) += g * ay.wlo[oh] * ax.whi[ow];
                gx.at3(c, ay.hi[oh], ax.lo[ow]) += g * ay.whi[oh] * ax.wlo[ow];
                gx.at3(c, ay.hi[oh], ax.hi[ow]) += g * ay.whi[oh] * ax.whi[ow];
            }
    return gx;
}

Tensor gram(const Tensor& feat) {
    const int C = feat.dim(0), H = feat.dim(1), W = feat.dim(2);
    const double inv = 1.0 / (static_cast<double>(C) * H * W);
    Tensor g({C, C});
    for (int c = 0; c < C; ++c)
        for (int c2 = 0; c2 < C; ++c2) {
            double acc = 0.0;
            for (int h = 0; h < H; ++h)
                for (int w = 0; w < W; ++w)
                    acc += feat.at3(c, h, w) * feat.at3(c2, h, w);
            g.at2(c, c2) = acc * inv;
        }
    return g;
}

Tensor gram_backward(const Tensor& ggram, const Tensor& feat) {
    const int C = feat.dim(0), H = feat.dim(1), W = feat.dim(2);
    const double inv = 1.0 / (static_cast<double>(C) * H * W);
    Tensor gx({C, H, W});
    for (int c = 0; c < C; ++c)
        for (int c2 = 0; c2 < C; ++c2) {
            const double g = (ggram.at2(c, c2) + ggram.at2(c2, c)) * inv;
            if (g == 0.0) continue;
            for (int h = 0; h < H; ++h)
                for (int w = 0; w < W; ++w)
                    gx.at3(c, h, w) += g * feat.at3(c2, h, w);
        }
    return gx;
}

} // namespace serial

// ---------------- parallel (OpenMP + GEMM) ----------------

namespace parallel {

Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b,
                      int stride, int pad) {
    check_conv_args(x, w, b);
    const int Cin = x.dim(0), H = x.dim(1), W = x.dim(2);
    const int Cout = w.dim(0), k = w.dim(2);
    const int Ho = conv_out_dim(H, k, stride, pad);
    const int Wo = conv_out_dim(W, k, stride, pad);
    Tensor y({Cout, Ho, Wo});
    const std::int64_t plane = static_cast<std::int64_t>(Ho) * Wo;
    const int rows = chunk_rows(Cin, k, Wo, Ho);
    std::vector<double> col;
    CMapRM wm(w.data(), Cout, static_cast<std::int64_t>(Cin) * k * k);
    for (int oh0 = 0; oh0 < Ho; oh0 += rows) {
        const int oh1 = std::min(Ho, oh0 + rows);
        const std::int64_t cp = static_cast<std::int64_t>(oh1 - oh0) * Wo;
        im2col(x, k, stride, pad, oh0, oh1, Wo, col);
        CMapRM cm(col.data(), static_cast<std::int64_t>(Cin) * k * k, cp);
        Eigen::Map<MatRM, 0, Eigen::OuterStride<>> ym(
            y.data() + static_cast<std::int64_t>(oh0) * Wo, Cout, cp,
            Eigen::OuterStride<>(plane));
        ym.noalias() = wm * cm;
    }
    if (!b.empty()) {
#pragma omp parallel for schedule(static)
        for (int co = 0; co < Cout; ++co) {
            double* row = y.data() + co * plane;
            const double bv = b[co];
            for (std::int64_t i = 0; i < plane; ++i) row[i] += bv;
        }
    }
    return y;
}

Tensor conv2d_backward_input(const Tensor& gy, const Tensor& w,
                             int stride, int pad, int H, int W) {
    const int Cout = gy.dim(0), Ho = gy.dim(1), Wo = gy.dim(2);
    const int Cin = w.dim(1), k = w.dim(2);
    const std::int64_t plane = static_cast<std::int64_t>(Ho) * Wo;
    const int rows = chunk_rows(Cin, k, Wo, Ho);
    CMapRM wm(w.data(), Cout, static_cast<std::int64_t>(Cin) * k * k);
    Tensor gx({Cin, H, W});
    std::vector<double> colg;
    for (int oh0 = 0; oh0 < Ho; oh0 += rows) {
        const int oh1 = std::min(Ho, oh0 + rows);
        const std::int64_t cp = static_cast<std::int64_t>(oh1 - oh0) * Wo;
        colg.resize(static_cast<std::size_t>(Cin) * k * k * cp);
        Eigen::Map<const MatRM, 0, Eigen::OuterStride<>> gym(
            gy.data() + static_cast<std::int64_t>(oh0) * Wo, Cout, cp,
            Eigen::OuterStride<>(plane));
        MapRM cgm(colg.data(), static_cast<std::int64_t>(Cin) * k * k, cp);
        cgm.noalias() = wm.transpose() * gym;
        col2im(colg, Cin, H, W, k, stride, pad, oh0, oh1, Wo, gx);
    }
    return gx;
}

Tensor conv2d_backward_weight(const Tensor& gy, const Tensor& x,
                              int stride, int pad, int k) {
    const int Cout = gy.dim(0), Ho = gy.dim(1), Wo = gy.dim(2);
    const int Cin = x.dim(0);
    const std::int64_t plane = static_cast<std::int64_t>(Ho) * Wo;
    const int rows = chunk_rows(Cin, k, Wo, Ho);
    Tensor gw({Cout, Cin, k, k});
    MapRM gwm(gw.data(), Cout, static_cast<std::int64_t>(Cin) * k * k);
    std::vector<double> col;
    for (int oh0 = 0; oh0 < Ho; oh0 += rows) {
        const int oh1 = std::min(Ho, oh0 + rows);
        const std::int64_t cp = static_cast<std::int64_t>(oh1 - oh0) * Wo;
        im2col(x, k, stride, pad, oh0, oh1, Wo, col);
        Eigen::Map<const MatRM, 0, Eigen::OuterStride<>> gym(
            gy.data() + static_cast<std::int64_t>(oh0) * Wo, Cout, cp,
            Eigen::OuterStride<>(plane));
        CMapRM cm(col.data(), static_cast<std::int64_t>(Cin) * k * k, cp);
        gwm.noalias() += gym * cm.transpose();
    }
    return gw;
}

Tensor bilinear_resize(const Tensor& x, int out_h, int out_w) {
    const int C = x.dim(0), H = x.dim(1), W = x.dim(2);
    const LerpAxis ay = make_axis(out_h, H), ax = make_axis(out_w, W);
    Tensor y({C, out_h, out_w});
#pragma omp parallel for schedule(static)
    for (int c = 0; c < C; ++c)
        for (int oh = 0; oh < out_h; ++oh) {
            const double* rlo = x.data() + (static_cast<std::int64_t>(c) * H + ay.lo[oh]) * W;
            const double* rhi = x.data() + (static_cast<std::int64_t>(c) * H + ay.hi[oh]) * W;
            double* dst = y.data() + (static_cast<std::int64_t>(c) * out_h + oh) * out_w;
            for (int ow = 0; ow < out_w; ++ow)
                dst[ow] = ay.wlo[oh] * (ax.wlo[ow] * rlo[ax.lo[ow]] + ax.whi[ow] * rlo[ax.hi[ow]]) +
                          ay.whi[oh] * (ax.wlo[ow] * rhi[ax.lo[ow]] + ax.whi[ow] * rhi[ax.hi[ow]]);
        }
    return y;
}

Tensor bilinear_resize_backward(const Tensor& gy, int in_h, int in_w) {
    const int C = gy.dim(0), Ho = gy.dim(1), Wo = gy.dim(2);
    const LerpAxis ay = make_axis(Ho, in_h), ax = make_axis(Wo, in_w);
    Tensor gx({C, in_h, in_w});
#pragma omp parallel for schedule(static)
    for (int c = 0; c < C; ++c)
        for (int oh = 0; oh < Ho; ++oh)
            for (int ow = 0; ow < Wo; ++ow) {
                const double g = gy.at3(c, oh, ow);
                gx.at3(c, ay.lo[oh], ax.lo[ow]) += g * ay.wlo[oh] * ax.wlo[ow];
                gx.at3(c, ay.lo[oh], ax.hi[ow]) += g * ay.wlo[oh] * ax.whi[ow];
                gx.at3(c, ay.hi[oh], ax.lo[ow]) += g * ay.whi[oh] * ax.wlo[ow];
                gx.at3(c, ay.hi[oh], ax.hi[ow]) += g * ay.whi[oh] * ax.whi[ow];
            }
    return gx;
}

Tensor gram(const Tensor& feat) {
    const int C = feat.dim(0);
    const std::int64_t HW = static_cast<std::int64_t>(feat.dim(1)) * feat.dim(2);
    const double inv = 1.0 / (static_cast<double>(C) * HW);
    Tensor g({C, C});
    CMapRM psi(feat.data(), C, HW);
    MapRM gm(g.data(), C, C);
    gm.noalias() = psi * psi.transpose() * inv;
    return g;
}

Tensor gram_backward(const Tensor& ggram, const Tensor& feat) {
    const int C = feat.dim(0);
    const std::int64_t HW = static_cast<std::int64_t>(feat.dim(1)) * feat.dim(2);
    const double inv = 1.0 / (static_cast<double>(C) * HW);
    Tensor gx(feat.shape());
    CMapRM gg(ggram.data(), C, C);
    CMapRM psi(feat.data(), C, HW);
    MapRM gxm(gx.data(), C, HW);
    gxm.noalias() = (gg + gg.transpose()) * psi * inv;
    return gx;
}

} // namespace parallel

// ---------------- dispatch ----------------

Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int pad) {
    return g_backend == Backend::Serial ? serial::conv2d_forward(x, w, b, stride, pad)
                                        : parallel::conv2d_forward(x, w, b, stride, pad);
}
Tensor conv2d_backward_input(const Tensor& gy, const Tensor& w, int stride, int pad, int H, int W) {
    return g_backend == Backend::Serial ? serial::conv2d_backward_input(gy, w, stride, pad, H, W)
                                        : parallel::conv2d_backward_input(gy, w, stride, pad, H, W);
}
Tensor conv2d_backward_weight(const Tensor& gy, const Tensor& x, int stride, int pad, int k) {
    return g_backend == Backend::Serial ? serial::conv2d_backward_weight(gy, x, stride, pad, k)
                                        : parallel::conv2d_backward_weight(gy, x, stride, pad, k);
}
Tensor conv2d_backward_bias(const Tensor& gy) {
    const int Cout = gy.dim(0);
    const std::int64_t plane = static_cast<std::int64_t>(gy.dim(1)) * gy.dim(2);
    Tensor gb({Cout});
    for (int co = 0; co < Cout; ++co) {
        double acc = 0.0;
        const double* row = gy.data() + co * plane;
        for (std::int64_t i = 0; i < plane; ++i) acc += row[i];
        gb[co] = acc;
    }
    return gb;
}
Tensor bilinear_resize(const Tensor& x, int out_h, int out_w) {
    return g_backend == Backend::Serial ? serial::bilinear_resize(x, out_h, out_w)
                                        : parallel::bilinear_resize(x, out_h, out_w);
}
Tensor bilinear_resize_backward(const Tensor& gy, int in_h, int in_w) {
    return g_backend == Backend::Serial ? serial::bilinear_resize_backward(gy, in_h, in_w)
                                        : parallel::bilinear_resize_backward(gy, in_h, in_w);
}
Tensor gram(const Tensor& feat) {
    return g_backend == Backend::Serial ? serial::gram(feat) : parallel::gram(feat);
}
Tensor gram_backward(const Tensor& ggram, const Tensor& feat) {
    return g_backend == Backend::Serial ? serial::gram_backward(ggram, feat)
                                        : parallel::gram_backward(ggram, feat);
}

Tensor maxpool2_forward(const Tensor& x, std::vector<std::int64_t>& argmax) {
    const int C = x.dim(0), H = x.dim(1), W = x.dim(2);
    const int Ho = H / 2, Wo = W / 2;
    Tensor y({C, Ho, Wo});
    argmax.assign(static_cast<std::size_t>(y.size()), 0);
#pragma omp parallel for schedule(static)
    for (int c = 0; c < C; ++c)
        for (int oh = 0; oh < Ho; ++oh)
            for (int ow = 0; ow < Wo; ++ow) {
                double best = -1e300;
                std::int64_t best_idx = 0;
                for (int dh = 0; dh < 2; ++dh)
                    for (int dw = 0; dw < 2; ++dw) {
                        const std::int64_t idx =
                            (static_cast<std::int64_t>(c) * H + 2 * oh + dh) * W + 2 * ow + dw;
                        if (x[idx] > best) { best = x[idx]; best_idx = idx; }
                    }
                const std::int64_t oi = (static_cast<std::int64_t>(c) * Ho + oh) * Wo + ow;
                y[oi] = best;
                argmax[static_cast<std::size_t>(oi)] = best_idx;
            }
    return y;
}

Tensor maxpool2_backward(const Tensor& gy, const std::vector<std::int64_t>& argmax,
                         const std::vector<int>& in_shape) {
    Tensor gx(in_shape);
    for (std::int64_t i = 0; i < gy.size(); ++i)
        gx[argmax[static_cast<std::size_t>(i)]] += gy[i];
    return gx;
}

} // namespace hrst::kernels

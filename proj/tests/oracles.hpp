#pragma once

// Independent brute-force reference implementations used by the unit and
// acceptance tests. Everything here is deliberately written as plain
// nested loops in double precision, with no shared code with the library
// kernels, so that agreement is meaningful.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "hrst/tensor.hpp"

namespace oracle {

using hrst::Tensor;

inline Tensor random_tensor(const std::vector<int>& shape, std::mt19937_64& rng,
                            double lo = -1.0, double hi = 1.0) {
    Tensor t(shape);
    std::uniform_real_distribution<double> dist(lo, hi);
    for (std::int64_t i = 0; i < t.size(); ++i) t[i] = dist(rng);
    return t;
}

// Direct convolution, quadruple loop: x [Cin,H,W], w [Cout,Cin,k,k].
inline Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b,
                     int stride, int pad) {
    const int Cin = x.dim(0), H = x.dim(1), W = x.dim(2);
    const int Cout = w.dim(0), k = w.dim(2);
    const int Ho = (H + 2 * pad - k) / stride + 1;
    const int Wo = (W + 2 * pad - k) / stride + 1;
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
                            acc += x.at3(ci, ih, iw) * w[((static_cast<std::int64_t>(co) * Cin + ci) * k + kh) * k + kw];
                        }
                y.at3(co, oh, ow) = acc;
            }
    return y;
}

// (1/CHW) * sum of squared differences.
inline double content_loss(const Tensor& a, const Tensor& b) {
    double s = 0;
    for (std::int64_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s / static_cast<double>(a.size());
}

// G[c,c'] = (1/CHW) * sum_{h,w} f[c,h,w] f[c',h,w], quadruple loop.
inline Tensor gram(const Tensor& f) {
    const int C = f.dim(0), H = f.dim(1), W = f.dim(2);
    Tensor g({C, C});
    for (int c = 0; c < C; ++c)
        for (int c2 = 0; c2 < C; ++c2) {
            double s = 0;
            for (int h = 0; h < H; ++h)
                for (int w = 0; w < W; ++w) s += f.at3(c, h, w) * f.at3(c2, h, w);
            g.at2(c, c2) = s / (static_cast<double>(C) * H * W);
        }
    return g;
}

// Squared Frobenius norm of the Gram difference.
inline double style_loss_layer(const Tensor& fy, const Tensor& fyhat) {
    const Tensor gy = gram(fy), gh = gram(fyhat);
    double s = 0;
    for (std::int64_t i = 0; i < gy.size(); ++i) {
        const double d = gy[i] - gh[i];
        s += d * d;
    }
    return s;
}

// Mean squared forward difference over channels and valid positions.
inline double tv_loss(const Tensor& img) {
    const int C = img.dim(0), H = img.dim(1), W = img.dim(2);
    double s = 0;
    std::int64_t n = 0;
    for (int c = 0; c < C; ++c) {
        for (int h = 0; h < H; ++h)
            for (int w = 0; w + 1 < W; ++w) {
                const double d = img.at3(c, h, w + 1) - img.at3(c, h, w);
                s += d * d;
                ++n;
            }
        for (int h = 0; h + 1 < H; ++h)
            for (int w = 0; w < W; ++w) {
                const double d = img.at3(c, h + 1, w) - img.at3(c, h, w);
                s += d * d;
                ++n;
            }
    }
    return n == 0 ? 0.0 : s / static_cast<double>(n);
}

// Rec.601 luminance, per pixel.
inline Tensor grayscale(const Tensor& rgb) {
    const int H = rgb.dim(1), W = rgb.dim(2);
    Tensor g({H, W});
    for (int h = 0; h < H; ++h)
        for (int w = 0; w < W; ++w)
            g.at2(h, w) = 0.299 * rgb.at3(0, h, w) + 0.587 * rgb.at3(1, h, w) +
                          0.114 * rgb.at3(2, h, w);
    return g;
}

// Direct 2-D correlation with the 3x3 Sobel kernels, replicate padding.
inline Tensor sobel_magnitude(const Tensor& gray) {
    const int H = gray.dim(0), W = gray.dim(1);
    static const double kx[3][3] = {{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}};
    static const double ky[3][3] = {{-1, -2, -1}, {0, 0, 0}, {1, 2, 1}};
    auto clampi = [](int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); };
    Tensor out({H, W});
    for (int h = 0; h < H; ++h)
        for (int w = 0; w < W; ++w) {
            double gx = 0, gy = 0;
            for (int dh = -1; dh <= 1; ++dh)
                for (int dw = -1; dw <= 1; ++dw) {
                    const double v = gray.at2(clampi(h + dh, 0, H - 1), clampi(w + dw, 0, W - 1));
                    gx += kx[dh + 1][dw + 1] * v;
                    gy += ky[dh + 1][dw + 1] * v;
                }
            out.at2(h, w) = std::sqrt(gx * gx + gy * gy);
        }
    return out;
}

inline double rel_err(double got, double want) {
    const double denom = std::max(std::abs(want), 1e-12);
    return std::abs(got - want) / denom;
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
    double m = 0;
    for (std::int64_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

inline double max_rel_diff(const Tensor& a, const Tensor& b) {
    double m = 0;
    for (std::int64_t i = 0; i < a.size(); ++i) {
        const double denom = std::max({std::abs(a[i]), std::abs(b[i]), 1e-12});
        m = std::max(m, std::abs(a[i] - b[i]) / denom);
    }
    return m;
}

} // namespace oracle

#include "hrst/autograd.hpp"

#include <cmath>

#include "hrst/kernels.hpp"

namespace hrst {

void Node::accumulate(const Tensor& g) {
    if (grad.empty()) {
        grad = g;
        return;
    }
    for (std::int64_t i = 0; i < g.size(); ++i) grad[i] += g[i];
}

void Node::accumulate(Tensor&& g) {
    if (grad.empty()) {
        grad = std::move(g);
        return;
    }
    for (std::int64_t i = 0; i < g.size(); ++i) grad[i] += g[i];
}

void Node::accumulate_scaled(const Tensor& g, double s) {
    if (grad.empty()) grad = Tensor(value.shape());
    for (std::int64_t i = 0; i < g.size(); ++i) grad[i] += s * g[i];
}

Var Tape::leaf(Tensor value, bool requires_grad) {
    auto n = std::make_unique<Node>();
    n->value = std::move(value);
    n->requires_grad = requires_grad;
    nodes_.push_back(std::move(n));
    return nodes_.back().get();
}

Var Tape::make(Tensor value, std::vector<Var> parents,
               std::function<void(Node&)> backward_fn) {
    auto n = std::make_unique<Node>();
    n->value = std::move(value);
    n->parents = std::move(parents);
    for (Var p : n->parents)
        if (p && p->requires_grad) { n->requires_grad = true; break; }
    if (n->requires_grad) n->backward_fn = std::move(backward_fn);
    nodes_.push_back(std::move(n));
    return nodes_.back().get();
}

void Tape::backward(Var loss) {
    if (loss->value.size() != 1)
        throw std::invalid_argument("backward: loss must be scalar");
    loss->grad = Tensor(loss->value.shape());
    loss->grad[0] = 1.0;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
        Node& n = **it;
        if (!n.requires_grad || !n.backward_fn || n.grad.empty()) continue;
        n.backward_fn(n);
        // The node's grad is fully consumed by its backward fn, and no later
        // backward fn reads an interior node's value, so both buffers can be
        // released here to bound peak memory at high resolutions.
        n.backward_fn = nullptr;
        n.value = Tensor();
        n.grad = Tensor();
    }
}

namespace ops {

Var conv2d(Tape& t, Var x, Var w, Var b, int stride, int pad) {
    Tensor y = kernels::conv2d_forward(x->value, w->value,
                                       b ? b->value : Tensor(), stride, pad);
    const int H = x->value.dim(1), W = x->value.dim(2);
    const int k = w->value.dim(2);
    std::vector<Var> parents{x, w};
    if (b) parents.push_back(b);
    return t.make(std::move(y), parents, [x, w, b, stride, pad, H, W, k](Node& n) {
        if (x->requires_grad)
            x->accumulate(kernels::conv2d_backward_input(n.grad, w->value, stride, pad, H, W));
        if (w->requires_grad)
            w->accumulate(kernels::conv2d_backward_weight(n.grad, x->value, stride, pad, k));
        if (b && b->requires_grad)
            b->accumulate(kernels::conv2d_backward_bias(n.grad));
    });
}

Var relu(Tape& t, Var x) {
    Tensor y = x->value;
    for (std::int64_t i = 0; i < y.size(); ++i)
        if (y[i] < 0) y[i] = 0;
    return t.make(std::move(y), {x}, [x](Node& n) {
        if (!x->requires_grad) return;
        Tensor g(n.value.shape());
        for (std::int64_t i = 0; i < g.size(); ++i)
            g[i] = x->value[i] > 0 ? n.grad[i] : 0.0;
        x->accumulate(std::move(g));
    });
}

Var sigmoid(Tape& t, Var x) {
    Tensor y = x->value;
    for (std::int64_t i = 0; i < y.size(); ++i)
        y[i] = 1.0 / (1.0 + std::exp(-y[i]));
    return t.make(std::move(y), {x}, [x](Node& n) {
        if (!x->requires_grad) return;
        Tensor g(n.value.shape());
        for (std::int64_t i = 0; i < g.size(); ++i)
            g[i] = n.grad[i] * n.value[i] * (1.0 - n.value[i]);
        x->accumulate(std::move(g));
    });
}

Var add(Tape& t, Var a, Var b) {
    if (!a->value.same_shape(b->value))
        throw std::invalid_argument("add: shape mismatch");
    Tensor y = a->value;
    for (std::int64_t i = 0; i < y.size(); ++i) y[i] += b->value[i];
    return t.make(std::move(y), {a, b}, [a, b](Node& n) {
        if (a->requires_grad) a->accumulate(n.grad);
        if (b->requires_grad) b->accumulate(n.grad);
    });
}

Var concat_channels(Tape& t, const std::vector<Var>& xs) {
    if (xs.empty()) throw std::invalid_argument("concat: no inputs");
    const int H = xs[0]->value.dim(1), W = xs[0]->value.dim(2);
    int C = 0;
    for (Var x : xs) {
        if (x->value.dim(1) != H || x->value.dim(2) != W)
            throw std::invalid_argument("concat: spatial size mismatch");
        C += x->value.dim(0);
    }
    Tensor y({C, H, W});
    std::int64_t off = 0;
    for (Var x : xs) {
        std::copy(x->value.data(), x->value.data() + x->value.size(), y.data() + off);
        off += x->value.size();
    }
    return t.make(std::move(y), xs, [xs](Node& n) {
        std::int64_t off = 0;
        for (Var x : xs) {
            if (x->requires_grad) {
                Tensor g(x->value.shape());
                std::copy(n.grad.data() + off, n.grad.data() + off + g.size(), g.data());
                x->accumulate(std::move(g));
            }
            off += x->value.size();
        }
    });
}

Var bilinear_resize(Tape& t, Var x, int out_h, int out_w) {
    const int H = x->value.dim(1), W = x->value.dim(2);
    Tensor y = kernels::bilinear_resize(x->value, out_h, out_w);
    return t.make(std::move(y), {x}, [x, H, W](Node& n) {
        if (x->requires_grad)
            x->accumulate(kernels::bilinear_resize_backward(n.grad, H, W));
    });
}

Var maxpool2(Tape& t, Var x) {
    auto argmax = std::make_shared<std::vector<std::int64_t>>();
    Tensor y = kernels::maxpool2_forward(x->value, *argmax);
    const std::vector<int> in_shape = x->value.shape();
    return t.make(std::move(y), {x}, [x, argmax, in_shape](Node& n) {
        if (x->requires_grad)
            x->accumulate(kernels::maxpool2_backward(n.grad, *argmax, in_shape));
    });
}

Var channel_affine(Tape& t, Var x, std::vector<double> scale, std::vector<double> shift) {
    const int C = x->value.dim(0);
    if (static_cast<int>(scale.size()) != C || static_cast<int>(shift.size()) != C)
        throw std::invalid_argument("channel_affine: bad coefficient count");
    const std::int64_t plane = static_cast<std::int64_t>(x->value.dim(1)) * x->value.dim(2);
    Tensor y = x->value;
    for (int c = 0; c < C; ++c) {
        double* row = y.data() + c * plane;
        for (std::int64_t i = 0; i < plane; ++i) row[i] = row[i] * scale[c] + shift[c];
    }
    return t.make(std::move(y), {x}, [x, scale = std::move(scale), plane, C](Node& n) {
        if (!x->requires_grad) return;
        Tensor g(n.value.shape());
        for (int c = 0; c < C; ++c) {
            const double* src = n.grad.data() + c * plane;
            double* dst = g.data() + c * plane;
            for (std::int64_t i = 0; i < plane; ++i) dst[i] = src[i] * scale[c];
        }
        x->accumulate(std::move(g));
    });
}

Var mse_normalized(Tape& t, Var a, Var b) {
    if (!a->value.same_shape(b->value))
        throw std::invalid_argument("mse_normalized: shape mismatch");
    const double inv = 1.0 / static_cast<double>(a->value.size());
    double acc = 0.0;
    for (std::int64_t i = 0; i < a->value.size(); ++i) {
        const double d = a->value[i] - b->value[i];
        acc += d * d;
    }
    Tensor y(std::vector<int>{});
    y[0] = acc * inv;
    return t.make(std::move(y), {a, b}, [a, b, inv](Node& n) {
        const double s = 2.0 * inv * n.grad[0];
        Tensor g(a->value.shape());
        for (std::int64_t i = 0; i < g.size(); ++i)
            g[i] = s * (a->value[i] - b->value[i]);
        if (a->requires_grad) a->accumulate(g);
        if (b->requires_grad) b->accumulate_scaled(g, -1.0);
    });
}

Var gram(Tape& t, Var x) {
    Tensor g = kernels::gram(x->value);
    return t.make(std::move(g), {x}, [x](Node& n) {
        if (x->requires_grad)
            x->accumulate(kernels::gram_backward(n.grad, x->value));
    });
}

Var frobenius_sq_diff(Tape& t, Var a, const Tensor& b_const) {
    if (!a->value.same_shape(b_const))
        throw std::invalid_argument("frobenius_sq_diff: shape mismatch");
    double acc = 0.0;
    for (std::int64_t i = 0; i < a->value.size(); ++i) {
        const double d = a->value[i] - b_const[i];
        acc += d * d;
    }
    Tensor y(std::vector<int>{});
    y[0] = acc;
    return t.make(std::move(y), {a}, [a, b_const](Node& n) {
        if (!a->requires_grad) return;
        const double s = 2.0 * n.grad[0];
        Tensor g(a->value.shape());
        for (std::int64_t i = 0; i < g.size(); ++i)
            g[i] = s * (a->value[i] - b_const[i]);
        a->accumulate(std::move(g));
    });
}

// Mean of squared forward differences over all valid horizontal and
// vertical neighbor pairs.
Var tv_loss(Tape& t, Var img) {
    const int C = img->value.dim(0), H = img->value.dim(1), W = img->value.dim(2);
    if (H < 2 && W < 2)
        throw std::invalid_argument("tv_loss: need H>=2 or W>=2");
    const std::int64_t pairs =
        static_cast<std::int64_t>(C) * (static_cast<std::int64_t>(H) * (W - 1) +
                                        static_cast<std::int64_t>(H - 1) * W);
    const double inv = 1.0 / static_cast<double>(pairs);
    const Tensor& x = img->value;
    double acc = 0.0;
    for (int c = 0; c < C; ++c)
        for (int h = 0; h < H; ++h)
            for (int w = 0; w < W; ++w) {
                if (w + 1 < W) {
                    const double d = x.at3(c, h, w + 1) - x.at3(c, h, w);
                    acc += d * d;
                }
                if (h + 1 < H) {
                    const double d = x.at3(c, h + 1, w) - x.at3(c, h, w);
                    acc += d * d;
                }
            }
    Tensor y(std::vector<int>{});
    y[0] = acc * inv;
    return t.make(std::move(y), {img}, [img, C, H, W, inv](Node& n) {
        if (!img->requires_grad) return;
        const double s = 2.0 * inv * n.grad[0];
        const Tensor& x = img->value;
        Tensor g(x.shape());
        for (int c = 0; c < C; ++c)
            for (int h = 0; h < H; ++h)
                for (int w = 0; w < W; ++w) {
                    if (w + 1 < W) {
                        const double d = s * (x.at3(c, h, w + 1) - x.at3(c, h, w));
                        g.at3(c, h, w + 1) += d;
                        g.at3(c, h, w) -= d;
                    }
                    if (h + 1 < H) {
                        const double d = s * (x.at3(c, h + 1, w) - x.at3(c, h, w));
                        g.at3(c, h + 1, w) += d;
                        g.at3(c, h, w) -= d;
                    }
                }
        img->accumulate(std::move(g));
    });
}

Var weighted_sum(Tape& t, const std::vector<Var>& xs, const std::vector<double>& ws) {
    if (xs.size() != ws.size() || xs.empty())
        throw std::invalid_argument("weighted_sum: bad arity");
    double acc = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i)
        acc += ws[i] * xs[i]->value[0];
    Tensor y(std::vector<int>{});
    y[0] = acc;
    return t.make(std::move(y), xs, [xs, ws](Node& n) {
        Tensor g(std::vector<int>{});
        for (std::size_t i = 0; i < xs.size(); ++i) {
            if (!xs[i]->requires_grad) continue;
            g[0] = ws[i] * n.grad[0];
            xs[i]->accumulate(g);
        }
    });
}

} // namespace ops

} // namespace hrst

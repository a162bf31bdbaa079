#pragma once

#include <functional>
#include <memory>
#include <set>
#include <vector>

#include "hrst/tensor.hpp"

namespace hrst {

// Reverse-mode autodiff over Tensor ops. A Tape owns all nodes created
// through it; creation order is a valid topological order, so backward()
// is a single reverse sweep. One tape per optimization step.
class Tape;

struct Node {
    Tensor value;
    Tensor grad;            // allocated lazily on first accumulation
    bool requires_grad = false;
    std::function<void(Node&)> backward_fn; // pulls from this->grad into parents
    std::vector<Node*> parents;

    void accumulate(const Tensor& g);
    void accumulate(Tensor&& g); // first accumulation steals the buffer
    void accumulate_scaled(const Tensor& g, double s);
};

using Var = Node*;

class Tape {
public:
    Var leaf(Tensor value, bool requires_grad);
    Var make(Tensor value, std::vector<Var> parents,
             std::function<void(Node&)> backward_fn);

    // Reverse sweep from `loss` (a scalar node), seeding d loss/d loss = 1.
    void backward(Var loss);

    std::size_t node_count() const { return nodes_.size(); }

private:
    std::vector<std::unique_ptr<Node>> nodes_;
};

// ---- ops ----
namespace ops {

Var conv2d(Tape& t, Var x, Var w, Var b, int stride, int pad);
Var relu(Tape& t, Var x);
Var sigmoid(Tape& t, Var x);
Var add(Tape& t, Var a, Var b);
Var concat_channels(Tape& t, const std::vector<Var>& xs);
Var bilinear_resize(Tape& t, Var x, int out_h, int out_w);
Var maxpool2(Tape& t, Var x);
// y = x * scale[c] + shift[c], per channel of a [C,H,W] tensor
Var channel_affine(Tape& t, Var x, std::vector<double> scale, std::vector<double> shift);

// scalar-valued ops (value is a rank-0 tensor, shape {})
Var mse_normalized(Tape& t, Var a, Var b);          // sum((a-b)^2)/numel
Var gram(Tape& t, Var x);                            // [C,H,W] -> [C,C]
Var frobenius_sq_diff(Tape& t, Var a, const Tensor& b_const);
Var tv_loss(Tape& t, Var img);
Var weighted_sum(Tape& t, const std::vector<Var>& xs, const std::vector<double>& ws);

inline double scalar(Var v) { return v->value[0]; }

} // namespace ops

} // namespace hrst

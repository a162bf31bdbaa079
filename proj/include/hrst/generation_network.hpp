#pragma once

#include <map>
#include <random>
#include <string>
#include <vector>

#include "hrst/autograd.hpp"
#include "hrst/image_io.hpp"
#include "hrst/tensor.hpp"

namespace hrst {

// Parallel multi-resolution generation network: a full-resolution stem,
// branches spawned at fusion points by stride-2 convolutions, bottleneck
// residual segments per branch, bidirectional concat fusion with 1x1
// channel projection, and a bounded 3-channel output head. All convs use
// 3x3 kernels (1x1 only for channel projection/restoration); upsampling
// is bilinear; padding is zero.
struct GenerationNetworkSpec {
    int base_channels = 16;
    std::vector<int> branch_scales = {1, 2, 4}; // downsample factors
    int blocks_per_segment = 2;
    int fusion_count = 3;

    void validate() const;
    int width(std::size_t branch) const { return base_channels * branch_scales[branch]; }
    int max_scale() const { return branch_scales.back(); }
};

// Residual bottleneck: x + expand(relu(reduce(x))), where reduce is a
// 3x3 conv to a quarter of the channels and expand a 1x1 conv back.
// Zero weights make it an exact identity.
Var bottleneck_block(Tape& tape, Var x, Var reduce_w, Var reduce_b, Var expand_w, Var expand_b);

class GenerationNetwork {
public:
    GenerationNetwork(GenerationNetworkSpec spec, std::uint64_t seed);

    const GenerationNetworkSpec& spec() const { return spec_; }
    std::uint64_t seed() const { return seed_; }

    std::vector<NamedTensor>& parameters() { return params_; }
    const std::vector<NamedTensor>& parameters() const { return params_; }

    // Builds the forward graph. Input [3,H,W] with H,W divisible by the
    // max branch scale; output [3,H,W] in [0,1]. When param_nodes is
    // given, one leaf per parameter (requires_grad) is created and
    // returned in registration order.
    Var forward(Tape& tape, Var input, std::vector<Var>* param_nodes = nullptr) const;

    // Convenience eval: feeds img.data directly, returns a unit-range image.
    ImageTensor forward(const ImageTensor& img) const;

    // Replaces all parameter values (same names/shapes required).
    void load_parameters(const std::vector<NamedTensor>& params);

private:
    GenerationNetworkSpec spec_;
    std::uint64_t seed_ = 0;
    std::vector<NamedTensor> params_;
    std::map<std::string, std::size_t> index_;

    void register_conv(const std::string& name, int cout, int cin, int k,
                       std::mt19937_64& rng, double gain = 1.0);
    void build(std::uint64_t seed);
    void audit() const;

    struct ParamCursor;
};

} // namespace hrst

#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "hrst/autograd.hpp"
#include "hrst/image_io.hpp"
#include "hrst/tensor.hpp"

namespace hrst {

// Frozen 19-layer VGG feature extractor. Exposes the activations of the
// named convolution layers (conv1_1 .. conv5_4, taken after the ReLU).
// Weights come either from a serialized weight file (see
// tools/export_vgg19_weights.py) or from a seeded deterministic
// initialization for fully offline runs.
class FeatureExtractor {
public:
    // Loads convolution weights from an HRTC container holding float32
    // tensors named conv1_1.weight / conv1_1.bias / ... If
    // expected_sha256 is non-empty the file hash must match.
    static FeatureExtractor load_file(const std::string& path,
                                      const std::string& expected_sha256 = "");
    // He-initialized frozen weights from a seed; deterministic.
    static FeatureExtractor seeded(std::uint64_t seed);

    // Keeps only the first n convolution layers (tests use a 2-layer
    // truncation for gradient checks).
    FeatureExtractor truncated(int n_convs) const;

    bool has_layer(const std::string& name) const;
    static const std::vector<std::string>& layer_names();

    // img must be in normalized range. Returns post-ReLU activations of
    // the requested layers; the forward pass stops at the deepest one.
    std::map<std::string, Tensor> extract(const ImageTensor& img,
                                          const std::set<std::string>& layers) const;
    // Autograd variant: gradients flow to `img` only, never into the
    // extractor weights.
    std::map<std::string, Var> extract(Tape& tape, Var img,
                                       const std::set<std::string>& layers) const;

    // FNV-1a over the raw weight bytes; used to assert the extractor
    // stays frozen across training.
    std::string weights_fingerprint() const;

    const std::string& source() const { return source_; }

private:
    struct ConvLayer {
        std::string name;
        int in_ch = 0, out_ch = 0;
        bool pool_before = false; // 2x2 max pool applied before this conv
        Tensor weight;            // [out,in,3,3]
        Tensor bias;              // [out]
    };
    std::vector<ConvLayer> convs_;
    std::string source_; // "file:<path>" or "seeded:<seed>"

    static std::vector<ConvLayer> architecture();
};

} // namespace hrst

#pragma once

#include <map>
#include <string>
#include <vector>

#include "hrst/autograd.hpp"
#include "hrst/image_io.hpp"
#include "hrst/vgg.hpp"

namespace hrst {

struct LossConfig {
    std::string content_layer = "conv4_2";
    // ordered per-layer style weights
    std::vector<std::pair<std::string, double>> style_layers = {
        {"conv1_1", 0.1}, {"conv2_1", 0.2}, {"conv3_1", 0.4},
        {"conv4_1", 0.8}, {"conv5_1", 1.6},
    };
    double lambda_content = 80.0;
    double lambda_style = 1.0;
    double lambda_tv = 1e-6;

    void validate() const;
    std::set<std::string> all_layers() const;
    std::set<std::string> style_layer_names() const;
};

struct LossBreakdown {
    double content_raw = 0, style_raw = 0, tv_raw = 0;
    double content_weighted = 0, style_weighted = 0, tv_weighted = 0;
    double total = 0;
};

namespace losses {

// Plain tensor-level losses (no autograd). Feature maps are [C,H,W].
double content_loss(const Tensor& y_feat, const Tensor& yhat_feat);
Tensor gram_matrix(const Tensor& feat);
double style_loss_layer(const Tensor& y_feat, const Tensor& yhat_feat);
double total_style_loss(const std::map<std::string, Tensor>& feats_y,
                        const std::map<std::string, Tensor>& feats_yhat,
                        const LossConfig& config);
double tv_loss(const Tensor& img);

// Full weighted objective evaluated end to end through the extractor.
std::pair<double, LossBreakdown> total_loss(const ImageTensor& content,
                                            const ImageTensor& style,
                                            const ImageTensor& output,
                                            const FeatureExtractor& fx,
                                            const LossConfig& config);

// Precomputed constant targets for the per-step graph.
struct Targets {
    Tensor content_feat;                         // at config.content_layer
    std::map<std::string, Tensor> style_grams;   // cached once per job
};
Targets make_targets(const ImageTensor& content, const ImageTensor& style,
                     const FeatureExtractor& fx, const LossConfig& config);

// Builds the weighted objective for an output-image node already in
// normalized range; `output_unit` is the same image in [0,1] for the TV
// term. Returns the total node; fills `bd` from the node values.
Var build_objective(Tape& tape, Var output_norm, Var output_unit,
                    const Targets& targets, const FeatureExtractor& fx,
                    const LossConfig& config, LossBreakdown* bd);

} // namespace losses

} // namespace hrst

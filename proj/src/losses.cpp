#include "hrst/losses.hpp"

#include "hrst/errors.hpp"
#include "hrst/kernels.hpp"

namespace hrst {

void LossConfig::validate() const {
    if (style_layers.empty()) throw ConfigError("LossConfig: style_layers empty");
    if (lambda_content < 0 || lambda_style < 0 || lambda_tv < 0)
        throw ConfigError("LossConfig: negative lambda");
    for (const auto& [name, w] : style_layers)
        if (w < 0) throw ConfigError("LossConfig: negative weight for " + name);
}

std::set<std::string> LossConfig::style_layer_names() const {
    std::set<std::string> s;
    for (const auto& [name, w] : style_layers) s.insert(name);
    return s;
}

std::set<std::string> LossConfig::all_layers() const {
    auto s = style_layer_names();
    s.insert(content_layer);
    return s;
}

namespace losses {

double content_loss(const Tensor& y_feat, const Tensor& yhat_feat) {
    if (!y_feat.same_shape(yhat_feat))
        throw ShapeMismatch("content_loss: feature shapes differ: " +
                            Tensor::shape_str(y_feat.shape()) + " vs " +
                            Tensor::shape_str(yhat_feat.shape()));
    double acc = 0.0;
    for (std::int64_t i = 0; i < y_feat.size(); ++i) {
        const double d = yhat_feat[i] - y_feat[i];
        acc += d * d;
    }
    return acc / static_cast<double>(y_feat.size());
}

Tensor gram_matrix(const Tensor& feat) {
    return kernels::gram(feat);
}

double style_loss_layer(const Tensor& y_feat, const Tensor& yhat_feat) {
    if (y_feat.dim(0) != yhat_feat.dim(0))
        throw ChannelMismatch("style_loss_layer: channel counts differ");
    const Tensor gy = kernels::gram(y_feat);
    const Tensor gh = kernels::gram(yhat_feat);
    double acc = 0.0;
    for (std::int64_t i = 0; i < gy.size(); ++i) {
        const double d = gy[i] - gh[i];
        acc += d * d;
    }
    return acc;
}

double total_style_loss(const std::map<std::string, Tensor>& feats_y,
                        const std::map<std::string, Tensor>& feats_yhat,
                        const LossConfig& config) {
    double acc = 0.0;
    for (const auto& [name, w] : config.style_layers) {
        auto iy = feats_y.find(name);
        auto ih = feats_yhat.find(name);
        if (iy == feats_y.end() || ih == feats_yhat.end())
            throw MissingLayer("total_style_loss: missing features for " + name);
        acc += w * style_loss_layer(iy->second, ih->second);
    }
    return acc;
}

double tv_loss(const Tensor& img) {
    Tape tape;
    Var x = tape.leaf(img, false);
    return ops::scalar(ops::tv_loss(tape, x));
}

Targets make_targets(const ImageTensor& content, const ImageTensor& style,
                     const FeatureExtractor& fx, const LossConfig& config) {
    config.validate();
    Targets t;
    const ImageTensor content_n =
        content.range == PixelRange::Normalized ? content : image_io::normalize(content);
    const ImageTensor style_n =
        style.range == PixelRange::Normalized ? style : image_io::normalize(style);
    t.content_feat = fx.extract(content_n, {config.content_layer}).at(config.content_layer);
    auto style_feats = fx.extract(style_n, config.style_layer_names());
    for (auto& [name, feat] : style_feats)
        t.style_grams.emplace(name, kernels::gram(feat));
    return t;
}

Var build_objective(Tape& tape, Var output_norm, Var output_unit,
                    const Targets& targets, const FeatureExtractor& fx,
                    const LossConfig& config, LossBreakdown* bd) {
    auto feats = fx.extract(tape, output_norm, config.all_layers());

    Var content_target = tape.leaf(targets.content_feat, false);
    Var content = ops::mse_normalized(tape, feats.at(config.content_layer), content_target);

    std::vector<Var> style_terms;
    std::vector<double> style_weights;
    for (const auto& [name, w] : config.style_layers) {
        Var g = ops::gram(tape, feats.at(name));
        style_terms.push_back(ops::frobenius_sq_diff(tape, g, targets.style_grams.at(name)));
        style_weights.push_back(w);
    }
    Var style = ops::weighted_sum(tape, style_terms, style_weights);
    Var tv = ops::tv_loss(tape, output_unit);

    Var total = ops::weighted_sum(tape, {content, style, tv},
                                  {config.lambda_content, config.lambda_style, config.lambda_tv});
    if (bd) {
        bd->content_raw = ops::scalar(content);
        bd->style_raw = ops::scalar(style);
        bd->tv_raw = ops::scalar(tv);
        bd->content_weighted = config.lambda_content * bd->content_raw;
        bd->style_weighted = config.lambda_style * bd->style_raw;
        bd->tv_weighted = config.lambda_tv * bd->tv_raw;
        bd->total = ops::scalar(total);
    }
    return total;
}

std::pair<double, LossBreakdown> total_loss(const ImageTensor& content,
                                            const ImageTensor& style,
                                            const ImageTensor& output,
                                            const FeatureExtractor& fx,
                                            const LossConfig& config) {
    Targets targets = make_targets(content, style, fx, config);
    const ImageTensor out_unit =
        output.range == PixelRange::Unit ? output : image_io::denormalize(output);
    const ImageTensor out_norm = image_io::normalize(out_unit);
    Tape tape;
    Var norm_node = tape.leaf(out_norm.data, false);
    Var unit_node = tape.leaf(out_unit.data, false);
    LossBreakdown bd;
    Var total = build_objective(tape, norm_node, unit_node, targets, fx, config, &bd);
    return {ops::scalar(total), bd};
}

} // namespace losses

} // namespace hrst

#include "hrst/vgg.hpp"

#include <cmath>
#include <random>

#include "hrst/errors.hpp"
#include "hrst/serialize.hpp"

namespace hrst {

namespace {

struct LayerDef {
    const char* name;
    int out_ch;
    bool pool_before;
};

// VGG19 convolutional stack; pools sit between the blocks.
constexpr LayerDef kLayers[] = {
    {"conv1_1", 64, false},  {"conv1_2", 64, false},
    {"conv2_1", 128, true},  {"conv2_2", 128, false},
    {"conv3_1", 256, true},  {"conv3_2", 256, false},
    {"conv3_3", 256, false}, {"conv3_4", 256, false},
    {"conv4_1", 512, true},  {"conv4_2", 512, false},
    {"conv4_3", 512, false}, {"conv4_4", 512, false},
    {"conv5_1", 512, true},  {"conv5_2", 512, false},
    {"conv5_3", 512, false}, {"conv5_4", 512, false},
};

} // namespace

std::vector<FeatureExtractor::ConvLayer> FeatureExtractor::architecture() {
    std::vector<ConvLayer> convs;
    int in_ch = 3;
    for (const auto& def : kLayers) {
        ConvLayer l;
        l.name = def.name;
        l.in_ch = in_ch;
        l.out_ch = def.out_ch;
        l.pool_before = def.pool_before;
        convs.push_back(std::move(l));
        in_ch = def.out_ch;
    }
    return convs;
}

const std::vector<std::string>& FeatureExtractor::layer_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> v;
        for (const auto& def : kLayers) v.emplace_back(def.name);
        return v;
    }();
    return names;
}

FeatureExtractor FeatureExtractor::load_file(const std::string& path,
                                             const std::string& expected_sha256) {
    if (!expected_sha256.empty()) {
        const std::string actual = serialize::sha256_file(path);
        if (actual != expected_sha256)
            throw ExtractorUnavailable("extractor weight file hash mismatch for " + path +
                                       ": expected " + expected_sha256 + ", got " + actual);
    }
    serialize::Container c;
    try {
        c = serialize::read_container(path);
    } catch (const std::exception& e) {
        throw ExtractorUnavailable(std::string("cannot load extractor weights: ") + e.what());
    }
    std::map<std::string, Tensor> by_name;
    for (auto& nt : c.tensors) by_name.emplace(nt.name, std::move(nt.tensor));

    FeatureExtractor fx;
    fx.convs_ = architecture();
    fx.source_ = "file:" + path;
    for (auto& l : fx.convs_) {
        auto wi = by_name.find(l.name + ".weight");
        auto bi = by_name.find(l.name + ".bias");
        if (wi == by_name.end() || bi == by_name.end())
            throw ExtractorUnavailable("weight file misses tensors for layer " + l.name);
        const std::vector<int> want{l.out_ch, l.in_ch, 3, 3};
        if (wi->second.shape() != want)
            throw ExtractorUnavailable("bad weight shape for " + l.name + ": got " +
                                       Tensor::shape_str(wi->second.shape()));
        l.weight = std::move(wi->second);
        l.bias = std::move(bi->second);
    }
    return fx;
}

FeatureExtractor FeatureExtractor::seeded(std::uint64_t seed) {
    FeatureExtractor fx;
    fx.convs_ = architecture();
    fx.source_ = "seeded:" + std::to_string(seed);
    std::mt19937_64 rng(seed);
    for (auto& l : fx.convs_) {
        l.weight = Tensor({l.out_ch, l.in_ch, 3, 3});
        l.bias = Tensor({l.out_ch});
        const double stddev = std::sqrt(2.0 / (static_cast<double>(l.in_ch) * 9));
        std::normal_distribution<double> dist(0.0, stddev);
        for (std::int64_t i = 0; i < l.weight.size(); ++i) l.weight[i] = dist(rng);
    }
    return fx;
}

FeatureExtractor FeatureExtractor::truncated(int n_convs) const {
    if (n_convs < 1 || n_convs > static_cast<int>(convs_.size()))
        throw ConfigError("truncated: bad conv count");
    FeatureExtractor fx;
    fx.convs_.assign(convs_.begin(), convs_.begin() + n_convs);
    fx.source_ = source_ + ":truncated" + std::to_string(n_convs);
    return fx;
}

bool FeatureExtractor::has_layer(const std::string& name) const {
    for (const auto& l : convs_)
        if (l.name == name) return true;
    return false;
}

std::map<std::string, Var> FeatureExtractor::extract(Tape& tape, Var img,
                                                     const std::set<std::string>& layers) const {
    int deepest = -1;
    for (const auto& name : layers) {
        bool found = false;
        for (std::size_t i = 0; i < convs_.size(); ++i)
            if (convs_[i].name == name) {
                deepest = std::max(deepest, static_cast<int>(i));
                found = true;
            }
        if (!found) throw UnknownLayer("extractor has no layer named " + name);
    }
    std::map<std::string, Var> out;
    Var x = img;
    for (int i = 0; i <= deepest; ++i) {
        const auto& l = convs_[static_cast<std::size_t>(i)];
        if (l.pool_before) x = ops::maxpool2(tape, x);
        Var w = tape.leaf(l.weight, false); // frozen: no grad into extractor
        Var b = tape.leaf(l.bias, false);
        x = ops::relu(tape, ops::conv2d(tape, x, w, b, 1, 1));
        if (layers.count(l.name)) out.emplace(l.name, x);
    }
    return out;
}

std::map<std::string, Tensor> FeatureExtractor::extract(
    const ImageTensor& img, const std::set<std::string>& layers) const {
    if (img.range != PixelRange::Normalized)
        throw WrongRangeMode("extract: image must be normalized");
    Tape tape;
    Var x = tape.leaf(img.data, false);
    auto vars = extract(tape, x, layers);
    std::map<std::string, Tensor> out;
    for (auto& [name, v] : vars) out.emplace(name, v->value);
    return out;
}

std::string FeatureExtractor::weights_fingerprint() const {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](const void* p, std::size_t n) {
        const auto* b = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= b[i];
            h *= 1099511628211ull;
        }
    };
    for (const auto& l : convs_) {
        mix(l.name.data(), l.name.size());
        mix(l.weight.data(), static_cast<std::size_t>(l.weight.size()) * sizeof(double));
        mix(l.bias.data(), static_cast<std::size_t>(l.bias.size()) * sizeof(double));
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

} // namespace hrst

#include "hrst/evaluation.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <thread>

#include "hrst/errors.hpp"

namespace hrst::evaluation {

Tensor to_grayscale(const ImageTensor& img) {
    if (img.range != PixelRange::Unit)
        throw WrongRangeMode("to_grayscale: image must be in unit range");
    const int H = img.height(), W = img.width();
    Tensor g({H, W});
    for (int h = 0; h < H; ++h)
        for (int w = 0; w < W; ++w)
            g.at2(h, w) = 0.299 * img.data.at3(0, h, w) + 0.587 * img.data.at3(1, h, w) +
                          0.114 * img.data.at3(2, h, w);
    return g;
}

EdgeMap sobel_contour(const Tensor& gray) {
    if (gray.rank() != 2) throw ShapeMismatch("sobel_contour: expected [H,W]");
    const int H = gray.dim(0), W = gray.dim(1);
    if (H < 3 || W < 3)
        throw TooSmall("sobel_contour: image must be at least 3x3, got " + std::to_string(H) +
                       "x" + std::to_string(W));
    auto at = [&](int h, int w) { // replicate padding
        h = std::clamp(h, 0, H - 1);
        w = std::clamp(w, 0, W - 1);
        return gray.at2(h, w);
    };
    EdgeMap e;
    e.data = Tensor({H, W});
    for (int h = 0; h < H; ++h)
        for (int w = 0; w < W; ++w) {
            const double gx = -at(h - 1, w - 1) + at(h - 1, w + 1) - 2 * at(h, w - 1) +
                              2 * at(h, w + 1) - at(h + 1, w - 1) + at(h + 1, w + 1);
            const double gy = -at(h - 1, w - 1) - 2 * at(h - 1, w) - at(h - 1, w + 1) +
                              at(h + 1, w - 1) + 2 * at(h + 1, w) + at(h + 1, w + 1);
            e.data.at2(h, w) = std::sqrt(gx * gx + gy * gy);
        }
    return e;
}

double contour_similarity(const EdgeMap& a, const EdgeMap& b) {
    if (!a.data.same_shape(b.data))
        throw ShapeMismatch("contour_similarity: edge map shapes differ");
    double max_a = 0, max_b = 0;
    for (std::int64_t i = 0; i < a.data.size(); ++i) {
        max_a = std::max(max_a, a.data[i]);
        max_b = std::max(max_b, b.data[i]);
    }
    if (max_a == 0 && max_b == 0) return 1.0;
    if (max_a == 0 || max_b == 0) return 0.0;
    double dot = 0, na = 0, nb = 0;
    for (std::int64_t i = 0; i < a.data.size(); ++i) {
        const double va = a.data[i] / max_a;
        const double vb = b.data[i] / max_b;
        dot += va * vb;
        na += va * va;
        nb += vb * vb;
    }
    return dot / std::sqrt(na * nb);
}

double grayscale_histogram_distance(const ImageTensor& a, const ImageTensor& b) {
    constexpr int kBins = 32;
    auto hist = [](const ImageTensor& img) {
        Tensor g = to_grayscale(img);
        std::vector<double> h(kBins, 0.0);
        for (std::int64_t i = 0; i < g.size(); ++i) {
            int bin = static_cast<int>(g[i] * kBins);
            h[static_cast<std::size_t>(std::clamp(bin, 0, kBins - 1))] += 1.0;
        }
        for (auto& v : h) v /= static_cast<double>(g.size());
        return h;
    };
    const auto ha = hist(a), hb = hist(b);
    double d = 0;
    for (int i = 0; i < kBins; ++i) d += std::abs(ha[i] - hb[i]);
    return d;
}

ImageTensor synthetic_image(int h, int w, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    // a few random smooth blobs per channel, so contours are non-trivial
    ImageTensor img;
    img.data = Tensor({3, h, w});
    img.range = PixelRange::Unit;
    for (int c = 0; c < 3; ++c) {
        const double fx = 1.0 + 3.0 * dist(rng), fy = 1.0 + 3.0 * dist(rng);
        const double px = dist(rng) * 6.28, py = dist(rng) * 6.28;
        const double cx = dist(rng), cy = dist(rng), r = 0.1 + 0.3 * dist(rng);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const double u = static_cast<double>(x) / w, v = static_cast<double>(y) / h;
                double val = 0.5 + 0.25 * std::sin(fx * 6.28 * u + px) *
                                       std::cos(fy * 6.28 * v + py);
                if ((u - cx) * (u - cx) + (v - cy) * (v - cy) < r * r) val = 1.0 - val;
                img.data.at3(c, y, x) = std::clamp(val, 0.0, 1.0);
            }
    }
    return img;
}

std::string device_descriptor() {
    std::string cpu = "unknown-cpu";
    std::ifstream is("/proc/cpuinfo");
    std::string line;
    while (std::getline(is, line)) {
        if (line.rfind("model name", 0) == 0) {
            const auto pos = line.find(':');
            if (pos != std::string::npos) cpu = line.substr(pos + 2);
            break;
        }
    }
    return cpu + " (" + std::to_string(std::thread::hardware_concurrency()) + " threads)";
}

BenchmarkReport run_benchmark(const std::vector<std::pair<int, int>>& resolutions, int steps,
                              const GenerationNetworkSpec& net_spec, const LossConfig& loss_cfg,
                              const FeatureExtractor& fx) {
    BenchmarkReport report;
    const std::string device = device_descriptor();
    for (const auto& [h, w] : resolutions) {
        if (h < 4 || w < 4 || h % 4 != 0 || w % 4 != 0)
            throw ConfigError("benchmark resolution " + std::to_string(h) + "x" +
                              std::to_string(w) + " is not divisible by 4");
        ImageTensor content = synthetic_image(h, w, 11);
        ImageTensor style = synthetic_image(h, w, 23);
        TrainingConfig tc;
        tc.steps = steps;
        const auto t0 = std::chrono::steady_clock::now();
        run_transfer(content, style, net_spec, loss_cfg, tc, fx);
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        report.rows.push_back({h, w, steps, secs, device});
    }
    return report;
}

void write_benchmark_csv(const BenchmarkReport& report, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw RuntimeFailure("cannot write " + path);
    os << "height,width,steps,wall_seconds,device\n";
    char buf[128];
    for (const auto& r : report.rows) {
        std::snprintf(buf, sizeof(buf), "%d,%d,%d,%.3f,", r.height, r.width, r.steps,
                      r.wall_seconds);
        os << buf << '"' << r.device << "\"\n";
    }
}

} // namespace hrst::evaluation

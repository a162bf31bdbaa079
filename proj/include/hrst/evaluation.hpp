#pragma once

#include <string>
#include <vector>

#include "hrst/generation_network.hpp"
#include "hrst/losses.hpp"
#include "hrst/trainer.hpp"

namespace hrst {

// [H,W] Sobel gradient magnitudes, non-negative.
struct EdgeMap {
    Tensor data; // [H,W]
};

struct BenchmarkRow {
    int height = 0, width = 0;
    int steps = 0;
    double wall_seconds = 0;
    std::string device;
};

struct BenchmarkReport {
    std::vector<BenchmarkRow> rows;
};

namespace evaluation {

// Rec.601 luminance of a unit-range image.
Tensor to_grayscale(const ImageTensor& img);

// 3x3 Sobel magnitude with replicate padding at the borders.
EdgeMap sobel_contour(const Tensor& gray);

// Normalized cross-correlation of max-normalized edge maps, in [0,1].
// Two all-zero maps compare as 1.0; zero vs non-zero as 0.0.
double contour_similarity(const EdgeMap& a, const EdgeMap& b);

// Auxiliary statistic: L1 distance between 32-bin grayscale histograms.
double grayscale_histogram_distance(const ImageTensor& a, const ImageTensor& b);

// Runs a full transfer per resolution on deterministic synthetic images
// and records wall time. Sequential on purpose.
BenchmarkReport run_benchmark(const std::vector<std::pair<int, int>>& resolutions, int steps,
                              const GenerationNetworkSpec& net_spec, const LossConfig& loss_cfg,
                              const FeatureExtractor& fx);

std::string device_descriptor();

void write_benchmark_csv(const BenchmarkReport& report, const std::string& path);

// Deterministic smooth synthetic test image.
ImageTensor synthetic_image(int h, int w, std::uint64_t seed);

} // namespace evaluation

} // namespace hrst

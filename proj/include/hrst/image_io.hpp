#pragma once

#include <array>
#include <string>

#include "hrst/errors.hpp"
#include "hrst/tensor.hpp"

namespace hrst {

// ImageNet statistics of the pretrained loss network; normalization with
// these is required before feature extraction.
inline constexpr std::array<double, 3> kNormMean{0.485, 0.456, 0.406};
inline constexpr std::array<double, 3> kNormStd{0.229, 0.224, 0.225};

enum class PixelRange { Unit, Normalized };

// 3-channel RGB raster as [3,H,W] with a declared value range.
struct ImageTensor {
    Tensor data;                       // [3,H,W]
    PixelRange range = PixelRange::Unit;

    int height() const { return data.dim(1); }
    int width() const { return data.dim(2); }
};

struct ResizePolicy {
    int content_height = 500;
    int content_width = 500;
    // style images always keep their original resolution
};

namespace image_io {

// Decodes an 8-bit PNG or JPEG into unit range, RGB channel order.
// Grayscale files are replicated to 3 channels.
ImageTensor load_image(const std::string& path);
// Quantizes to 8 bits and writes PNG or JPEG (by extension).
void save_image(const ImageTensor& img, const std::string& path);

ImageTensor prepare_content(const ImageTensor& img, const ResizePolicy& policy);
// Keeps the original resolution. Sets *warned when either style dimension
// differs from the content dimension by more than 4x.
ImageTensor prepare_style(const ImageTensor& img, int content_h, int content_w,
                          bool* warned = nullptr);

ImageTensor normalize(const ImageTensor& img);
ImageTensor denormalize(const ImageTensor& img);

ImageTensor resize_bilinear(const ImageTensor& img, int out_h, int out_w);

} // namespace image_io

} // namespace hrst

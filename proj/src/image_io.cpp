#include "hrst/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>

#include <opencv2/imgcodecs.hpp>

#include "hrst/kernels.hpp"

namespace hrst::image_io {

namespace {

std::string lower_ext(const std::string& path) {
    std::string ext = std::filesystem::path(path).extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return ext;
}

bool supported_ext(const std::string& ext) {
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

} // namespace

ImageTensor load_image(const std::string& path) {
    if (!std::filesystem::exists(path))
        throw UnreadableFile("cannot read image file: " + path);
    if (!supported_ext(lower_ext(path)))
        throw UnsupportedFormat("unsupported image format (want PNG/JPEG): " + path);
    cv::Mat m = cv::imread(path, cv::IMREAD_COLOR); // BGR, replicates grayscale
    if (m.empty())
        throw UnreadableFile("cannot decode image file: " + path);
    ImageTensor img;
    img.data = Tensor({3, m.rows, m.cols});
    img.range = PixelRange::Unit;
    for (int h = 0; h < m.rows; ++h) {
        const auto* row = m.ptr<cv::Vec3b>(h);
        for (int w = 0; w < m.cols; ++w) {
            img.data.at3(0, h, w) = row[w][2] / 255.0; // R
            img.data.at3(1, h, w) = row[w][1] / 255.0; // G
            img.data.at3(2, h, w) = row[w][0] / 255.0; // B
        }
    }
    return img;
}

void save_image(const ImageTensor& img, const std::string& path) {
    if (!supported_ext(lower_ext(path)))
        throw UnsupportedFormat("unsupported output format (want PNG/JPEG): " + path);
    const ImageTensor& u = img.range == PixelRange::Unit ? img : denormalize(img);
    cv::Mat m(u.height(), u.width(), CV_8UC3);
    for (int h = 0; h < m.rows; ++h) {
        auto* row = m.ptr<cv::Vec3b>(h);
        for (int w = 0; w < m.cols; ++w) {
            for (int c = 0; c < 3; ++c) {
                double v = std::clamp(u.data.at3(c, h, w), 0.0, 1.0);
                row[w][2 - c] = static_cast<unsigned char>(std::lround(v * 255.0));
            }
        }
    }
    if (!cv::imwrite(path, m))
        throw RuntimeFailure("failed to write image: " + path);
}

ImageTensor resize_bilinear(const ImageTensor& img, int out_h, int out_w) {
    ImageTensor out;
    out.range = img.range;
    out.data = kernels::bilinear_resize(img.data, out_h, out_w);
    return out;
}

ImageTensor prepare_content(const ImageTensor& img, const ResizePolicy& policy) {
    if (policy.content_height <= 0 || policy.content_width <= 0 ||
        policy.content_height % 4 != 0 || policy.content_width % 4 != 0)
        throw InvalidTarget("content target dimensions must be positive and divisible by 4, got " +
                            std::to_string(policy.content_height) + "x" +
                            std::to_string(policy.content_width));
    if (img.height() == policy.content_height && img.width() == policy.content_width)
        return img;
    return resize_bilinear(img, policy.content_height, policy.content_width);
}

ImageTensor prepare_style(const ImageTensor& img, int content_h, int content_w,
                          bool* warned) {
    const double rh = static_cast<double>(img.height()) / content_h;
    const double rw = static_cast<double>(img.width()) / content_w;
    const bool mismatch = rh > 4.0 || rh < 0.25 || rw > 4.0 || rw < 0.25;
    if (warned) *warned = mismatch;
    return img;
}

ImageTensor normalize(const ImageTensor& img) {
    if (img.range != PixelRange::Unit)
        throw WrongRangeMode("normalize: image is not in unit range");
    ImageTensor out;
    out.range = PixelRange::Normalized;
    out.data = img.data;
    const int H = img.height(), W = img.width();
    for (int c = 0; c < 3; ++c) {
        double* p = out.data.data() + static_cast<std::int64_t>(c) * H * W;
        for (std::int64_t i = 0; i < static_cast<std::int64_t>(H) * W; ++i)
            p[i] = (p[i] - kNormMean[c]) / kNormStd[c];
    }
    return out;
}

ImageTensor denormalize(const ImageTensor& img) {
    if (img.range != PixelRange::Normalized)
        throw WrongRangeMode("denormalize: image is not in normalized range");
    ImageTensor out;
    out.range = PixelRange::Unit;
    out.data = img.data;
    const int H = img.height(), W = img.width();
    for (int c = 0; c < 3; ++c) {
        double* p = out.data.data() + static_cast<std::int64_t>(c) * H * W;
        for (std::int64_t i = 0; i < static_cast<std::int64_t>(H) * W; ++i)
            p[i] = std::clamp(p[i] * kNormStd[c] + kNormMean[c], 0.0, 1.0);
    }
    return out;
}

} // namespace hrst::image_io

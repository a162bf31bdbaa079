#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "hrst/image_io.hpp"
#include "oracles.hpp"

using namespace hrst;
namespace fs = std::filesystem;

namespace {

fs::path tmp_png(const std::string& name) {
    return fs::temp_directory_path() / ("hrst_io_" + name + ".png");
}

ImageTensor constant_image(int h, int w, double v) {
    ImageTensor img;
    img.data = Tensor({3, h, w});
    img.data.fill(v);
    img.range = PixelRange::Unit;
    return img;
}

} // namespace

TEST_CASE("all-white and all-black PNGs round-trip to 1.0 / 0.0") {
    for (double v : {1.0, 0.0}) {
        const auto path = tmp_png(v == 1.0 ? "white" : "black");
        image_io::save_image(constant_image(2, 2, v), path.string());
        const ImageTensor back = image_io::load_image(path.string());
        REQUIRE(back.data.shape() == std::vector<int>{3, 2, 2});
        for (std::int64_t i = 0; i < back.data.size(); ++i) CHECK(back.data[i] == v);
        fs::remove(path);
    }
}

TEST_CASE("save/load round trip of a random image stays within 1/255") {
    std::mt19937_64 rng(11);
    ImageTensor img;
    img.data = oracle::random_tensor({3, 17, 23}, rng, 0.0, 1.0);
    img.range = PixelRange::Unit;
    const auto path = tmp_png("roundtrip");
    image_io::save_image(img, path.string());
    const ImageTensor back = image_io::load_image(path.string());
    CHECK(oracle::max_abs_diff(img.data, back.data) <= 1.0 / 255.0 + 1e-12);
    fs::remove(path);
}

TEST_CASE("load_image rejects missing files and unknown extensions") {
    CHECK_THROWS_AS(image_io::load_image("/nonexistent/nope.png"), UnreadableFile);
    const auto bmp = fs::temp_directory_path() / "hrst_io_bad.bmp";
    {
        std::ofstream f(bmp, std::ios::binary);
        f << "BMjunk";
    }
    CHECK_THROWS_AS(image_io::load_image(bmp.string()), UnsupportedFormat);
    fs::remove(bmp);
}

TEST_CASE("grayscale PNG is replicated to 3 identical channels") {
    // Write a single-channel PNG through OpenCV-compatible bytes by saving
    // an RGB gray image and reloading; channel equality must hold.
    const auto path = tmp_png("gray");
    ImageTensor img = constant_image(4, 4, 0.0);
    for (int h = 0; h < 4; ++h)
        for (int w = 0; w < 4; ++w)
            for (int c = 0; c < 3; ++c) img.data.at3(c, h, w) = (h * 4 + w) / 16.0;
    image_io::save_image(img, path.string());
    const ImageTensor back = image_io::load_image(path.string());
    for (int h = 0; h < 4; ++h)
        for (int w = 0; w < 4; ++w) {
            CHECK(back.data.at3(0, h, w) == back.data.at3(1, h, w));
            CHECK(back.data.at3(1, h, w) == back.data.at3(2, h, w));
        }
    fs::remove(path);
}

TEST_CASE("prepare_content resizes to the policy target") {
    std::mt19937_64 rng(12);
    ImageTensor img;
    img.data = oracle::random_tensor({3, 40, 32}, rng, 0.0, 1.0);
    img.range = PixelRange::Unit;
    ResizePolicy policy;
    policy.content_height = 16;
    policy.content_width = 20;
    const ImageTensor out = image_io::prepare_content(img, policy);
    CHECK(out.data.shape() == std::vector<int>{3, 16, 20});
    CHECK(out.range == PixelRange::Unit);
}

TEST_CASE("prepare_content at the native size is the identity") {
    std::mt19937_64 rng(13);
    ImageTensor img;
    img.data = oracle::random_tensor({3, 24, 24}, rng, 0.0, 1.0);
    img.range = PixelRange::Unit;
    ResizePolicy policy;
    policy.content_height = 24;
    policy.content_width = 24;
    const ImageTensor out = image_io::prepare_content(img, policy);
    CHECK(oracle::max_abs_diff(out.data, img.data) < 1e-12);
}

TEST_CASE("prepare_content rejects targets not divisible by 4") {
    ImageTensor img = constant_image(8, 8, 0.5);
    ResizePolicy policy;
    policy.content_height = 6;
    policy.content_width = 6;
    CHECK_THROWS_AS(image_io::prepare_content(img, policy), InvalidTarget);
}

TEST_CASE("prepare_style keeps the original resolution") {
    ImageTensor img = constant_image(48, 64, 0.25);
    bool warned = true;
    const ImageTensor out = image_io::prepare_style(img, 50, 50, &warned);
    CHECK(out.data.shape() == std::vector<int>{3, 48, 64});
    CHECK_FALSE(warned);
}

TEST_CASE("prepare_style warns on a >4x dimension mismatch") {
    ImageTensor wild = constant_image(400, 5, 0.25);
    bool warned = false;
    const ImageTensor out = image_io::prepare_style(wild, 50, 50, &warned);
    CHECK(out.data.shape() == std::vector<int>{3, 400, 5});
    CHECK(warned);
}

TEST_CASE("normalize/denormalize round trip within 1e-6 and zero maps to -mean/std") {
    std::mt19937_64 rng(14);
    ImageTensor img;
    img.data = oracle::random_tensor({3, 6, 6}, rng, 0.0, 1.0);
    img.range = PixelRange::Unit;
    const ImageTensor back = image_io::denormalize(image_io::normalize(img));
    CHECK(oracle::max_abs_diff(back.data, img.data) < 1e-6);

    const ImageTensor z = image_io::normalize(constant_image(2, 2, 0.0));
    for (int c = 0; c < 3; ++c)
        CHECK(z.data.at3(c, 0, 0) == doctest::Approx(-kNormMean[c] / kNormStd[c]).epsilon(1e-12));
}

TEST_CASE("normalize rejects already-normalized input; denormalize clamps") {
    ImageTensor img = constant_image(2, 2, 0.5);
    const ImageTensor norm = image_io::normalize(img);
    CHECK_THROWS_AS(image_io::normalize(norm), WrongRangeMode);
    CHECK_THROWS_AS(image_io::denormalize(img), WrongRangeMode);

    ImageTensor far = norm;
    far.data.fill(50.0); // far outside the normalized range of unit images
    const ImageTensor clamped = image_io::denormalize(far);
    for (std::int64_t i = 0; i < clamped.data.size(); ++i) CHECK(clamped.data[i] == 1.0);
}

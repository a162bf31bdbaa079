// Micro-benchmark comparing the serial reference kernels against the
// OpenMP + GEMM kernels on training-shaped workloads. Prints one line per
// (kernel, shape) with both times and the speedup.
//
//   ./build/bench/hrst_kernels_bench [repeats]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <random>

#include "hrst/kernels.hpp"

using namespace hrst;
using Clock = std::chrono::steady_clock;

namespace {

Tensor random_tensor(const std::vector<int>& shape, std::mt19937_64& rng) {
    Tensor t(shape);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (std::int64_t i = 0; i < t.size(); ++i) t[i] = dist(rng);
    return t;
}

template <typename F>
double time_best_ms(int repeats, F&& fn) {
    double best = 1e300;
    for (int r = 0; r < repeats; ++r) {
        const auto t0 = Clock::now();
        fn();
        best = std::min(best, std::chrono::duration<double, std::milli>(Clock::now() - t0).count());
    }
    return best;
}

void row(const char* name, const char* shape, double serial_ms, double parallel_ms) {
    std::printf("%-22s %-22s %10.2f %10.2f %8.2fx\n", name, shape, serial_ms, parallel_ms,
                serial_ms / parallel_ms);
}

} // namespace

int main(int argc, char** argv) {
    const int repeats = argc > 1 ? std::atoi(argv[1]) : 3;
    std::mt19937_64 rng(42);

    std::printf("%-22s %-22s %10s %10s %9s\n", "kernel", "shape", "serial_ms", "parallel_ms",
                "speedup");

    struct ConvShape {
        const char* label;
        int cin, cout, h, w;
    };
    const ConvShape conv_shapes[] = {
        {"16ch 128x128", 16, 16, 128, 128},
        {"64ch 64x64", 64, 64, 64, 64},
        {"64ch 3x3 256x256", 3, 64, 256, 256},
    };
    for (const auto& s : conv_shapes) {
        const Tensor x = random_tensor({s.cin, s.h, s.w}, rng);
        const Tensor w = random_tensor({s.cout, s.cin, 3, 3}, rng);
        const Tensor b = random_tensor({s.cout}, rng);
        row("conv2d_forward", s.label,
            time_best_ms(repeats, [&] { kernels::serial::conv2d_forward(x, w, b, 1, 1); }),
            time_best_ms(repeats, [&] { kernels::parallel::conv2d_forward(x, w, b, 1, 1); }));

        const Tensor gy = random_tensor({s.cout, s.h, s.w}, rng);
        row("conv2d_backward_input", s.label,
            time_best_ms(repeats,
                         [&] { kernels::serial::conv2d_backward_input(gy, w, 1, 1, s.h, s.w); }),
            time_best_ms(repeats,
                         [&] { kernels::parallel::conv2d_backward_input(gy, w, 1, 1, s.h, s.w); }));
        row("conv2d_backward_weight", s.label,
            time_best_ms(repeats, [&] { kernels::serial::conv2d_backward_weight(gy, x, 1, 1, 3); }),
            time_best_ms(repeats, [&] { kernels::parallel::conv2d_backward_weight(gy, x, 1, 1, 3); }));
    }

    {
        const Tensor f = random_tensor({256, 64, 64}, rng);
        row("gram", "256ch 64x64",
            time_best_ms(repeats, [&] { kernels::serial::gram(f); }),
            time_best_ms(repeats, [&] { kernels::parallel::gram(f); }));
        const Tensor gg = random_tensor({256, 256}, rng);
        row("gram_backward", "256ch 64x64",
            time_best_ms(repeats, [&] { kernels::serial::gram_backward(gg, f); }),
            time_best_ms(repeats, [&] { kernels::parallel::gram_backward(gg, f); }));
    }

    {
        const Tensor x = random_tensor({32, 125, 125}, rng);
        row("bilinear_resize", "32ch 125->500",
            time_best_ms(repeats, [&] { kernels::serial::bilinear_resize(x, 500, 500); }),
            time_best_ms(repeats, [&] { kernels::parallel::bilinear_resize(x, 500, 500); }));
        const Tensor gy = random_tensor({32, 500, 500}, rng);
        row("bilinear_backward", "32ch 500->125",
            time_best_ms(repeats, [&] { kernels::serial::bilinear_resize_backward(gy, 125, 125); }),
            time_best_ms(repeats, [&] { kernels::parallel::bilinear_resize_backward(gy, 125, 125); }));
    }
    return 0;
}

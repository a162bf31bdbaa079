#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "hrst/image_io.hpp"

namespace fs = std::filesystem;

#ifndef HRST_CLI_PATH
#error "HRST_CLI_PATH must be defined by the build"
#endif
#ifndef HRST_ASSETS_DIR
#error "HRST_ASSETS_DIR must be defined by the build"
#endif

namespace {

const std::string kCli = HRST_CLI_PATH;
const std::string kAssets = HRST_ASSETS_DIR;

struct RunResult {
    int exit_code = -1;
    std::string output; // combined stdout+stderr
};

RunResult run(const std::string& args) {
    const fs::path log = fs::temp_directory_path() / "hrst_cli_test_log.txt";
    const std::string cmd = kCli + " " + args + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream f(log);
    std::stringstream ss;
    ss << f.rdbuf();
    r.output = ss.str();
    return r;
}

fs::path fresh_dir(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / name;
    fs::remove_all(d);
    return d;
}

std::string smoke_args(const fs::path& out, const std::string& extra = "") {
    return "transfer --content " + kAssets + "/content_64.png --style " + kAssets +
           "/style_64.png --out " + out.string() +
           " --steps 2 --size 16 --base-channels 4 --seed 7 " + extra;
}

// The wall_ms column is timing noise; drop it when comparing runs.
std::string csv_without_wall_ms(const fs::path& p) {
    std::ifstream f(p);
    std::string line, out;
    while (std::getline(f, line)) {
        const auto cut = line.rfind(',');
        out += line.substr(0, cut);
        out += '\n';
    }
    return out;
}

} // namespace

TEST_CASE("transfer: smoke config exits 0 and writes the documented artifacts") {
    const fs::path out = fresh_dir("hrst_cli_transfer");
    const RunResult r = run(smoke_args(out));
    CHECK(r.exit_code == 0);
    CHECK(fs::exists(out / "output.png"));
    CHECK(fs::exists(out / "loss_history.csv"));
    CHECK(fs::exists(out / "resolved_config.json"));
    const hrst::ImageTensor img = hrst::image_io::load_image((out / "output.png").string());
    CHECK(img.data.shape() == std::vector<int>{3, 16, 16});
    fs::remove_all(out);
}

TEST_CASE("transfer: missing style file exits 2 and names the path") {
    const fs::path out = fresh_dir("hrst_cli_missing");
    const RunResult r = run("transfer --content " + kAssets + "/content_64.png --style /no/such/style.png --out " +
                            out.string() + " --steps 1 --size 16 --base-channels 4");
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("/no/such/style.png") != std::string::npos);
}

TEST_CASE("transfer: reruns with the same seed agree line-for-line on losses") {
    const fs::path a = fresh_dir("hrst_cli_rerun_a");
    const fs::path b = fresh_dir("hrst_cli_rerun_b");
    REQUIRE(run(smoke_args(a)).exit_code == 0);
    REQUIRE(run(smoke_args(b)).exit_code == 0);
    CHECK(csv_without_wall_ms(a / "loss_history.csv") == csv_without_wall_ms(b / "loss_history.csv"));
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST_CASE("transfer: checkpoint file is written when requested and supports resume") {
    const fs::path out = fresh_dir("hrst_cli_ckpt");
    REQUIRE(run(smoke_args(out, "--checkpoint-every 1")).exit_code == 0);
    CHECK(fs::exists(out / "checkpoint_1.hrck"));
    CHECK(fs::exists(out / "checkpoint_2.hrck"));

    const fs::path out2 = fresh_dir("hrst_cli_ckpt_resume");
    const RunResult r = run("transfer --resume " + (out / "checkpoint_1.hrck").string() + " --out " + out2.string());
    CHECK(r.exit_code == 0);
    CHECK(fs::exists(out2 / "output.png"));
    fs::remove_all(out);
    fs::remove_all(out2);
}

TEST_CASE("sweep: one image per weight with trailing-zero-free names; empty list exits 2") {
    const fs::path out = fresh_dir("hrst_cli_sweep");
    const RunResult r = run("sweep --content " + kAssets + "/content_64.png --style " + kAssets +
                            "/style_64.png --out " + out.string() +
                            " --steps 1 --size 16 --base-channels 4 --weights 0.8 8");
    CHECK(r.exit_code == 0);
    CHECK(fs::exists(out / "cw_0.8.png"));
    CHECK(fs::exists(out / "cw_8.png"));
    CHECK(fs::exists(out / "sweep_summary.csv"));

    const fs::path out2 = fresh_dir("hrst_cli_sweep_empty");
    CHECK(run("sweep --content " + kAssets + "/content_64.png --style " + kAssets + "/style_64.png --out " +
              out2.string() + " --steps 1 --size 16")
              .exit_code == 2);
    fs::remove_all(out);
    fs::remove_all(out2);
}

TEST_CASE("benchmark: custom two-rung ladder writes a CSV with one row per resolution") {
    const fs::path out = fresh_dir("hrst_cli_bench");
    const RunResult r = run("benchmark --out " + out.string() +
                            " --resolutions 16 24 --bench-steps 1 --base-channels 4");
    CHECK(r.exit_code == 0);
    std::ifstream f(out / "benchmark.csv");
    REQUIRE(f.good());
    std::string line;
    int rows = 0;
    std::getline(f, line); // header
    while (std::getline(f, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 2);
    fs::remove_all(out);
}

TEST_CASE("eval: identical pair prints similarity 1.0; mismatched sizes exit 2") {
    const fs::path out = fresh_dir("hrst_cli_eval");
    const RunResult r = run("eval --content " + kAssets + "/content_64.png --output " + kAssets +
                            "/content_64.png --out " + out.string());
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("contour_similarity 1.000000") != std::string::npos);
    CHECK(fs::exists(out / "content_gray.png"));
    CHECK(fs::exists(out / "content_contour.png"));

    // A differently sized second image is a configuration error.
    const fs::path small = fs::temp_directory_path() / "hrst_cli_eval_small.png";
    hrst::ImageTensor tiny;
    tiny.data = hrst::Tensor({3, 8, 8});
    tiny.range = hrst::PixelRange::Unit;
    hrst::image_io::save_image(tiny, small.string());
    CHECK(run("eval --content " + kAssets + "/content_64.png --output " + small.string()).exit_code == 2);
    fs::remove(small);
    fs::remove_all(out);
}

TEST_CASE("unknown subcommand or bad flag value exits 2") {
    CHECK(run("frobnicate").exit_code == 2);
    CHECK(run("transfer --steps 0 --content " + kAssets + "/content_64.png --style " + kAssets +
              "/style_64.png --out /tmp/hrst_cli_badsteps --size 16")
              .exit_code == 2);
}

// hrst: photorealistic style transfer via per-image-pair optimization of
// a multi-resolution generation network.
//
// Subcommands: transfer, sweep, benchmark, eval.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "hrst/errors.hpp"
#include "hrst/evaluation.hpp"
#include "hrst/image_io.hpp"
#include "hrst/serialize.hpp"
#include "hrst/trainer.hpp"
#include "hrst/vgg.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace hrst;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct JobConfig {
    std::string content_path, style_path, output_dir = "out";
    LossConfig loss;
    TrainingConfig training;
    GenerationNetworkSpec network;
    ResizePolicy resize;
    std::uint64_t extractor_seed = 0;
};

json to_json(const JobConfig& c) {
    json layers = json::array();
    for (const auto& [name, w] : c.loss.style_layers) layers.push_back({name, w});
    json j;
    j["version"] = 1;
    j["content"] = c.content_path;
    j["style"] = c.style_path;
    j["output_dir"] = c.output_dir;
    j["loss"] = {{"content_layer", c.loss.content_layer},
                 {"style_layers", layers},
                 {"lambda_content", c.loss.lambda_content},
                 {"lambda_style", c.loss.lambda_style},
                 {"lambda_tv", c.loss.lambda_tv}};
    j["training"] = {{"steps", c.training.steps},
                     {"learning_rate", c.training.learning_rate},
                     {"weight_decay", c.training.weight_decay},
                     {"seed", c.training.seed},
                     {"log_every", c.training.log_every}};
    if (c.training.checkpoint_every) j["training"]["checkpoint_every"] = *c.training.checkpoint_every;
    j["network"] = {{"base_channels", c.network.base_channels},
                    {"branch_scales", c.network.branch_scales},
                    {"blocks_per_segment", c.network.blocks_per_segment},
                    {"fusion_count", c.network.fusion_count}};
    j["resize"] = {{"content_height", c.resize.content_height},
                   {"content_width", c.resize.content_width}};
    j["extractor_seed"] = c.extractor_seed;
    return j;
}

void from_json_file(const std::string& path, JobConfig& c) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file: " + path);
    json j;
    try {
        j = json::parse(is);
    } catch (const json::exception& e) {
        throw ConfigError("config file is not valid JSON: " + std::string(e.what()));
    }
    if (j.value("version", 1) != 1) throw ConfigError("unsupported config version");
    c.content_path = j.value("content", c.content_path);
    c.style_path = j.value("style", c.style_path);
    c.output_dir = j.value("output_dir", c.output_dir);
    if (j.contains("loss")) {
        const auto& l = j["loss"];
        c.loss.content_layer = l.value("content_layer", c.loss.content_layer);
        if (l.contains("style_layers")) {
            c.loss.style_layers.clear();
            for (const auto& e : l["style_layers"])
                c.loss.style_layers.emplace_back(e.at(0).get<std::string>(), e.at(1).get<double>());
        }
        c.loss.lambda_content = l.value("lambda_content", c.loss.lambda_content);
        c.loss.lambda_style = l.value("lambda_style", c.loss.lambda_style);
        c.loss.lambda_tv = l.value("lambda_tv", c.loss.lambda_tv);
    }
    if (j.contains("training")) {
        const auto& t = j["training"];
        c.training.steps = t.value("steps", c.training.steps);
        c.training.learning_rate = t.value("learning_rate", c.training.learning_rate);
        c.training.weight_decay = t.value("weight_decay", c.training.weight_decay);
        c.training.seed = t.value("seed", c.training.seed);
        c.training.log_every = t.value("log_every", c.training.log_every);
        if (t.contains("checkpoint_every"))
            c.training.checkpoint_every = t["checkpoint_every"].get<int>();
    }
    if (j.contains("network")) {
        const auto& n = j["network"];
        c.network.base_channels = n.value("base_channels", c.network.base_channels);
        if (n.contains("branch_scales"))
            c.network.branch_scales = n["branch_scales"].get<std::vector<int>>();
        c.network.blocks_per_segment = n.value("blocks_per_segment", c.network.blocks_per_segment);
        c.network.fusion_count = n.value("fusion_count", c.network.fusion_count);
    }
    if (j.contains("resize")) {
        c.resize.content_height = j["resize"].value("content_height", c.resize.content_height);
        c.resize.content_width = j["resize"].value("content_width", c.resize.content_width);
    }
    c.extractor_seed = j.value("extractor_seed", c.extractor_seed);
}

FeatureExtractor load_extractor(std::uint64_t seed) {
    const char* path = std::getenv("HRST_VGG19_WEIGHTS");
    if (path && *path) {
        const char* sha = std::getenv("HRST_VGG19_SHA256");
        return FeatureExtractor::load_file(path, sha ? sha : "");
    }
    std::cerr << "note: HRST_VGG19_WEIGHTS not set; using seeded deterministic extractor "
                 "weights (seed "
              << seed << ")\n";
    return FeatureExtractor::seeded(seed);
}

std::string format_weight(double w) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%g", w);
    return buf;
}

struct LoadedPair {
    ImageTensor content, style;
};

LoadedPair load_pair(const JobConfig& cfg) {
    ImageTensor content = image_io::load_image(cfg.content_path);
    ImageTensor style = image_io::load_image(cfg.style_path);
    content = image_io::prepare_content(content, cfg.resize);
    bool warned = false;
    style = image_io::prepare_style(style, content.height(), content.width(), &warned);
    if (warned)
        std::cerr << "warning: style resolution " << style.height() << "x" << style.width()
                  << " differs from content " << content.height() << "x" << content.width()
                  << " by more than 4x; transfer quality may suffer\n";
    return {std::move(content), std::move(style)};
}

void log_step(const StepRecord& r, int log_every, int total_steps) {
    if (r.step % log_every != 0 && r.step != total_steps) return;
    std::fprintf(stderr, "step %4d/%d  total %.6g  content %.6g  style %.6g  tv %.6g\n", r.step,
                 total_steps, r.total, r.content, r.style, r.tv);
}

int cmd_transfer(const JobConfig& cfg, const std::string& resume_path) {
    FeatureExtractor fx = load_extractor(cfg.extractor_seed);
    fs::create_directories(cfg.output_dir);
    std::ofstream(fs::path(cfg.output_dir) / "resolved_config.json") << to_json(cfg).dump(2) << "\n";

    TrainingRun run;
    if (!resume_path.empty()) {
        TrainerSession session = TrainerSession::resume(resume_path, &fx);
        run = session.finish(
            [&](const StepRecord& r) { log_step(r, cfg.training.log_every, session.config().steps); });
    } else {
        LoadedPair pair = load_pair(cfg);
        TrainerSession session(pair.content, pair.style, cfg.network, cfg.loss, cfg.training, &fx);
        while (!session.done()) {
            StepRecord r = session.step();
            log_step(r, cfg.training.log_every, cfg.training.steps);
            if (cfg.training.checkpoint_every && r.step % *cfg.training.checkpoint_every == 0)
                session.save_checkpoint(
                    (fs::path(cfg.output_dir) / ("checkpoint_" + std::to_string(r.step) + ".hrck"))
                        .string());
        }
        run = session.finish();
    }
    image_io::save_image(run.final_image, (fs::path(cfg.output_dir) / "output.png").string());
    write_loss_history_csv(run.loss_history,
                           (fs::path(cfg.output_dir) / "loss_history.csv").string());
    return 0;
}

int cmd_sweep(JobConfig cfg, const std::vector<double>& weights) {
    if (weights.empty()) throw ConfigError("sweep: empty content-weight list");
    FeatureExtractor fx = load_extractor(cfg.extractor_seed);
    fs::create_directories(cfg.output_dir);
    cfg.loss.lambda_style = 1.0; // C_s fixed at 1 for the sweep
    std::ofstream(fs::path(cfg.output_dir) / "resolved_config.json") << to_json(cfg).dump(2) << "\n";
    LoadedPair pair = load_pair(cfg);

    std::ofstream summary(fs::path(cfg.output_dir) / "sweep_summary.csv");
    summary << "content_weight,total,content_raw,content_weighted,style,tv\n";
    for (double w : weights) {
        LossConfig loss = cfg.loss;
        loss.lambda_content = w;
        std::cerr << "sweep: content weight " << format_weight(w) << "\n";
        TrainingRun run = run_transfer(pair.content, pair.style, cfg.network, loss, cfg.training, fx,
                                       [&](const StepRecord& r) {
                                           log_step(r, cfg.training.log_every, cfg.training.steps);
                                       });
        const StepRecord& last = run.loss_history.back();
        char buf[256];
        std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                      format_weight(w).c_str(), last.total, w > 0 ? last.content / w : 0.0,
                      last.content, last.style, last.tv);
        summary << buf;
        image_io::save_image(
            run.final_image, (fs::path(cfg.output_dir) / ("cw_" + format_weight(w) + ".png")).string());
    }
    return 0;
}

int cmd_benchmark(const JobConfig& cfg, const std::vector<int>& sizes, int steps) {
    FeatureExtractor fx = load_extractor(cfg.extractor_seed);
    fs::create_directories(cfg.output_dir);
    std::vector<std::pair<int, int>> resolutions;
    for (int s : sizes) resolutions.emplace_back(s, s);
    BenchmarkReport report =
        evaluation::run_benchmark(resolutions, steps, cfg.network, cfg.loss, fx);
    evaluation::write_benchmark_csv(report,
                                    (fs::path(cfg.output_dir) / "benchmark.csv").string());
    std::printf("%10s %8s %14s  %s\n", "resolution", "steps", "wall_seconds", "device");
    for (const auto& r : report.rows)
        std::printf("%5dx%-4d %8d %14.3f  %s\n", r.height, r.width, r.steps, r.wall_seconds,
                    r.device.c_str());
    return 0;
}

ImageTensor edge_to_image(const EdgeMap& e) {
    double mx = 0;
    for (std::int64_t i = 0; i < e.data.size(); ++i) mx = std::max(mx, e.data[i]);
    ImageTensor img;
    img.data = Tensor({3, e.data.dim(0), e.data.dim(1)});
    img.range = PixelRange::Unit;
    for (int h = 0; h < e.data.dim(0); ++h)
        for (int w = 0; w < e.data.dim(1); ++w) {
            const double v = mx > 0 ? e.data.at2(h, w) / mx : 0.0;
            for (int c = 0; c < 3; ++c) img.data.at3(c, h, w) = v;
        }
    return img;
}

ImageTensor gray_to_image(const Tensor& g) {
    ImageTensor img;
    img.data = Tensor({3, g.dim(0), g.dim(1)});
    img.range = PixelRange::Unit;
    for (int h = 0; h < g.dim(0); ++h)
        for (int w = 0; w < g.dim(1); ++w)
            for (int c = 0; c < 3; ++c) img.data.at3(c, h, w) = g.at2(h, w);
    return img;
}

int cmd_eval(const std::string& content_path, const std::string& output_path,
             const std::string& out_dir) {
    ImageTensor content = image_io::load_image(content_path);
    ImageTensor stylized = image_io::load_image(output_path);
    if (content.height() != stylized.height() || content.width() != stylized.width())
        throw ConfigError("eval: image sizes differ (" + std::to_string(content.height()) + "x" +
                          std::to_string(content.width()) + " vs " +
                          std::to_string(stylized.height()) + "x" +
                          std::to_string(stylized.width()) + ")");
    fs::create_directories(out_dir);
    Tensor gc = evaluation::to_grayscale(content);
    Tensor gs = evaluation::to_grayscale(stylized);
    EdgeMap ec = evaluation::sobel_contour(gc);
    EdgeMap es = evaluation::sobel_contour(gs);
    image_io::save_image(gray_to_image(gc), (fs::path(out_dir) / "content_gray.png").string());
    image_io::save_image(gray_to_image(gs), (fs::path(out_dir) / "stylized_gray.png").string());
    image_io::save_image(edge_to_image(ec), (fs::path(out_dir) / "content_contour.png").string());
    image_io::save_image(edge_to_image(es), (fs::path(out_dir) / "stylized_contour.png").string());
    const double sim = evaluation::contour_similarity(ec, es);
    const double hist = evaluation::grayscale_histogram_distance(content, stylized);
    std::printf("contour_similarity %.6f\n", sim);
    std::printf("grayscale_histogram_distance %.6f\n", hist);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"hrst - photorealistic style transfer by per-image optimization"};
    app.require_subcommand(1);

    JobConfig cfg;
    std::string config_path, resume_path;
    std::vector<double> sweep_weights;
    std::vector<int> bench_sizes{128, 256, 512};
    int bench_steps = 10;
    std::string eval_content, eval_output, eval_dir = "eval_out";

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON job config (flags override file values)");
        sub->add_option("--content", cfg.content_path, "content image (PNG/JPEG)");
        sub->add_option("--style", cfg.style_path, "style image (PNG/JPEG)");
        sub->add_option("--out", cfg.output_dir, "output directory");
        sub->add_option("--steps", cfg.training.steps, "optimization steps");
        sub->add_option("--lr", cfg.training.learning_rate, "Adam learning rate");
        sub->add_option("--content-weight", cfg.loss.lambda_content, "lambda_c");
        sub->add_option("--style-weight", cfg.loss.lambda_style, "lambda_s");
        sub->add_option("--tv-weight", cfg.loss.lambda_tv, "lambda_TV");
        sub->add_option("--seed", cfg.training.seed, "network init seed");
        sub->add_option("--checkpoint-every", [&cfg](const CLI::results_t& res) {
            cfg.training.checkpoint_every = std::stoi(res[0]);
            return true;
        }, "write a checkpoint every N steps")->expected(1);
        sub->add_option("--size", [&cfg](const CLI::results_t& res) {
            cfg.resize.content_height = cfg.resize.content_width = std::stoi(res[0]);
            return true;
        }, "content target size (square, default 500)")->expected(1);
        sub->add_option("--base-channels", cfg.network.base_channels, "generation network width");
    };

    CLI::App* transfer = app.add_subcommand("transfer", "run one style transfer job");
    add_common(transfer);
    transfer->add_option("--resume", resume_path, "resume from a checkpoint file");

    CLI::App* sweep = app.add_subcommand("sweep", "content-weight sweep with C_s = 1");
    add_common(sweep);
    sweep->add_option("--weights", sweep_weights, "content weights to sweep")->expected(-1);

    CLI::App* bench = app.add_subcommand("benchmark", "runtime ladder over resolutions");
    add_common(bench);
    bench->add_option("--resolutions", bench_sizes, "square resolutions")->expected(-1);
    bench->add_option("--bench-steps", bench_steps, "steps per benchmark run");

    CLI::App* eval = app.add_subcommand("eval", "contour-preservation evaluation");
    eval->add_option("--content", eval_content, "content image")->required();
    eval->add_option("--output", eval_output, "stylized image")->required();
    eval->add_option("--out", eval_dir, "directory for grayscale/contour PNGs");

    // parse twice so a config file loads first and explicit flags win
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) ? kExitConfig : 0;
    }
    try {
        if (!config_path.empty()) {
            from_json_file(config_path, cfg);
            app.clear();
            app.parse(argc, argv);
        }

        if (transfer->parsed()) {
            if (resume_path.empty()) {
                if (cfg.content_path.empty() || cfg.style_path.empty())
                    throw ConfigError("transfer: --content and --style are required");
                if (!fs::exists(cfg.content_path))
                    throw ConfigError("transfer: content image not found: " + cfg.content_path);
                if (!fs::exists(cfg.style_path))
                    throw ConfigError("transfer: style image not found: " + cfg.style_path);
            }
            return cmd_transfer(cfg, resume_path);
        }
        if (sweep->parsed()) {
            if (cfg.content_path.empty() || cfg.style_path.empty())
                throw ConfigError("sweep: --content and --style are required");
            if (!fs::exists(cfg.content_path))
                throw ConfigError("sweep: content image not found: " + cfg.content_path);
            if (!fs::exists(cfg.style_path))
                throw ConfigError("sweep: style image not found: " + cfg.style_path);
            return cmd_sweep(cfg, sweep_weights);
        }
        if (bench->parsed()) return cmd_benchmark(cfg, bench_sizes, bench_steps);
        if (eval->parsed()) return cmd_eval(eval_content, eval_output, eval_dir);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) ? kExitConfig : 0;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return 0;
}

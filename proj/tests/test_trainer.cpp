#include "doctest.h"

#include <filesystem>
#include <fstream>

#include "hrst/evaluation.hpp"
#include "hrst/trainer.hpp"
#include "oracles.hpp"

using namespace hrst;
namespace fs = std::filesystem;

namespace {

struct SmokeSetup {
    ImageTensor content, style;
    GenerationNetworkSpec net_spec;
    LossConfig loss_cfg;
    TrainingConfig train_cfg;
    FeatureExtractor fx = FeatureExtractor::seeded(0);

    SmokeSetup() {
        content = evaluation::synthetic_image(16, 16, 11);
        style = evaluation::synthetic_image(16, 16, 23);
        net_spec.base_channels = 4;
        train_cfg.steps = 1;
        train_cfg.seed = 9;
        train_cfg.log_every = 1000;
    }
};

} // namespace

TEST_CASE("steps=1 produces one record and a content-shaped final image") {
    SmokeSetup s;
    const TrainingRun run =
        run_transfer(s.content, s.style, s.net_spec, s.loss_cfg, s.train_cfg, s.fx);
    REQUIRE(run.loss_history.size() == 1);
    CHECK(run.loss_history[0].step == 1);
    CHECK(run.loss_history[0].total > 0);
    CHECK(run.loss_history[0].content >= 0);
    CHECK(run.loss_history[0].style >= 0);
    CHECK(run.loss_history[0].tv >= 0);
    CHECK(run.final_image.data.shape() == s.content.data.shape());
    for (std::int64_t i = 0; i < run.final_image.data.size(); ++i) {
        CHECK(run.final_image.data[i] >= 0.0);
        CHECK(run.final_image.data[i] <= 1.0);
    }
}

TEST_CASE("identical seeds give identical histories; different seeds differ") {
    SmokeSetup s;
    s.train_cfg.steps = 3;
    const TrainingRun a = run_transfer(s.content, s.style, s.net_spec, s.loss_cfg, s.train_cfg, s.fx);
    const TrainingRun b = run_transfer(s.content, s.style, s.net_spec, s.loss_cfg, s.train_cfg, s.fx);
    REQUIRE(a.loss_history.size() == b.loss_history.size());
    for (std::size_t i = 0; i < a.loss_history.size(); ++i)
        CHECK(a.loss_history[i].total == b.loss_history[i].total);

    s.train_cfg.seed = 10;
    const TrainingRun c = run_transfer(s.content, s.style, s.net_spec, s.loss_cfg, s.train_cfg, s.fx);
    CHECK(a.loss_history[0].total != c.loss_history[0].total);
}

TEST_CASE("extractor weights are unchanged by training") {
    SmokeSetup s;
    const std::string before = s.fx.weights_fingerprint();
    (void)run_transfer(s.content, s.style, s.net_spec, s.loss_cfg, s.train_cfg, s.fx);
    CHECK(s.fx.weights_fingerprint() == before);
}

TEST_CASE("checkpoint at step 10 of 20 resumes to 20 records matching the uninterrupted run") {
    SmokeSetup s;
    s.train_cfg.steps = 20;
    const auto ckpt = fs::temp_directory_path() / "hrst_trainer_ckpt.hrck";

    TrainerSession straight(s.content, s.style, s.net_spec, s.loss_cfg, s.train_cfg, &s.fx);
    const TrainingRun uninterrupted = straight.finish();

    TrainerSession first(s.content, s.style, s.net_spec, s.loss_cfg, s.train_cfg, &s.fx);
    for (int i = 0; i < 10; ++i) first.step();
    first.save_checkpoint(ckpt.string());

    TrainerSession second = TrainerSession::resume(ckpt.string(), &s.fx);
    CHECK(second.current_step() == 10);
    const TrainingRun resumed = second.finish();

    REQUIRE(resumed.loss_history.size() == 20);
    for (std::size_t i = 0; i < 20; ++i) {
        const double rel = oracle::rel_err(resumed.loss_history[i].total,
                                           uninterrupted.loss_history[i].total);
        CHECK(rel <= 1e-5);
    }
    fs::remove(ckpt);
}

TEST_CASE("resume from a missing or corrupt file throws CorruptCheckpoint") {
    SmokeSetup s;
    CHECK_THROWS_AS(TrainerSession::resume("/nonexistent/ckpt.hrck", &s.fx), CorruptCheckpoint);

    const auto junk = fs::temp_directory_path() / "hrst_trainer_junk.hrck";
    {
        std::ofstream f(junk);
        f << "not a checkpoint";
    }
    CHECK_THROWS_AS(TrainerSession::resume(junk.string(), &s.fx), CorruptCheckpoint);
    fs::remove(junk);
}

TEST_CASE("config validation rejects nonpositive steps and learning rate") {
    TrainingConfig bad;
    bad.steps = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = TrainingConfig{};
    bad.learning_rate = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("loss history CSV has the documented header and one line per step") {
    SmokeSetup s;
    s.train_cfg.steps = 2;
    const TrainingRun run = run_transfer(s.content, s.style, s.net_spec, s.loss_cfg, s.train_cfg, s.fx);
    const auto path = fs::temp_directory_path() / "hrst_trainer_hist.csv";
    write_loss_history_csv(run.loss_history, path.string());
    std::ifstream f(path);
    std::string line;
    std::getline(f, line);
    CHECK(line == "step,total,content,style,tv,wall_ms");
    int rows = 0;
    while (std::getline(f, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 2);
    fs::remove(path);
}

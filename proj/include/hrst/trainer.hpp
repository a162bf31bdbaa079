#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hrst/generation_network.hpp"
#include "hrst/losses.hpp"

namespace hrst {

struct TrainingConfig {
    int steps = 200;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double weight_decay = 0.0;
    std::uint64_t seed = 0;
    int log_every = 10;
    std::optional<int> checkpoint_every;

    void validate() const;
};

struct StepRecord {
    int step = 0; // 1-based
    double total = 0, content = 0, style = 0, tv = 0;
    double wall_ms = 0;
};

struct TrainingRun {
    std::vector<StepRecord> loss_history;
    ImageTensor final_image;
    GenerationNetworkSpec net_spec;
    LossConfig loss_config;
    TrainingConfig config;
    std::vector<NamedTensor> final_params;
};

// One per-image-pair optimization job. Owns the generation network and
// Adam state; the feature extractor is shared read-only.
class TrainerSession {
public:
    TrainerSession(ImageTensor content_unit, ImageTensor style_unit,
                   GenerationNetworkSpec net_spec, LossConfig loss_cfg,
                   TrainingConfig train_cfg, const FeatureExtractor* fx);

    // Loads a checkpoint written by save_checkpoint; the images and full
    // optimizer state are restored from the file.
    static TrainerSession resume(const std::string& path, const FeatureExtractor* fx);

    void save_checkpoint(const std::string& path) const;

    int current_step() const { return static_cast<int>(history_.size()); }
    bool done() const { return current_step() >= config_.steps; }
    const std::vector<StepRecord>& history() const { return history_; }
    const TrainingConfig& config() const { return config_; }
    const GenerationNetwork& network() const { return net_; }

    StepRecord step();

    // Runs remaining steps (invoking on_step after each, when given) and
    // produces the final image.
    TrainingRun finish(const std::function<void(const StepRecord&)>& on_step = {});

    ImageTensor render() const;

private:
    ImageTensor content_unit_, style_unit_;
    ImageTensor content_norm_;
    LossConfig loss_cfg_;
    TrainingConfig config_;
    const FeatureExtractor* fx_;
    GenerationNetwork net_;
    losses::Targets targets_;
    std::vector<StepRecord> history_;
    // Adam state, aligned with net_.parameters()
    std::vector<Tensor> m_, v_;
    long adam_t_ = 0;

    TrainerSession(ImageTensor content, ImageTensor style, GenerationNetworkSpec net_spec,
                   LossConfig loss_cfg, TrainingConfig cfg, const FeatureExtractor* fx,
                   bool fresh);
    void init_adam_state();
};

TrainingRun run_transfer(const ImageTensor& content, const ImageTensor& style,
                         const GenerationNetworkSpec& net_spec, const LossConfig& loss_cfg,
                         const TrainingConfig& train_cfg, const FeatureExtractor& fx,
                         const std::function<void(const StepRecord&)>& on_step = {});

void write_loss_history_csv(const std::vector<StepRecord>& history, const std::string& path);

} // namespace hrst

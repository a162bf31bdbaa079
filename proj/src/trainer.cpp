#include "hrst/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "hrst/errors.hpp"
#include "hrst/serialize.hpp"

namespace hrst {

using nlohmann::json;

void TrainingConfig::validate() const {
    if (steps < 1) throw ConfigError("TrainingConfig: steps must be >= 1");
    if (learning_rate <= 0) throw ConfigError("TrainingConfig: learning_rate must be > 0");
    if (log_every < 1) throw ConfigError("TrainingConfig: log_every must be >= 1");
    if (checkpoint_every && *checkpoint_every < 1)
        throw ConfigError("TrainingConfig: checkpoint_every must be >= 1");
}

namespace {

json net_spec_to_json(const GenerationNetworkSpec& s) {
    return json{{"base_channels", s.base_channels},
                {"branch_scales", s.branch_scales},
                {"blocks_per_segment", s.blocks_per_segment},
                {"fusion_count", s.fusion_count}};
}

GenerationNetworkSpec net_spec_from_json(const json& j) {
    GenerationNetworkSpec s;
    s.base_channels = j.at("base_channels");
    s.branch_scales = j.at("branch_scales").get<std::vector<int>>();
    s.blocks_per_segment = j.at("blocks_per_segment");
    s.fusion_count = j.at("fusion_count");
    return s;
}

json loss_cfg_to_json(const LossConfig& c) {
    json layers = json::array();
    for (const auto& [name, w] : c.style_layers) layers.push_back({name, w});
    return json{{"content_layer", c.content_layer},
                {"style_layers", layers},
                {"lambda_content", c.lambda_content},
                {"lambda_style", c.lambda_style},
                {"lambda_tv", c.lambda_tv}};
}

LossConfig loss_cfg_from_json(const json& j) {
    LossConfig c;
    c.content_layer = j.at("content_layer");
    c.style_layers.clear();
    for (const auto& e : j.at("style_layers"))
        c.style_layers.emplace_back(e.at(0).get<std::string>(), e.at(1).get<double>());
    c.lambda_content = j.at("lambda_content");
    c.lambda_style = j.at("lambda_style");
    c.lambda_tv = j.at("lambda_tv");
    return c;
}

json train_cfg_to_json(const TrainingConfig& c) {
    json j{{"steps", c.steps},        {"learning_rate", c.learning_rate},
           {"beta1", c.beta1},        {"beta2", c.beta2},
           {"epsilon", c.epsilon},    {"weight_decay", c.weight_decay},
           {"seed", c.seed},          {"log_every", c.log_every}};
    if (c.checkpoint_every) j["checkpoint_every"] = *c.checkpoint_every;
    return j;
}

TrainingConfig train_cfg_from_json(const json& j) {
    TrainingConfig c;
    c.steps = j.at("steps");
    c.learning_rate = j.at("learning_rate");
    c.beta1 = j.at("beta1");
    c.beta2 = j.at("beta2");
    c.epsilon = j.at("epsilon");
    c.weight_decay = j.at("weight_decay");
    c.seed = j.at("seed");
    c.log_every = j.at("log_every");
    if (j.contains("checkpoint_every")) c.checkpoint_every = j.at("checkpoint_every").get<int>();
    return c;
}

} // namespace

TrainerSession::TrainerSession(ImageTensor content, ImageTensor style,
                               GenerationNetworkSpec net_spec, LossConfig loss_cfg,
                               TrainingConfig cfg, const FeatureExtractor* fx, bool)
    : content_unit_(std::move(content)),
      style_unit_(std::move(style)),
      loss_cfg_(std::move(loss_cfg)),
      config_(cfg),
      fx_(fx),
      net_(std::move(net_spec), cfg.seed) {
    if (!fx_) throw ExtractorUnavailable("trainer: no feature extractor");
    loss_cfg_.validate();
    config_.validate();
    if (content_unit_.range != PixelRange::Unit || style_unit_.range != PixelRange::Unit)
        throw WrongRangeMode("trainer: content and style images must be in unit range");
    content_norm_ = image_io::normalize(content_unit_);
    targets_ = losses::make_targets(content_unit_, style_unit_, *fx_, loss_cfg_);
    init_adam_state();
}

TrainerSession::TrainerSession(ImageTensor content_unit, ImageTensor style_unit,
                               GenerationNetworkSpec net_spec, LossConfig loss_cfg,
                               TrainingConfig train_cfg, const FeatureExtractor* fx)
    : TrainerSession(std::move(content_unit), std::move(style_unit), std::move(net_spec),
                     std::move(loss_cfg), train_cfg, fx, true) {}

void TrainerSession::init_adam_state() {
    m_.clear();
    v_.clear();
    for (const auto& p : net_.parameters()) {
        m_.emplace_back(p.tensor.shape());
        v_.emplace_back(p.tensor.shape());
    }
    adam_t_ = 0;
}

StepRecord TrainerSession::step() {
    const auto t0 = std::chrono::steady_clock::now();
    Tape tape;
    Var input = tape.leaf(content_norm_.data, false);
    std::vector<Var> param_nodes;
    Var out01 = net_.forward(tape, input, &param_nodes);

    std::vector<double> scale(3), shift(3);
    for (int c = 0; c < 3; ++c) {
        scale[c] = 1.0 / kNormStd[c];
        shift[c] = -kNormMean[c] / kNormStd[c];
    }
    Var out_norm = ops::channel_affine(tape, out01, scale, shift);

    LossBreakdown bd;
    Var total = losses::build_objective(tape, out_norm, out01, targets_, *fx_, loss_cfg_, &bd);
    tape.backward(total);

    ++adam_t_;
    const double bc1 = 1.0 - std::pow(config_.beta1, adam_t_);
    const double bc2 = 1.0 - std::pow(config_.beta2, adam_t_);
    auto& params = net_.parameters();
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor& p = params[i].tensor;
        const Tensor& grad = param_nodes[i]->grad;
        for (std::int64_t k = 0; k < p.size(); ++k) {
            double g = grad.empty() ? 0.0 : grad[k];
            if (config_.weight_decay != 0.0) g += config_.weight_decay * p[k];
            m_[i][k] = config_.beta1 * m_[i][k] + (1.0 - config_.beta1) * g;
            v_[i][k] = config_.beta2 * v_[i][k] + (1.0 - config_.beta2) * g * g;
            const double mhat = m_[i][k] / bc1;
            const double vhat = v_[i][k] / bc2;
            p[k] -= config_.learning_rate * mhat / (std::sqrt(vhat) + config_.epsilon);
        }
    }

    StepRecord r;
    r.step = current_step() + 1;
    r.total = bd.total;
    r.content = bd.content_weighted;
    r.style = bd.style_weighted;
    r.tv = bd.tv_weighted;
    r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                    .count();
    history_.push_back(r);
    return r;
}

ImageTensor TrainerSession::render() const {
    ImageTensor out = net_.forward(content_norm_);
    out.range = PixelRange::Unit; // bounded output head
    return out;
}

TrainingRun TrainerSession::finish(const std::function<void(const StepRecord&)>& on_step) {
    while (!done()) {
        StepRecord r = step();
        if (on_step) on_step(r);
    }
    TrainingRun run;
    run.loss_history = history_;
    run.final_image = render();
    run.net_spec = net_.spec();
    run.loss_config = loss_cfg_;
    run.config = config_;
    run.final_params = net_.parameters();
    return run;
}

void TrainerSession::save_checkpoint(const std::string& path) const {
    serialize::Container c;
    json hist = json::array();
    for (const auto& r : history_)
        hist.push_back({r.step, r.total, r.content, r.style, r.tv, r.wall_ms});
    json meta{{"kind", "hrst-checkpoint"},
              {"net_spec", net_spec_to_json(net_.spec())},
              {"loss_config", loss_cfg_to_json(loss_cfg_)},
              {"training_config", train_cfg_to_json(config_)},
              {"adam_t", adam_t_},
              {"history", hist},
              {"extractor", fx_->source()}};
    c.metadata_json = meta.dump();
    for (const auto& p : net_.parameters()) c.tensors.push_back({"param." + p.name, p.tensor});
    const auto& params = net_.parameters();
    for (std::size_t i = 0; i < params.size(); ++i) {
        c.tensors.push_back({"adam.m." + params[i].name, m_[i]});
        c.tensors.push_back({"adam.v." + params[i].name, v_[i]});
    }
    c.tensors.push_back({"image.content", content_unit_.data});
    c.tensors.push_back({"image.style", style_unit_.data});
    serialize::write_container(path, c, serialize::Payload::Float64);
}

TrainerSession TrainerSession::resume(const std::string& path, const FeatureExtractor* fx) {
    serialize::Container c = serialize::read_container(path);
    json meta;
    try {
        meta = json::parse(c.metadata_json);
    } catch (const json::exception& e) {
        throw CorruptCheckpoint(std::string("checkpoint metadata is not valid JSON: ") + e.what());
    }
    if (meta.value("kind", "") != "hrst-checkpoint")
        throw CorruptCheckpoint("not a trainer checkpoint: " + path);

    std::map<std::string, Tensor> by_name;
    for (auto& nt : c.tensors) by_name.emplace(nt.name, std::move(nt.tensor));
    auto take = [&](const std::string& name) -> Tensor {
        auto it = by_name.find(name);
        if (it == by_name.end()) throw CorruptCheckpoint("checkpoint misses tensor " + name);
        return std::move(it->second);
    };

    ImageTensor content{take("image.content"), PixelRange::Unit};
    ImageTensor style{take("image.style"), PixelRange::Unit};
    TrainerSession s(std::move(content), std::move(style),
                     net_spec_from_json(meta.at("net_spec")),
                     loss_cfg_from_json(meta.at("loss_config")),
                     train_cfg_from_json(meta.at("training_config")), fx, true);

    std::vector<NamedTensor> params;
    for (const auto& p : s.net_.parameters()) params.push_back({p.name, take("param." + p.name)});
    s.net_.load_parameters(params);
    for (std::size_t i = 0; i < params.size(); ++i) {
        s.m_[i] = take("adam.m." + params[i].name);
        s.v_[i] = take("adam.v." + params[i].name);
    }
    s.adam_t_ = meta.at("adam_t");
    s.history_.clear();
    for (const auto& e : meta.at("history")) {
        StepRecord r;
        r.step = e.at(0);
        r.total = e.at(1);
        r.content = e.at(2);
        r.style = e.at(3);
        r.tv = e.at(4);
        r.wall_ms = e.at(5);
        s.history_.push_back(r);
    }
    return s;
}

TrainingRun run_transfer(const ImageTensor& content, const ImageTensor& style,
                         const GenerationNetworkSpec& net_spec, const LossConfig& loss_cfg,
                         const TrainingConfig& train_cfg, const FeatureExtractor& fx,
                         const std::function<void(const StepRecord&)>& on_step) {
    TrainerSession s(content, style, net_spec, loss_cfg, train_cfg, &fx);
    return s.finish(on_step);
}

void write_loss_history_csv(const std::vector<StepRecord>& history, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw RuntimeFailure("cannot write " + path);
    os << "step,total,content,style,tv,wall_ms\n";
    char buf[512];
    for (const auto& r : history) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%.3f\n", r.step, r.total,
                      r.content, r.style, r.tv, r.wall_ms);
        os << buf;
    }
}

} // namespace hrst

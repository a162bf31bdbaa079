#include "hrst/generation_network.hpp"

#include <cmath>

#include "hrst/errors.hpp"

namespace hrst {

namespace {

bool is_power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

int octaves(int coarse, int fine) {
    int n = 0, s = fine;
    while (s < coarse) { s *= 2; ++n; }
    return n;
}

} // namespace

Var bottleneck_block(Tape& tape, Var x, Var reduce_w, Var reduce_b, Var expand_w, Var expand_b) {
    Var f = ops::relu(tape, ops::conv2d(tape, x, reduce_w, reduce_b, 1, 1));
    f = ops::conv2d(tape, f, expand_w, expand_b, 1, 0);
    return ops::add(tape, x, f);
}

void GenerationNetworkSpec::validate() const {
    if (base_channels < 1) throw InvalidSpec("base_channels must be >= 1");
    if (blocks_per_segment < 1) throw InvalidSpec("blocks_per_segment must be >= 1");
    if (branch_scales.empty()) throw InvalidSpec("branch_scales must be non-empty");
    if (branch_scales.front() != 1)
        throw InvalidSpec("branch_scales must start at 1 (full resolution)");
    for (std::size_t i = 0; i < branch_scales.size(); ++i) {
        if (!is_power_of_two(branch_scales[i]))
            throw InvalidSpec("branch scale " + std::to_string(branch_scales[i]) +
                              " is not a power of 2");
        if (i > 0 && branch_scales[i] <= branch_scales[i - 1])
            throw InvalidSpec("branch_scales must be strictly increasing");
    }
    if (fusion_count < static_cast<int>(branch_scales.size()))
        throw InvalidSpec("fusion_count must be >= number of branch scales");
}

void GenerationNetwork::register_conv(const std::string& name, int cout, int cin, int k,
                                      std::mt19937_64& rng, double gain) {
    Tensor w({cout, cin, k, k});
    const double limit = gain * std::sqrt(6.0 / (static_cast<double>(cin) * k * k));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (std::int64_t i = 0; i < w.size(); ++i) w[i] = dist(rng);
    index_.emplace(name + ".weight", params_.size());
    params_.push_back({name + ".weight", std::move(w)});
    index_.emplace(name + ".bias", params_.size());
    params_.push_back({name + ".bias", Tensor({cout})});
}

GenerationNetwork::GenerationNetwork(GenerationNetworkSpec spec, std::uint64_t seed)
    : spec_(std::move(spec)), seed_(seed) {
    spec_.validate();
    build(seed);
    audit();
}

// Registration order mirrors forward() exactly; forward() consumes each
// parameter exactly once and verifies nothing is left over.
void GenerationNetwork::build(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const int nb = static_cast<int>(spec_.branch_scales.size());

    register_conv("stem", spec_.width(0), 3, 3, rng);

    auto register_segment = [&](int seg, int active) {
        for (int i = 0; i < active; ++i) {
            const int c = spec_.width(static_cast<std::size_t>(i));
            const int mid = std::max(1, c / 4);
            for (int j = 0; j < spec_.blocks_per_segment; ++j) {
                const std::string base = "seg" + std::to_string(seg) + ".br" + std::to_string(i) +
                                         ".block" + std::to_string(j);
                register_conv(base + ".reduce", mid, c, 3, rng);
                register_conv(base + ".expand", c, mid, 1, rng, 0.1);
            }
        }
    };

    register_segment(0, 1);
    int active = 1;
    for (int f = 1; f < spec_.fusion_count; ++f) {
        const std::string fu = "fusion" + std::to_string(f);
        if (active < nb) {
            // spawn the next branch from the full-resolution branch
            const int target = spec_.branch_scales[static_cast<std::size_t>(active)];
            const int wnew = spec_.width(static_cast<std::size_t>(active));
            const int steps = octaves(target, 1);
            int cin = spec_.width(0);
            for (int s = 0; s < steps; ++s) {
                register_conv(fu + ".spawn.step" + std::to_string(s), wnew, cin, 3, rng);
                cin = wnew;
            }
            ++active;
        }
        int sum_ch = 0;
        for (int j = 0; j < active; ++j) sum_ch += spec_.width(static_cast<std::size_t>(j));
        for (int i = 0; i < active; ++i) {
            for (int j = 0; j < active; ++j) {
                const int down = octaves(spec_.branch_scales[static_cast<std::size_t>(i)],
                                         spec_.branch_scales[static_cast<std::size_t>(j)]);
                const int cj = spec_.width(static_cast<std::size_t>(j));
                for (int s = 0; s < down; ++s)
                    register_conv(fu + ".to" + std::to_string(i) + ".from" + std::to_string(j) +
                                      ".step" + std::to_string(s),
                                  cj, cj, 3, rng);
            }
            register_conv(fu + ".proj" + std::to_string(i),
                          spec_.width(static_cast<std::size_t>(i)), sum_ch, 1, rng);
        }
        register_segment(f, active);
    }

    int sum_all = 0;
    for (int j = 0; j < active; ++j) sum_all += spec_.width(static_cast<std::size_t>(j));
    register_conv("head.project", 2 * spec_.width(0), sum_all, 3, rng);
    register_conv("head.out", 3, 2 * spec_.width(0), 3, rng, 0.1);
}

void GenerationNetwork::audit() const {
    // Channel bookkeeping: every fusion projection must take exactly the
    // sum of the fused branch widths.
    const int nb = static_cast<int>(spec_.branch_scales.size());
    int active = 1;
    for (int f = 1; f < spec_.fusion_count; ++f) {
        if (active < nb) ++active;
        int sum_ch = 0;
        for (int j = 0; j < active; ++j) sum_ch += spec_.width(static_cast<std::size_t>(j));
        for (int i = 0; i < active; ++i) {
            const auto& w =
                params_[index_.at("fusion" + std::to_string(f) + ".proj" + std::to_string(i) +
                                  ".weight")].tensor;
            if (w.dim(1) != sum_ch)
                throw InvalidSpec("fusion channel audit failed at fusion" + std::to_string(f));
        }
    }
    const auto& head = params_[index_.at("head.project.weight")].tensor;
    int sum_all = 0;
    for (int j = 0; j < active; ++j) sum_all += spec_.width(static_cast<std::size_t>(j));
    if (head.dim(1) != sum_all)
        throw InvalidSpec("head channel audit failed");
}

struct GenerationNetwork::ParamCursor {
    const GenerationNetwork& net;
    Tape& tape;
    std::vector<Var> nodes;     // one per parameter, in registration order
    std::vector<int> used;

    ParamCursor(const GenerationNetwork& n, Tape& t, bool requires_grad) : net(n), tape(t) {
        nodes.reserve(n.params_.size());
        for (const auto& p : n.params_)
            nodes.push_back(t.leaf(p.tensor, requires_grad));
        used.assign(n.params_.size(), 0);
    }

    Var take(const std::string& name) {
        auto it = net.index_.find(name);
        if (it == net.index_.end())
            throw RuntimeFailure("forward: unknown parameter " + name);
        ++used[it->second];
        return nodes[it->second];
    }

    void check_all_used() const {
        for (std::size_t i = 0; i < used.size(); ++i)
            if (used[i] != 1)
                throw RuntimeFailure("forward: parameter " + net.params_[i].name + " used " +
                                     std::to_string(used[i]) + " times");
    }
};

Var GenerationNetwork::forward(Tape& tape, Var input, std::vector<Var>* param_nodes) const {
    if (input->value.rank() != 3 || input->value.dim(0) != 3)
        throw ShapeMismatch("forward: expected [3,H,W] input, got " +
                            Tensor::shape_str(input->value.shape()));
    const int H = input->value.dim(1), W = input->value.dim(2);
    const int ms = spec_.max_scale();
    if (H % ms != 0 || W % ms != 0)
        throw IndivisibleInput("forward: input " + std::to_string(H) + "x" + std::to_string(W) +
                               " not divisible by max branch scale " + std::to_string(ms));

    ParamCursor pc(*this, tape, param_nodes != nullptr);
    auto conv = [&](Var x, const std::string& name, int stride, int pad) {
        return ops::conv2d(tape, x, pc.take(name + ".weight"), pc.take(name + ".bias"),
                           stride, pad);
    };

    const int nb = static_cast<int>(spec_.branch_scales.size());

    auto run_segment = [&](std::vector<Var>& branches, int seg) {
        for (std::size_t i = 0; i < branches.size(); ++i) {
            Var x = branches[i];
            for (int j = 0; j < spec_.blocks_per_segment; ++j) {
                const std::string base = "seg" + std::to_string(seg) + ".br" + std::to_string(i) +
                                         ".block" + std::to_string(j);
                x = bottleneck_block(tape, x, pc.take(base + ".reduce.weight"),
                                     pc.take(base + ".reduce.bias"),
                                     pc.take(base + ".expand.weight"),
                                     pc.take(base + ".expand.bias"));
            }
            branches[i] = x;
        }
    };

    std::vector<Var> branches{ops::relu(tape, conv(input, "stem", 1, 1))};
    run_segment(branches, 0);

    for (int f = 1; f < spec_.fusion_count; ++f) {
        const std::string fu = "fusion" + std::to_string(f);
        if (static_cast<int>(branches.size()) < nb) {
            const int target = spec_.branch_scales[branches.size()];
            Var x = branches[0];
            for (int s = 0; s < octaves(target, 1); ++s)
                x = ops::relu(tape, conv(x, fu + ".spawn.step" + std::to_string(s), 2, 1));
            branches.push_back(x);
        }
        const int active = static_cast<int>(branches.size());
        std::vector<Var> fused(branches.size());
        for (int i = 0; i < active; ++i) {
            const int si = spec_.branch_scales[static_cast<std::size_t>(i)];
            std::vector<Var> inputs;
            for (int j = 0; j < active; ++j) {
                const int sj = spec_.branch_scales[static_cast<std::size_t>(j)];
                Var x = branches[static_cast<std::size_t>(j)];
                if (sj < si) {
                    // finer than target: strided-conv downsampling
                    for (int s = 0; s < octaves(si, sj); ++s)
                        x = ops::relu(tape, conv(x, fu + ".to" + std::to_string(i) + ".from" +
                                                        std::to_string(j) + ".step" +
                                                        std::to_string(s),
                                                 2, 1));
                } else if (sj > si) {
                    x = ops::bilinear_resize(tape, x, H / si, W / si);
                }
                inputs.push_back(x);
            }
            Var cat = ops::concat_channels(tape, inputs);
            fused[static_cast<std::size_t>(i)] =
                ops::relu(tape, conv(cat, fu + ".proj" + std::to_string(i), 1, 0));
        }
        branches = std::move(fused);
        run_segment(branches, f);
    }

    // output head: everything to full resolution, concat, project, emit
    std::vector<Var> full;
    for (std::size_t i = 0; i < branches.size(); ++i) {
        Var x = branches[i];
        if (spec_.branch_scales[i] > 1) x = ops::bilinear_resize(tape, x, H, W);
        full.push_back(x);
    }
    Var cat = ops::concat_channels(tape, full);
    Var y = ops::relu(tape, conv(cat, "head.project", 1, 1));
    y = ops::sigmoid(tape, conv(y, "head.out", 1, 1));

    pc.check_all_used();
    if (param_nodes) *param_nodes = pc.nodes;
    return y;
}

ImageTensor GenerationNetwork::forward(const ImageTensor& img) const {
    Tape tape;
    Var x = tape.leaf(img.data, false);
    Var y = forward(tape, x);
    ImageTensor out;
    out.data = y->value;
    out.range = PixelRange::Unit;
    return out;
}

void GenerationNetwork::load_parameters(const std::vector<NamedTensor>& params) {
    if (params.size() != params_.size())
        throw CorruptCheckpoint("load_parameters: parameter count mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i].name != params_[i].name ||
            params[i].tensor.shape() != params_[i].tensor.shape())
            throw CorruptCheckpoint("load_parameters: mismatch at " + params[i].name);
        params_[i].tensor = params[i].tensor;
    }
}

} // namespace hrst

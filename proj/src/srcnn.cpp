#include "irissr/srcnn.hpp"

#include "irissr/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace irissr {

namespace {

struct LayerShape {
    int kernel, in, out;
    nn::Activation act;
};

constexpr LayerShape kShapes[3] = {
    {9, 1, 64, nn::Activation::relu},
    {1, 64, 32, nn::Activation::relu},
    {5, 32, 1, nn::Activation::linear},
};

void check_factor(int factor)
{
    if (!is_supported_factor(factor)) {
        throw std::invalid_argument("SRCNN factor must be one of 2, 4, 8, 16 (got " + std::to_string(factor) + ")");
    }
}

nn::Tensor<float> batch_tensor(std::span<const TrainPair> pairs, std::span<const std::size_t> idx, bool inputs)
{
    const int side = inputs ? kInputPatch : kOutputPatch;
    const std::size_t len = static_cast<std::size_t>(side) * side;
    nn::Tensor<float> t(static_cast<int>(idx.size()), side, side, 1);
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const auto& src = inputs ? pairs[idx[i]].input : pairs[idx[i]].target;
        if (src.size() != len) {
            throw std::invalid_argument("training pair has the wrong patch size");
        }
        std::copy(src.begin(), src.end(), t.data.begin() + static_cast<std::ptrdiff_t>(i * len));
    }
    return t;
}

} // namespace

const char* to_string(Provenance p)
{
    switch (p) {
    case Provenance::scratch:
        return "scratch";
    case Provenance::transfer:
        return "transfer";
    case Provenance::fine_tuned:
        return "fine-tuned";
    }
    return "unknown";
}

const char* to_string(Regime r)
{
    switch (r) {
    case Regime::from_scratch:
        return "FS";
    case Regime::transfer:
        return "TL";
    case Regime::fine_tune:
        return "FT";
    }
    return "unknown";
}

Regime regime_from_string(const std::string& name)
{
    if (name == "FS" || name == "fs") {
        return Regime::from_scratch;
    }
    if (name == "TL" || name == "tl") {
        return Regime::transfer;
    }
    if (name == "FT" || name == "ft") {
        return Regime::fine_tune;
    }
    throw std::invalid_argument("unknown training regime: " + name + " (expected FS, TL or FT)");
}

void validate_srcnn_architecture(const nn::Network<float>& net)
{
    if (net.layers.size() != 3) {
        throw std::invalid_argument("SRCNN must have exactly three layers");
    }
    for (int i = 0; i < 3; ++i) {
        const auto* conv = std::get_if<nn::ConvLayer<float>>(&net.layers[i]);
        const auto& s = kShapes[i];
        if (!conv || conv->kernel_size != s.kernel || conv->in_channels != s.in || conv->out_channels != s.out ||
            conv->stride != 1 || conv->padding != 0 || conv->activation != s.act) {
            throw std::invalid_argument("layer " + std::to_string(i + 1) + " does not match the SRCNN architecture");
        }
        conv->validate();
    }
}

SrcnnModel SrcnnModel::from_network(nn::Network<float> net, int factor, Provenance provenance)
{
    check_factor(factor);
    validate_srcnn_architecture(net);
    return SrcnnModel{std::move(net), factor, provenance};
}

SrcnnModel build_default_srcnn(int factor, std::uint64_t seed, SrcnnInit init)
{
    check_factor(factor);
    std::mt19937_64 rng(seed);
    nn::Network<float> net;
    for (const auto& s : kShapes) {
        nn::ConvLayer<float> layer(s.kernel, s.in, s.out, 1, 0, s.act);
        const double stddev = init.scheme == SrcnnInit::Scheme::gaussian
                                  ? init.stddev
                                  : std::sqrt(2.0 / (static_cast<double>(s.kernel) * s.kernel * s.in));
        nn::init_gaussian(layer.weights, stddev, rng);
        net.layers.emplace_back(std::move(layer));
    }
    return SrcnnModel{std::move(net), factor, Provenance::scratch};
}

void TrainRegime::validate() const
{
    check_factor(factor);
    config.sgd.validate();
    if (mode == Regime::from_scratch && base_weights) {
        throw std::invalid_argument("from-scratch training does not take base weights");
    }
    if (mode != Regime::from_scratch && !base_weights) {
        throw MissingWeightsError(std::string(to_string(mode)) + " regime requires base weights");
    }
    if (config.log_interval < 1) {
        throw std::invalid_argument("log_interval must be positive");
    }
}

double evaluate_mse(const SrcnnModel& model, std::span<const TrainPair> pairs)
{
    if (pairs.empty()) {
        throw std::invalid_argument("evaluate_mse on an empty pair list");
    }
    double total = 0.0;
    std::size_t count = 0;
    constexpr std::size_t kChunk = 64;
    std::vector<std::size_t> idx;
    for (std::size_t start = 0; start < pairs.size(); start += kChunk) {
        idx.resize(std::min(kChunk, pairs.size() - start));
        std::iota(idx.begin(), idx.end(), start);
        const auto x = batch_tensor(pairs, idx, true);
        const auto t = batch_tensor(pairs, idx, false);
        const auto loss = nn::mse_loss(model.net.forward(x), t);
        total += loss.value * static_cast<double>(t.size());
        count += t.size();
    }
    return total / static_cast<double>(count);
}

SrcnnTrainResult train_srcnn(const SrcnnModel& initial, std::span<const TrainPair> pairs, const TrainRegime& regime)
{
    regime.validate();
    SrcnnTrainResult result;
    switch (regime.mode) {
    case Regime::from_scratch:
        result.model = initial;
        result.model.trained_factor = regime.factor;
        result.model.provenance = Provenance::scratch;
        validate_srcnn_architecture(result.model.net);
        break;
    case Regime::transfer:
        result.model = load_srcnn(*regime.base_weights, regime.factor, Provenance::transfer);
        return result;
    case Regime::fine_tune:
        result.model = load_srcnn(*regime.base_weights, regime.factor, Provenance::fine_tuned);
        break;
    }

    const auto& sgd = regime.config.sgd;
    if (sgd.iterations == 0) {
        return result;
    }
    if (pairs.empty()) {
        throw std::invalid_argument("SRCNN training needs at least one pair");
    }

    nn::SgdOptimizer<float> opt(sgd);
    const double s = regime.config.last_layer_lr_scale;
    const std::vector<double> lr_scale{1.0, 1.0, 1.0, 1.0, s, s};
    std::mt19937_64 rng(regime.config.seed);
    std::vector<std::size_t> order(pairs.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::size_t cursor = 0;

    const auto batch = static_cast<std::size_t>(sgd.batch_size);
    std::vector<std::size_t> idx;
    double interval_sum = 0.0;
    int interval_count = 0;
    nn::Network<float>::Trace trace;
    for (int it = 1; it <= sgd.iterations; ++it) {
        idx.clear();
        while (idx.size() < batch) {
            if (cursor == order.size()) {
                std::shuffle(order.begin(), order.end(), rng);
                cursor = 0;
            }
            idx.push_back(order[cursor++]);
            if (idx.size() == pairs.size()) {
                break;
            }
        }
        const auto x = batch_tensor(pairs, idx, true);
        const auto t = batch_tensor(pairs, idx, false);
        const auto loss = nn::mse_loss(result.model.net.forward(x, trace), t);
        const auto grads = result.model.net.backward(trace, loss.grad);
        auto params = result.model.net.parameters();
        const auto gspans = grads.spans();
        opt.step(params, gspans, lr_scale);

        interval_sum += loss.value;
        ++interval_count;
        if (it % regime.config.log_interval == 0 || it == sgd.iterations) {
            result.history.push_back({it, interval_sum / interval_count});
            interval_sum = 0.0;
            interval_count = 0;
        }
    }
    return result;
}

Image apply_srcnn(const SrcnnModel& model, const Image& img)
{
    const auto padded = reflect_pad(img, kPatchBorder);
    nn::Tensor<float> x(1, padded.height, padded.width, 1, padded.data);
    const auto y = model.net.forward(x);
    Image out(img.width, img.height, y.data);
    out.clamp();
    return out;
}

std::vector<float> predict_patch(const SrcnnModel& model, std::span<const float> patch33)
{
    if (patch33.size() != static_cast<std::size_t>(kInputPatch) * kInputPatch) {
        throw std::invalid_argument("expected a 33x33 patch");
    }
    nn::Tensor<float> x(1, kInputPatch, kInputPatch, 1, std::vector<float>(patch33.begin(), patch33.end()));
    return model.net.forward(x).data;
}

Image super_resolve(const Image& lr, int target_factor, const SrcnnModel& model, CascadeStats* stats)
{
    return cascade_upscale(
        lr, target_factor, model.trained_factor, [&](const Image& im) { return apply_srcnn(model, im); }, stats);
}

Image refine(const Image& upscaled, int target_factor, const SrcnnModel& model, CascadeStats* stats)
{
    return cascade_refine(
        upscaled, target_factor, model.trained_factor, [&](const Image& im) { return apply_srcnn(model, im); },
        stats);
}

void save_srcnn(const SrcnnModel& model, const std::filesystem::path& path)
{
    validate_srcnn_architecture(model.net);
    nn::save_weights_file(model.net, path);
}

SrcnnModel load_srcnn(const std::filesystem::path& path, int trained_factor, Provenance provenance)
{
    auto net = nn::load_weights_file(path);
    return SrcnnModel::from_network(std::move(net), trained_factor, provenance);
}

} // namespace irissr

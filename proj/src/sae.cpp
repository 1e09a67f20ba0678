#include "irissr/sae.hpp"

#include "irissr/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

namespace irissr {

namespace {

nn::Tensor<float> gather(std::span<const std::vector<float>> rows, std::span<const std::size_t> idx, int dim)
{
    nn::Tensor<float> t(static_cast<int>(idx.size()), 1, 1, dim);
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const auto& r = rows[idx[i]];
        if (r.size() != static_cast<std::size_t>(dim)) {
            throw std::invalid_argument("vector of length " + std::to_string(r.size()) + " where " +
                                        std::to_string(dim) + " was expected");
        }
        std::copy(r.begin(), r.end(), t.data.begin() + static_cast<std::ptrdiff_t>(i * dim));
    }
    return t;
}

// Every dense layer is trained in the centred parametrisation
// y = act(W^T (x - c) + b~) with c = 0.5 (mid-grey input, sigmoid midpoint),
// which removes the large shared offset from the weight gradients. The
// network itself keeps the plain form with b = b~ - W^T c, so the stored
// model is an ordinary dense chain.
constexpr float kCentre = 0.5f;

class CentredSgd {
public:
    CentredSgd(nn::Network<float>& net, const SaeTrainConfig& cfg)
        : net_(net), opt_({cfg.learning_rate, cfg.momentum, cfg.batch_size, 1})
    {
        for (auto& layer : net_.layers) {
            const auto& d = std::get<nn::DenseLayer<float>>(layer);
            auto b = d.bias;
            const auto sums = column_sums(d);
            for (int o = 0; o < d.out_dim; ++o) {
                b[o] += static_cast<float>(kCentre * sums[o]);
            }
            centred_bias_.push_back(std::move(b));
        }
    }

    void step(const nn::Network<float>::Gradients& grads)
    {
        std::vector<std::vector<float>> gw(grads.weights);
        std::vector<std::span<float>> params;
        std::vector<std::span<const float>> gspans;
        for (std::size_t li = 0; li < net_.layers.size(); ++li) {
            auto& d = std::get<nn::DenseLayer<float>>(net_.layers[li]);
            const auto& gb = grads.bias[li];
            for (int i = 0; i < d.in_dim; ++i) {
                float* row = gw[li].data() + static_cast<std::size_t>(i) * d.out_dim;
                for (int o = 0; o < d.out_dim; ++o) {
                    row[o] -= kCentre * gb[o];
                }
            }
            params.emplace_back(d.weights);
            params.emplace_back(centred_bias_[li]);
            gspans.emplace_back(gw[li]);
            gspans.emplace_back(gb);
        }
        opt_.step(params, gspans);
        for (std::size_t li = 0; li < net_.layers.size(); ++li) {
            auto& d = std::get<nn::DenseLayer<float>>(net_.layers[li]);
            const auto sums = column_sums(d);
            for (int o = 0; o < d.out_dim; ++o) {
                d.bias[o] = static_cast<float>(centred_bias_[li][o] - kCentre * sums[o]);
            }
        }
    }

private:
    static std::vector<double> column_sums(const nn::DenseLayer<float>& d)
    {
        std::vector<double> sums(static_cast<std::size_t>(d.out_dim), 0.0);
        for (int i = 0; i < d.in_dim; ++i) {
            const float* row = d.weights.data() + static_cast<std::size_t>(i) * d.out_dim;
            for (int o = 0; o < d.out_dim; ++o) {
                sums[o] += row[o];
            }
        }
        return sums;
    }

    nn::Network<float>& net_;
    nn::SgdOptimizer<float> opt_;
    std::vector<std::vector<float>> centred_bias_;
};

struct EpochOptions {
    int epochs = 1;
    double min_relative_improvement = 0.0; // 0 disables early stopping
};

// Minibatch SGD over (inputs, targets) for whole epochs; returns epoch means.
std::vector<double> train_epochs(nn::Network<float>& net, std::span<const std::vector<float>> inputs,
                                 std::span<const std::vector<float>> targets, const SaeTrainConfig& cfg,
                                 EpochOptions opts, std::uint64_t seed)
{
    if (inputs.size() != targets.size() || inputs.empty()) {
        throw std::invalid_argument("training needs equally many non-empty inputs and targets");
    }
    const int in_dim = static_cast<int>(inputs.front().size());
    const int out_dim = static_cast<int>(targets.front().size());
    CentredSgd opt(net, cfg);
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> order(inputs.size());
    std::iota(order.begin(), order.end(), 0);

    std::vector<double> history;
    nn::Network<float>::Trace trace;
    for (int epoch = 0; epoch < opts.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double sum = 0.0;
        std::size_t weight = 0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
            const auto end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
            const std::span<const std::size_t> idx(order.data() + start, end - start);
            const auto x = gather(inputs, idx, in_dim);
            const auto t = gather(targets, idx, out_dim);
            const auto loss = nn::mse_loss(net.forward(x, trace), t);
            if (!std::isfinite(loss.value)) {
                throw std::runtime_error("SAE training diverged (non-finite loss); lower the learning rate");
            }
            opt.step(net.backward(trace, loss.grad));
            sum += loss.value * static_cast<double>(idx.size());
            weight += idx.size();
        }
        history.push_back(sum / static_cast<double>(weight));
        if (opts.min_relative_improvement > 0.0 && history.size() >= 2) {
            const double prev = history[history.size() - 2];
            const double cur = history.back();
            if (prev > 0.0 && (prev - cur) / prev < opts.min_relative_improvement) {
                break;
            }
        }
    }
    return history;
}

std::vector<std::vector<float>> encode_all(const nn::DenseLayer<float>& encoder,
                                           std::span<const std::vector<float>> data)
{
    std::vector<std::vector<float>> codes;
    codes.reserve(data.size());
    constexpr std::size_t kChunk = 128;
    std::vector<std::size_t> idx;
    for (std::size_t start = 0; start < data.size(); start += kChunk) {
        idx.resize(std::min(kChunk, data.size() - start));
        std::iota(idx.begin(), idx.end(), start);
        const auto y = nn::dense_forward(gather(data, idx, encoder.in_dim), encoder);
        for (std::size_t i = 0; i < idx.size(); ++i) {
            const auto* row = y.data.data() + i * static_cast<std::size_t>(encoder.out_dim);
            codes.emplace_back(row, row + encoder.out_dim);
        }
    }
    return codes;
}

void split_pairs(std::span<const TrainPair> pairs, std::vector<std::vector<float>>& in,
                 std::vector<std::vector<float>>& out)
{
    in.reserve(pairs.size());
    out.reserve(pairs.size());
    for (const auto& p : pairs) {
        in.push_back(p.input);
        out.push_back(p.target);
    }
}

nn::DenseLayer<float> random_dense(int in, int out, nn::Activation act, std::mt19937_64& rng)
{
    nn::DenseLayer<float> layer(in, out, act);
    // Sigmoid layers use the sigmoid variant of Glorot's range so the input
    // signal survives the depth; other layers use 1 / sqrt(in).
    const double limit = act == nn::Activation::sigmoid ? 4.0 * std::sqrt(6.0 / (in + out))
                                                        : 1.0 / std::sqrt(static_cast<double>(in));
    nn::init_uniform(layer.weights, limit, rng);
    return layer;
}

} // namespace

void SaeTrainConfig::validate() const
{
    if (!(learning_rate > 0.0)) {
        throw std::invalid_argument("SAE learning_rate must be positive");
    }
    if (epochs < 1) {
        throw std::invalid_argument("SAE epochs must be at least 1");
    }
    if (batch_size < 1) {
        throw std::invalid_argument("SAE batch_size must be positive");
    }
    if (momentum < 0.0 || momentum >= 1.0) {
        throw std::invalid_argument("SAE momentum must lie in [0, 1)");
    }
}

SaeTrainConfig SaeTrainConfig::desk_scale(int epochs)
{
    SaeTrainConfig cfg;
    cfg.learning_rate = 2.0;
    cfg.momentum = 0.9;
    cfg.epochs = epochs;
    return cfg;
}

Autoencoder pretrain_layer(std::span<const std::vector<float>> data, int in_dim, int hidden_dim,
                           const SaeTrainConfig& cfg, std::vector<double>* epoch_mse)
{
    cfg.validate();
    if (data.empty()) {
        throw std::invalid_argument("pretrain_layer needs at least one data vector");
    }
    for (const auto& v : data) {
        if (v.size() != static_cast<std::size_t>(in_dim)) {
            throw std::invalid_argument("pretraining vector length differs from in_dim");
        }
    }
    std::mt19937_64 rng(cfg.seed + static_cast<std::uint64_t>(in_dim) * 7919u + static_cast<std::uint64_t>(hidden_dim));
    nn::Network<float> ae({random_dense(in_dim, hidden_dim, cfg.hidden_activation, rng),
                           random_dense(hidden_dim, in_dim, cfg.decoder_activation, rng)});
    auto history = train_epochs(ae, data, data, cfg, {cfg.epochs, cfg.min_relative_improvement}, rng());
    if (epoch_mse) {
        *epoch_mse = std::move(history);
    }
    return Autoencoder{std::get<nn::DenseLayer<float>>(ae.layers[0]), std::get<nn::DenseLayer<float>>(ae.layers[1])};
}

std::vector<Autoencoder> pretrain_stack(std::span<const std::vector<float>> inputs, const SaeTrainConfig& cfg)
{
    std::vector<Autoencoder> stack;
    std::vector<std::vector<float>> codes(inputs.begin(), inputs.end());
    for (std::size_t i = 0; i + 2 < kSaeDims.size(); ++i) {
        stack.push_back(pretrain_layer(codes, kSaeDims[i], kSaeDims[i + 1], cfg));
        if (i + 3 < kSaeDims.size()) {
            codes = encode_all(stack.back().encoder, codes);
        }
    }
    return stack;
}

void validate_sae_architecture(const nn::Network<float>& net)
{
    if (net.layers.size() != kSaeDims.size() - 1) {
        throw std::invalid_argument("SAE network must have exactly five dense layers");
    }
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const auto* d = std::get_if<nn::DenseLayer<float>>(&net.layers[i]);
        if (!d || d->in_dim != kSaeDims[i] || d->out_dim != kSaeDims[i + 1]) {
            throw std::invalid_argument("SAE layer " + std::to_string(i + 1) +
                                        " does not follow the 1089-1000-2000-2600-2000-441 chain");
        }
        d->validate();
    }
}

SaeModel stack_encoders(std::span<const Autoencoder> layers, const SaeTrainConfig& cfg)
{
    cfg.validate();
    if (layers.size() != kSaeDims.size() - 2) {
        throw std::invalid_argument("expected four pretrained encoders, got " + std::to_string(layers.size()));
    }
    SaeModel model;
    for (const auto& ae : layers) {
        model.net.layers.emplace_back(ae.encoder);
    }
    std::mt19937_64 rng(cfg.seed ^ 0x5ae0u);
    model.net.layers.emplace_back(random_dense(kSaeDims[4], kSaeDims[5], cfg.output_activation, rng));
    validate_sae_architecture(model.net);
    return model;
}

void fine_tune(SaeModel& model, std::span<const TrainPair> pairs, const SaeTrainConfig& cfg,
               std::vector<double>* epoch_mse)
{
    cfg.validate();
    validate_sae_architecture(model.net);
    if (pairs.empty()) {
        throw std::invalid_argument("fine-tuning needs at least one pair");
    }
    std::vector<std::vector<float>> in, out;
    split_pairs(pairs, in, out);
    auto history = train_epochs(model.net, in, out, cfg, {cfg.epochs, 0.0}, cfg.seed + 17);
    model.trained = true;
    if (epoch_mse) {
        *epoch_mse = std::move(history);
    }
}

SaeModel stack_and_fine_tune(std::span<const Autoencoder> layers, std::span<const TrainPair> pairs,
                             const SaeTrainConfig& cfg, std::vector<double>* epoch_mse)
{
    auto model = stack_encoders(layers, cfg);
    fine_tune(model, pairs, cfg, epoch_mse);
    return model;
}

double evaluate_mse(const SaeModel& model, std::span<const TrainPair> pairs)
{
    if (pairs.empty()) {
        throw std::invalid_argument("evaluate_mse on an empty pair list");
    }
    std::vector<std::vector<float>> in, out;
    split_pairs(pairs, in, out);
    double total = 0.0;
    constexpr std::size_t kChunk = 64;
    std::vector<std::size_t> idx;
    for (std::size_t start = 0; start < in.size(); start += kChunk) {
        idx.resize(std::min(kChunk, in.size() - start));
        std::iota(idx.begin(), idx.end(), start);
        const auto y = model.net.forward(gather(in, idx, kSaeDims.front()));
        total += nn::mse_loss(y, gather(out, idx, kSaeDims.back())).value * static_cast<double>(idx.size());
    }
    return total / static_cast<double>(in.size());
}

std::vector<float> reconstruct_patch(const SaeModel& model, std::span<const float> patch33)
{
    if (!model.trained) {
        throw std::logic_error("SAE model has not been trained");
    }
    if (patch33.size() != static_cast<std::size_t>(kSaeDims.front())) {
        throw std::invalid_argument("expected a 33x33 patch");
    }
    auto y = model.net.forward(nn::Tensor<float>::flat(std::vector<float>(patch33.begin(), patch33.end()))).data;
    for (auto& v : y) {
        v = std::clamp(v, 0.0f, 1.0f);
    }
    return y;
}

Image apply_sae(const SaeModel& model, const Image& img, int stride)
{
    if (!model.trained) {
        throw std::logic_error("SAE model has not been trained");
    }
    const auto padded = reflect_pad(img, kPatchBorder);
    const auto rows = grid_anchors(padded.height, kInputPatch, stride, true);
    const auto cols = grid_anchors(padded.width, kInputPatch, stride, true);

    std::vector<PatchOrigin> origins;
    for (int r : rows) {
        for (int c : cols) {
            origins.push_back({r, c});
        }
    }
    const std::size_t in_len = static_cast<std::size_t>(kInputPatch) * kInputPatch;
    const std::size_t out_len = static_cast<std::size_t>(kOutputPatch) * kOutputPatch;
    std::vector<std::vector<float>> blocks;
    blocks.reserve(origins.size());
    constexpr std::size_t kChunk = 64;
    for (std::size_t start = 0; start < origins.size(); start += kChunk) {
        const std::size_t n = std::min(kChunk, origins.size() - start);
        nn::Tensor<float> x(static_cast<int>(n), 1, 1, kSaeDims.front());
        for (std::size_t i = 0; i < n; ++i) {
            const auto& o = origins[start + i];
            for (int r = 0; r < kInputPatch; ++r) {
                std::copy_n(&padded.data[static_cast<std::size_t>(o.row + r) * padded.width + o.col], kInputPatch,
                            x.data.begin() + static_cast<std::ptrdiff_t>(i * in_len + static_cast<std::size_t>(r) * kInputPatch));
            }
        }
        const auto y = model.net.forward(x);
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<float> block(y.data.begin() + static_cast<std::ptrdiff_t>(i * out_len),
                                     y.data.begin() + static_cast<std::ptrdiff_t>((i + 1) * out_len));
            for (auto& v : block) {
                v = std::clamp(v, 0.0f, 1.0f);
            }
            blocks.push_back(std::move(block));
        }
    }
    // A padded anchor a maps its 21x21 output onto original rows a .. a + 20.
    return assemble_patches(blocks, kOutputPatch, origins, img.width, img.height);
}

Image super_resolve_sae(const Image& lr, int target_factor, const SaeModel& model, int stride, CascadeStats* stats)
{
    return cascade_upscale(
        lr, target_factor, model.trained_factor, [&](const Image& im) { return apply_sae(model, im, stride); },
        stats);
}

Image refine_sae(const Image& upscaled, int target_factor, const SaeModel& model, int stride, CascadeStats* stats)
{
    return cascade_refine(
        upscaled, target_factor, model.trained_factor, [&](const Image& im) { return apply_sae(model, im, stride); },
        stats);
}

void save_sae(const SaeModel& model, const std::filesystem::path& path)
{
    validate_sae_architecture(model.net);
    nn::save_weights_file(model.net, path);
}

SaeModel load_sae(const std::filesystem::path& path, int trained_factor)
{
    if (!is_supported_factor(trained_factor)) {
        throw std::invalid_argument("SAE factor must be one of 2, 4, 8, 16");
    }
    auto net = nn::load_weights_file(path);
    validate_sae_architecture(net);
    return SaeModel{std::move(net), trained_factor, true};
}

} // namespace irissr

#pragma once

#include "irissr/cascade.hpp"
#include "irissr/image.hpp"
#include "irissr/nn.hpp"
#include "irissr/training_data.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace irissr {

enum class Provenance { scratch, transfer, fine_tuned };

/// FS: train from random weights. TL: use foreign base weights unchanged.
/// FT: continue training foreign base weights on the target data.
enum class Regime { from_scratch, transfer, fine_tune };

const char* to_string(Provenance p);
const char* to_string(Regime r);
Regime regime_from_string(const std::string& name);

/// Zero-mean Gaussian weights, zero biases. `he` uses sqrt(2 / fan_in);
/// `gaussian` uses a fixed stddev (0.001 in the original SRCNN recipe).
struct SrcnnInit {
    enum class Scheme { gaussian, he };
    Scheme scheme = Scheme::he;
    double stddev = 0.001;
};

/// 9x9x1 -> 64 (ReLU), 1x1x64 -> 32 (ReLU), 5x5x32 -> 1 (linear), stride 1, no padding.
struct SrcnnModel {
    nn::Network<float> net;
    int trained_factor = 2;
    Provenance provenance = Provenance::scratch;

    static constexpr std::size_t kParameterCount = 8129;

    /// Wraps `net` after checking that it has the exact SRCNN architecture.
    static SrcnnModel from_network(nn::Network<float> net, int factor, Provenance provenance);
};

void validate_srcnn_architecture(const nn::Network<float>& net);

SrcnnModel build_default_srcnn(int factor, std::uint64_t seed = 0, SrcnnInit init = {});

struct SrcnnTrainConfig {
    // 1e-4 / 1e-5 under a per-patch summed Euclidean loss, rescaled to the
    // element-mean MSE used here (x 441 / 2).
    nn::SgdConfig sgd{0.02205, 0.9, 16, 2000};
    double last_layer_lr_scale = 0.1;
    int log_interval = 100;
    std::uint64_t seed = 0;
};

struct TrainRegime {
    Regime mode = Regime::from_scratch;
    std::optional<std::filesystem::path> base_weights;
    int factor = 2;
    SrcnnTrainConfig config;

    void validate() const;
};

struct LossRecord {
    int iteration = 0;
    double mean_mse = 0.0;
};

struct SrcnnTrainResult {
    SrcnnModel model;
    std::vector<LossRecord> history;
};

/// FS trains `initial`; TL returns the base weights untouched; FT loads the
/// base weights and keeps training. TL/FT throw MissingWeightsError when the
/// base weights cannot be loaded.
SrcnnTrainResult train_srcnn(const SrcnnModel& initial, std::span<const TrainPair> pairs, const TrainRegime& regime);

/// Mean MSE of the model's 21x21 predictions over all pairs.
double evaluate_mse(const SrcnnModel& model, std::span<const TrainPair> pairs);

/// One full-image network pass. The input is reflect-padded by 6 pixels so
/// the output has the input's size; values are clamped to [0, 1].
Image apply_srcnn(const SrcnnModel& model, const Image& img);

/// Forward of a single 33x33 patch, returning the 21x21 prediction.
std::vector<float> predict_patch(const SrcnnModel& model, std::span<const float> patch33);

/// Low-resolution input, k = cascade_passes(target, trained) rounds of
/// bicubic x trained_factor followed by a network pass.
Image super_resolve(const Image& lr, int target_factor, const SrcnnModel& model, CascadeStats* stats = nullptr);

/// Input already bicubic-upscaled to full size; k network passes in place.
Image refine(const Image& upscaled, int target_factor, const SrcnnModel& model, CascadeStats* stats = nullptr);

void save_srcnn(const SrcnnModel& model, const std::filesystem::path& path);
SrcnnModel load_srcnn(const std::filesystem::path& path, int trained_factor, Provenance provenance);

} // namespace irissr

#pragma once

#include "irissr/cascade.hpp"
#include "irissr/image.hpp"
#include "irissr/nn.hpp"
#include "irissr/training_data.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace irissr {

/// Fine-tuned network widths: 33x33 input, four encoders, 21x21 output.
inline constexpr std::array<int, 6> kSaeDims{1089, 1000, 2000, 2600, 2000, 441};

/// Defaults follow the published recipe (plain gradient descent, rate 0.2,
/// 150 epochs). Training always runs in a centred parametrisation (inputs and
/// sigmoid codes offset by 0.5) that is folded back into the biases, so the
/// learned network is a plain dense chain.
struct SaeTrainConfig {
    double learning_rate = 0.2;
    int epochs = 150;
    int batch_size = 16;
    double momentum = 0.0;
    /// Pretraining stops early once the epoch MSE improves by less than this fraction.
    double min_relative_improvement = 1e-4;
    nn::Activation hidden_activation = nn::Activation::sigmoid;
    nn::Activation decoder_activation = nn::Activation::sigmoid;
    nn::Activation output_activation = nn::Activation::linear;
    std::uint64_t seed = 0;

    void validate() const;

    /// Settings that converge within tens of epochs on small corpora:
    /// rate 2.0 with momentum 0.9.
    static SaeTrainConfig desk_scale(int epochs);
};

struct Autoencoder {
    nn::DenseLayer<float> encoder;
    nn::DenseLayer<float> decoder;
};

/// Trains an in_dim -> hidden_dim -> in_dim auto-encoder on reconstruction MSE.
/// `epoch_mse` receives the mean training loss of every completed epoch.
Autoencoder pretrain_layer(std::span<const std::vector<float>> data, int in_dim, int hidden_dim,
                           const SaeTrainConfig& cfg, std::vector<double>* epoch_mse = nullptr);

/// Greedy layer-wise pretraining of the four encoders; each stage is trained
/// on the hidden codes of the previous one.
std::vector<Autoencoder> pretrain_stack(std::span<const std::vector<float>> inputs, const SaeTrainConfig& cfg);

struct SaeModel {
    nn::Network<float> net;
    int trained_factor = 2;
    bool trained = false;
};

/// Checks the 1089-1000-2000-2600-2000-441 dense chain.
void validate_sae_architecture(const nn::Network<float>& net);

/// Stacks four pretrained encoders under a freshly initialised 2000 -> 441
/// output layer. The result is not yet marked as trained.
SaeModel stack_encoders(std::span<const Autoencoder> layers, const SaeTrainConfig& cfg);

/// Supervised end-to-end training of a stacked model (all layers updated).
void fine_tune(SaeModel& model, std::span<const TrainPair> pairs, const SaeTrainConfig& cfg,
               std::vector<double>* epoch_mse = nullptr);

SaeModel stack_and_fine_tune(std::span<const Autoencoder> layers, std::span<const TrainPair> pairs,
                             const SaeTrainConfig& cfg, std::vector<double>* epoch_mse = nullptr);

/// Mean MSE of the stacked network over the pairs (works on untrained models).
double evaluate_mse(const SaeModel& model, std::span<const TrainPair> pairs);

/// Row-major vectorise -> forward -> 21x21, clamped to [0, 1].
std::vector<float> reconstruct_patch(const SaeModel& model, std::span<const float> patch33);

inline constexpr int kDefaultSaeStride = 7;

/// One full-image pass: reflect-pad by 6, reconstruct patches on a stride
/// grid closed at the far edges, average the overlapping 21x21 outputs.
Image apply_sae(const SaeModel& model, const Image& img, int stride = kDefaultSaeStride);

Image super_resolve_sae(const Image& lr, int target_factor, const SaeModel& model, int stride = kDefaultSaeStride,
                        CascadeStats* stats = nullptr);
Image refine_sae(const Image& upscaled, int target_factor, const SaeModel& model, int stride = kDefaultSaeStride,
                 CascadeStats* stats = nullptr);

void save_sae(const SaeModel& model, const std::filesystem::path& path);
SaeModel load_sae(const std::filesystem::path& path, int trained_factor);

} // namespace irissr

#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace irissr::nn {

enum class Activation : std::uint32_t { linear = 0, relu = 1, sigmoid = 2 };

const char* to_string(Activation a);
Activation activation_from_string(const std::string& name);

/// Batched feature maps in NHWC order. Flat vectors use height = width = 1.
template <typename T>
struct Tensor {
    int batch = 1;
    int height = 1;
    int width = 1;
    int channels = 1;
    std::vector<T> data;

    Tensor() = default;
    Tensor(int n, int h, int w, int c);
    Tensor(int n, int h, int w, int c, std::vector<T> values);

    static Tensor flat(std::vector<T> values) { const int n = static_cast<int>(values.size()); return Tensor(1, 1, 1, n, std::move(values)); }

    std::size_t size() const { return data.size(); }
    std::size_t sample_size() const { return static_cast<std::size_t>(height) * width * channels; }
    bool same_shape(const Tensor& other) const
    {
        return batch == other.batch && height == other.height && width == other.width && channels == other.channels;
    }
    T& at(int n, int y, int x, int c) { return data[((static_cast<std::size_t>(n) * height + y) * width + x) * channels + c]; }
    T at(int n, int y, int x, int c) const { return data[((static_cast<std::size_t>(n) * height + y) * width + x) * channels + c]; }
};

/// Weights are laid out as [ky][kx][in_channel][out_channel].
template <typename T>
struct ConvLayer {
    int kernel_size = 1;
    int in_channels = 1;
    int out_channels = 1;
    int stride = 1;
    int padding = 0;
    Activation activation = Activation::linear;
    std::vector<T> weights;
    std::vector<T> bias;

    ConvLayer() = default;
    ConvLayer(int kernel, int in_ch, int out_ch, int stride_ = 1, int padding_ = 0,
              Activation act = Activation::linear);

    std::size_t weight_count() const
    {
        return static_cast<std::size_t>(kernel_size) * kernel_size * in_channels * out_channels;
    }
    T& weight(int ky, int kx, int ci, int co)
    {
        return weights[((static_cast<std::size_t>(ky) * kernel_size + kx) * in_channels + ci) * out_channels + co];
    }
    int output_extent(int input_extent) const { return (input_extent + 2 * padding - kernel_size) / stride + 1; }
    void validate() const;
};

/// Weights are laid out as [in][out]; forward computes act(x W + b).
template <typename T>
struct DenseLayer {
    int in_dim = 1;
    int out_dim = 1;
    Activation activation = Activation::linear;
    std::vector<T> weights;
    std::vector<T> bias;

    DenseLayer() = default;
    DenseLayer(int in, int out, Activation act);

    void validate() const;
};

template <typename T>
struct LayerGrads {
    std::vector<T> weights;
    std::vector<T> bias;
    Tensor<T> input; // empty when the caller did not ask for it
};

inline float relu(float x) { return x > 0.0f ? x : 0.0f; }
inline double relu(double x) { return x > 0.0 ? x : 0.0; }
/// Subgradient convention: 0 at x == 0.
inline float relu_grad(float x) { return x > 0.0f ? 1.0f : 0.0f; }
inline double relu_grad(double x) { return x > 0.0 ? 1.0 : 0.0; }

template <typename T>
void apply_activation(std::span<T> values, Activation act);

/// Multiplies `grad` in place by act'(.) expressed through the activated output.
template <typename T>
void activation_backward(std::span<const T> output, std::span<T> grad, Activation act);

/// Cross-correlation plus bias. The layer's activation is NOT applied.
template <typename T>
Tensor<T> conv_forward(const Tensor<T>& input, const ConvLayer<T>& layer);

/// Gradients of conv_forward (pre-activation) with respect to weights, bias and input.
template <typename T>
LayerGrads<T> conv_backward(const Tensor<T>& input, const ConvLayer<T>& layer, const Tensor<T>& upstream,
                            bool want_input_grad = true);

/// act(x W + b) for each sample of the batch.
template <typename T>
Tensor<T> dense_forward(const Tensor<T>& input, const DenseLayer<T>& layer);

/// `upstream` is the gradient with respect to the activated output.
template <typename T>
LayerGrads<T> dense_backward(const Tensor<T>& input, const DenseLayer<T>& layer, const Tensor<T>& upstream,
                             bool want_input_grad = true);

template <typename T>
struct LossResult {
    double value = 0.0;
    Tensor<T> grad;
};

/// Mean over all elements of (pred - target)^2 and its gradient 2 (pred - target) / n.
template <typename T>
LossResult<T> mse_loss(const Tensor<T>& pred, const Tensor<T>& target);

template <typename T>
using Layer = std::variant<ConvLayer<T>, DenseLayer<T>>;

/// Feed-forward chain of conv/dense layers, each followed by its own activation.
template <typename T>
class Network {
public:
    std::vector<Layer<T>> layers;

    Network() = default;
    explicit Network(std::vector<Layer<T>> l) : layers(std::move(l)) {}

    /// activations[0] is the input; activations[i + 1] is the output of layer i.
    struct Trace {
        std::vector<Tensor<T>> activations;
    };

    struct Gradients {
        std::vector<std::vector<T>> weights;
        std::vector<std::vector<T>> bias;
        Tensor<T> input;

        /// Views in the order of Network::parameters().
        std::vector<std::span<const T>> spans() const;
    };

    Tensor<T> forward(const Tensor<T>& input) const;
    Tensor<T> forward(const Tensor<T>& input, Trace& trace) const;
    Gradients backward(const Trace& trace, const Tensor<T>& output_grad, bool want_input_grad = false) const;

    std::size_t parameter_count() const;
    std::vector<std::span<T>> parameters();
    std::vector<std::span<const T>> parameters() const;

    template <typename U>
    Network<U> cast() const;

    void validate() const;
};

struct SgdConfig {
    double learning_rate = 0.01;
    double momentum = 0.9;
    int batch_size = 16;
    int iterations = 1000;

    void validate() const;
};

/// SGD with classical momentum: v <- m v + g; p <- p - lr v.
/// Velocity is kept per parameter tensor, keyed by position in the span list.
template <typename T>
class SgdOptimizer {
public:
    explicit SgdOptimizer(SgdConfig config);

    /// `lr_scale` holds one multiplier per parameter tensor (empty means 1).
    void step(std::span<const std::span<T>> params, std::span<const std::span<const T>> grads,
              std::span<const double> lr_scale = {});

    const SgdConfig& config() const { return config_; }

private:
    SgdConfig config_;
    std::vector<std::vector<T>> velocity_;
};

struct GradCheckResult {
    double max_relative_error = 0.0;
    std::size_t checked = 0;
    /// Parameters whose +/-eps probe flipped a ReLU unit; replaced by others.
    std::size_t skipped_kinks = 0;
};

/// Compares backprop gradients of the MSE loss with central finite differences,
/// in double precision, over `samples` randomly chosen parameters (0 = all).
/// Relative error is |a - n| / max(|a|, |n|, 1e-8). A parameter is skipped
/// when either probe changes the on/off pattern of any ReLU, since the loss is
/// not differentiable across that kink.
GradCheckResult grad_check(const Network<float>& model, const Tensor<float>& input, const Tensor<float>& target,
                           double eps, std::size_t samples = 0, std::uint64_t seed = 1);
GradCheckResult grad_check(const Network<double>& model, const Tensor<double>& input, const Tensor<double>& target,
                           double eps, std::size_t samples = 0, std::uint64_t seed = 1);

/// Little-endian "NNW1" weight container with a trailing CRC32.
std::vector<std::uint8_t> save_weights(const Network<float>& model);
Network<float> load_weights(std::span<const std::uint8_t> bytes);
void save_weights_file(const Network<float>& model, const std::filesystem::path& path);
Network<float> load_weights_file(const std::filesystem::path& path);

inline constexpr std::uint32_t kWeightFormatVersion = 1;

/// Initialisers used by the model builders.
void init_gaussian(std::span<float> values, double stddev, std::mt19937_64& rng);
void init_uniform(std::span<float> values, double limit, std::mt19937_64& rng);

template <typename T>
template <typename U>
Network<U> Network<T>::cast() const
{
    const auto convert = [](const std::vector<T>& v) { return std::vector<U>(v.begin(), v.end()); };
    Network<U> out;
    out.layers.reserve(layers.size());
    for (const auto& layer : layers) {
        if (const auto* conv = std::get_if<ConvLayer<T>>(&layer)) {
            ConvLayer<U> c;
            c.kernel_size = conv->kernel_size;
            c.in_channels = conv->in_channels;
            c.out_channels = conv->out_channels;
            c.stride = conv->stride;
            c.padding = conv->padding;
            c.activation = conv->activation;
            c.weights = convert(conv->weights);
            c.bias = convert(conv->bias);
            out.layers.emplace_back(std::move(c));
        } else {
            const auto& dense = std::get<DenseLayer<T>>(layer);
            DenseLayer<U> d;
            d.in_dim = dense.in_dim;
            d.out_dim = dense.out_dim;
            d.activation = dense.activation;
            d.weights = convert(dense.weights);
            d.bias = convert(dense.bias);
            out.layers.emplace_back(std::move(d));
        }
    }
    return out;
}

} // namespace irissr::nn

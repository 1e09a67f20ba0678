#include "irissr/nn.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace irissr::nn {

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;
template <typename T>
using RowVecMap = Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>>;
template <typename T>
using ConstRowVecMap = Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>>;

// Upper bound on im2col buffer elements per chunk.
constexpr std::size_t kMaxColumnElements = std::size_t{1} << 22;

template <typename T>
struct ConvGeometry {
    int in_h, in_w, out_h, out_w, k, cin, cout, stride, pad;
    std::size_t patch_len() const { return static_cast<std::size_t>(k) * k * cin; }
};

template <typename T>
ConvGeometry<T> conv_geometry(const Tensor<T>& input, const ConvLayer<T>& layer)
{
    layer.validate();
    if (input.channels != layer.in_channels) {
        throw std::invalid_argument("conv input has " + std::to_string(input.channels) + " channels, layer expects " +
                                    std::to_string(layer.in_channels));
    }
    const int oh = layer.output_extent(input.height);
    const int ow = layer.output_extent(input.width);
    if (input.height + 2 * layer.padding < layer.kernel_size || input.width + 2 * layer.padding < layer.kernel_size ||
        oh < 1 || ow < 1) {
        throw std::invalid_argument("conv input is smaller than the kernel");
    }
    return {input.height, input.width, oh, ow, layer.kernel_size, layer.in_channels, layer.out_channels,
            layer.stride, layer.padding};
}

// Fills rows [y0, y1) of the output grid for sample n.
template <typename T>
void im2col(const Tensor<T>& input, int n, const ConvGeometry<T>& g, int y0, int y1, RowMat<T>& col)
{
    const std::size_t plen = g.patch_len();
    col.resize(static_cast<Eigen::Index>(y1 - y0) * g.out_w, static_cast<Eigen::Index>(plen));
    for (int oy = y0; oy < y1; ++oy) {
        for (int ox = 0; ox < g.out_w; ++ox) {
            T* dst = col.data() + (static_cast<std::size_t>(oy - y0) * g.out_w + ox) * plen;
            for (int ky = 0; ky < g.k; ++ky) {
                const int iy = oy * g.stride - g.pad + ky;
                T* row_dst = dst + static_cast<std::size_t>(ky) * g.k * g.cin;
                if (iy < 0 || iy >= g.in_h) {
                    std::fill_n(row_dst, static_cast<std::size_t>(g.k) * g.cin, T(0));
                    continue;
                }
                const int ix0 = ox * g.stride - g.pad;
                if (ix0 >= 0 && ix0 + g.k <= g.in_w) {
                    const T* src = &input.data[((static_cast<std::size_t>(n) * g.in_h + iy) * g.in_w + ix0) * g.cin];
                    std::copy_n(src, static_cast<std::size_t>(g.k) * g.cin, row_dst);
                } else {
                    for (int kx = 0; kx < g.k; ++kx) {
                        const int ix = ix0 + kx;
                        T* px = row_dst + static_cast<std::size_t>(kx) * g.cin;
                        if (ix < 0 || ix >= g.in_w) {
                            std::fill_n(px, g.cin, T(0));
                        } else {
                            std::copy_n(&input.data[((static_cast<std::size_t>(n) * g.in_h + iy) * g.in_w + ix) * g.cin],
                                        g.cin, px);
                        }
                    }
                }
            }
        }
    }
}

template <typename T>
void col2im_add(const RowMat<T>& dcol, int n, const ConvGeometry<T>& g, int y0, int y1, Tensor<T>& grad_input)
{
    const std::size_t plen = g.patch_len();
    for (int oy = y0; oy < y1; ++oy) {
        for (int ox = 0; ox < g.out_w; ++ox) {
            const T* src = dcol.data() + (static_cast<std::size_t>(oy - y0) * g.out_w + ox) * plen;
            for (int ky = 0; ky < g.k; ++ky) {
                const int iy = oy * g.stride - g.pad + ky;
                if (iy < 0 || iy >= g.in_h) {
                    continue;
                }
                for (int kx = 0; kx < g.k; ++kx) {
                    const int ix = ox * g.stride - g.pad + kx;
                    if (ix < 0 || ix >= g.in_w) {
                        continue;
                    }
                    T* dst = &grad_input.data[((static_cast<std::size_t>(n) * g.in_h + iy) * g.in_w + ix) * g.cin];
                    const T* s = src + (static_cast<std::size_t>(ky) * g.k + kx) * g.cin;
                    for (int c = 0; c < g.cin; ++c) {
                        dst[c] += s[c];
                    }
                }
            }
        }
    }
}

template <typename T>
int rows_per_chunk(const ConvGeometry<T>& g)
{
    const std::size_t per_row = static_cast<std::size_t>(g.out_w) * g.patch_len();
    return static_cast<int>(std::clamp<std::size_t>(kMaxColumnElements / std::max<std::size_t>(per_row, 1), 1,
                                                    static_cast<std::size_t>(g.out_h)));
}

template <typename T>
T sigmoid(T x)
{
    return T(1) / (T(1) + std::exp(-x));
}

template <typename T>
void check_dense_input(const Tensor<T>& input, const DenseLayer<T>& layer)
{
    layer.validate();
    if (static_cast<int>(input.sample_size()) != layer.in_dim) {
        throw std::invalid_argument("dense input length " + std::to_string(input.sample_size()) +
                                    " does not match in_dim " + std::to_string(layer.in_dim));
    }
}

template <typename T>
LayerGrads<T> dense_backward_from_output(const Tensor<T>& input, const Tensor<T>& output, const DenseLayer<T>& layer,
                                         const Tensor<T>& upstream, bool want_input_grad)
{
    if (!upstream.same_shape(output)) {
        throw std::invalid_argument("dense upstream gradient shape does not match layer output");
    }
    const int n = input.batch;
    RowMat<T> dz = ConstMatMap<T>(upstream.data.data(), n, layer.out_dim);
    activation_backward<T>(output.data, std::span<T>(dz.data(), dz.size()), layer.activation);

    LayerGrads<T> g;
    g.weights.resize(layer.weights.size());
    g.bias.resize(layer.bias.size());
    ConstMatMap<T> x(input.data.data(), n, layer.in_dim);
    MatMap<T>(g.weights.data(), layer.in_dim, layer.out_dim).noalias() = x.transpose() * dz;
    RowVecMap<T>(g.bias.data(), layer.out_dim) = dz.colwise().sum();
    if (want_input_grad) {
        g.input = Tensor<T>(input.batch, input.height, input.width, input.channels);
        ConstMatMap<T> w(layer.weights.data(), layer.in_dim, layer.out_dim);
        MatMap<T>(g.input.data.data(), n, layer.in_dim).noalias() = dz * w.transpose();
    }
    return g;
}

} // namespace

const char* to_string(Activation a)
{
    switch (a) {
    case Activation::linear:
        return "linear";
    case Activation::relu:
        return "relu";
    case Activation::sigmoid:
        return "sigmoid";
    }
    return "unknown";
}

Activation activation_from_string(const std::string& name)
{
    if (name == "linear") {
        return Activation::linear;
    }
    if (name == "relu") {
        return Activation::relu;
    }
    if (name == "sigmoid") {
        return Activation::sigmoid;
    }
    throw std::invalid_argument("unknown activation: " + name);
}

template <typename T>
Tensor<T>::Tensor(int n, int h, int w, int c) : batch(n), height(h), width(w), channels(c)
{
    if (n < 0 || h < 0 || w < 0 || c < 0) {
        throw std::invalid_argument("tensor dimensions must be non-negative");
    }
    data.assign(static_cast<std::size_t>(n) * h * w * c, T(0));
}

template <typename T>
Tensor<T>::Tensor(int n, int h, int w, int c, std::vector<T> values)
    : batch(n), height(h), width(w), channels(c), data(std::move(values))
{
    if (n < 0 || h < 0 || w < 0 || c < 0 || data.size() != static_cast<std::size_t>(n) * h * w * c) {
        throw std::invalid_argument("tensor data length does not match its shape");
    }
}

template <typename T>
ConvLayer<T>::ConvLayer(int kernel, int in_ch, int out_ch, int stride_, int padding_, Activation act)
    : kernel_size(kernel), in_channels(in_ch), out_channels(out_ch), stride(stride_), padding(padding_), activation(act)
{
    if (kernel < 1 || in_ch < 1 || out_ch < 1) {
        throw std::invalid_argument("conv layer dimensions must be positive");
    }
    weights.assign(weight_count(), T(0));
    bias.assign(static_cast<std::size_t>(out_ch), T(0));
    validate();
}

template <typename T>
void ConvLayer<T>::validate() const
{
    if (kernel_size < 1 || in_channels < 1 || out_channels < 1) {
        throw std::invalid_argument("conv layer dimensions must be positive");
    }
    if (stride < 1 || padding < 0) {
        throw std::invalid_argument("conv layer requires stride >= 1 and padding >= 0");
    }
    if (weights.size() != weight_count() || bias.size() != static_cast<std::size_t>(out_channels)) {
        throw std::invalid_argument("conv layer parameter count does not match its dimensions");
    }
}

template <typename T>
DenseLayer<T>::DenseLayer(int in, int out, Activation act) : in_dim(in), out_dim(out), activation(act)
{
    if (in < 1 || out < 1) {
        throw std::invalid_argument("dense layer dimensions must be positive");
    }
    weights.assign(static_cast<std::size_t>(in) * out, T(0));
    bias.assign(static_cast<std::size_t>(out), T(0));
}

template <typename T>
void DenseLayer<T>::validate() const
{
    if (in_dim < 1 || out_dim < 1 || weights.size() != static_cast<std::size_t>(in_dim) * out_dim ||
        bias.size() != static_cast<std::size_t>(out_dim)) {
        throw std::invalid_argument("dense layer parameter count does not match its dimensions");
    }
}

template <typename T>
void apply_activation(std::span<T> values, Activation act)
{
    switch (act) {
    case Activation::linear:
        break;
    case Activation::relu:
        for (auto& v : values) {
            v = relu(v);
        }
        break;
    case Activation::sigmoid:
        for (auto& v : values) {
            v = sigmoid(v);
        }
        break;
    }
}

template <typename T>
void activation_backward(std::span<const T> output, std::span<T> grad, Activation act)
{
    if (output.size() != grad.size()) {
        throw std::invalid_argument("activation gradient length mismatch");
    }
    switch (act) {
    case Activation::linear:
        break;
    case Activation::relu:
        for (std::size_t i = 0; i < grad.size(); ++i) {
            grad[i] *= relu_grad(output[i]);
        }
        break;
    case Activation::sigmoid:
        for (std::size_t i = 0; i < grad.size(); ++i) {
            grad[i] *= output[i] * (T(1) - output[i]);
        }
        break;
    }
}

template <typename T>
Tensor<T> conv_forward(const Tensor<T>& input, const ConvLayer<T>& layer)
{
    const auto g = conv_geometry(input, layer);
    Tensor<T> out(input.batch, g.out_h, g.out_w, g.cout);
    ConstMatMap<T> w(layer.weights.data(), static_cast<Eigen::Index>(g.patch_len()), g.cout);
    ConstRowVecMap<T> b(layer.bias.data(), g.cout);
    const int chunk = rows_per_chunk(g);
    RowMat<T> col;
    for (int n = 0; n < input.batch; ++n) {
        for (int y0 = 0; y0 < g.out_h; y0 += chunk) {
            const int y1 = std::min(g.out_h, y0 + chunk);
            im2col(input, n, g, y0, y1, col);
            T* dst = &out.data[(static_cast<std::size_t>(n) * g.out_h + y0) * g.out_w * g.cout];
            MatMap<T> o(dst, col.rows(), g.cout);
            o.noalias() = col * w;
            o.rowwise() += b;
        }
    }
    return out;
}

template <typename T>
LayerGrads<T> conv_backward(const Tensor<T>& input, const ConvLayer<T>& layer, const Tensor<T>& upstream,
                            bool want_input_grad)
{
    const auto g = conv_geometry(input, layer);
    if (upstream.batch != input.batch || upstream.height != g.out_h || upstream.width != g.out_w ||
        upstream.channels != g.cout) {
        throw std::invalid_argument("conv upstream gradient shape does not match layer output");
    }
    LayerGrads<T> grads;
    grads.weights.assign(layer.weights.size(), T(0));
    grads.bias.assign(layer.bias.size(), T(0));
    if (want_input_grad) {
        grads.input = Tensor<T>(input.batch, input.height, input.width, input.channels);
    }
    MatMap<T> dw(grads.weights.data(), static_cast<Eigen::Index>(g.patch_len()), g.cout);
    RowVecMap<T> db(grads.bias.data(), g.cout);
    ConstMatMap<T> w(layer.weights.data(), static_cast<Eigen::Index>(g.patch_len()), g.cout);
    const int chunk = rows_per_chunk(g);
    RowMat<T> col;
    RowMat<T> dcol;
    for (int n = 0; n < input.batch; ++n) {
        for (int y0 = 0; y0 < g.out_h; y0 += chunk) {
            const int y1 = std::min(g.out_h, y0 + chunk);
            im2col(input, n, g, y0, y1, col);
            const T* up = &upstream.data[(static_cast<std::size_t>(n) * g.out_h + y0) * g.out_w * g.cout];
            ConstMatMap<T> dy(up, col.rows(), g.cout);
            dw.noalias() += col.transpose() * dy;
            db += dy.colwise().sum();
            if (want_input_grad) {
                dcol.noalias() = dy * w.transpose();
                col2im_add(dcol, n, g, y0, y1, grads.input);
            }
        }
    }
    return grads;
}

template <typename T>
Tensor<T> dense_forward(const Tensor<T>& input, const DenseLayer<T>& layer)
{
    check_dense_input(input, layer);
    const int n = input.batch;
    Tensor<T> out(n, 1, 1, layer.out_dim);
    ConstMatMap<T> x(input.data.data(), n, layer.in_dim);
    ConstMatMap<T> w(layer.weights.data(), layer.in_dim, layer.out_dim);
    MatMap<T> y(out.data.data(), n, layer.out_dim);
    y.noalias() = x * w;
    y.rowwise() += ConstRowVecMap<T>(layer.bias.data(), layer.out_dim);
    apply_activation<T>(out.data, layer.activation);
    return out;
}

template <typename T>
LayerGrads<T> dense_backward(const Tensor<T>& input, const DenseLayer<T>& layer, const Tensor<T>& upstream,
                             bool want_input_grad)
{
    const auto output = dense_forward(input, layer);
    auto grads = dense_backward_from_output(input, output, layer, upstream, want_input_grad);
    return grads;
}

template <typename T>
LossResult<T> mse_loss(const Tensor<T>& pred, const Tensor<T>& target)
{
    if (pred.size() != target.size() || (pred.sample_size() != target.sample_size())) {
        throw std::invalid_argument("mse_loss requires equal shapes");
    }
    if (pred.size() == 0) {
        throw std::invalid_argument("mse_loss on empty tensors");
    }
    LossResult<T> r;
    r.grad = Tensor<T>(pred.batch, pred.height, pred.width, pred.channels);
    const double n = static_cast<double>(pred.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = static_cast<double>(pred.data[i]) - static_cast<double>(target.data[i]);
        sum += d * d;
        r.grad.data[i] = static_cast<T>(2.0 * d / n);
    }
    r.value = sum / n;
    return r;
}

template <typename T>
Tensor<T> Network<T>::forward(const Tensor<T>& input) const
{
    Tensor<T> x = input;
    for (const auto& layer : layers) {
        if (const auto* conv = std::get_if<ConvLayer<T>>(&layer)) {
            x = conv_forward(x, *conv);
            apply_activation<T>(x.data, conv->activation);
        } else {
            x = dense_forward(x, std::get<DenseLayer<T>>(layer));
        }
    }
    return x;
}

template <typename T>
Tensor<T> Network<T>::forward(const Tensor<T>& input, Trace& trace) const
{
    trace.activations.clear();
    trace.activations.reserve(layers.size() + 1);
    trace.activations.push_back(input);
    for (const auto& layer : layers) {
        const auto& x = trace.activations.back();
        if (const auto* conv = std::get_if<ConvLayer<T>>(&layer)) {
            auto y = conv_forward(x, *conv);
            apply_activation<T>(y.data, conv->activation);
            trace.activations.push_back(std::move(y));
        } else {
            trace.activations.push_back(dense_forward(x, std::get<DenseLayer<T>>(layer)));
        }
    }
    return trace.activations.back();
}

template <typename T>
typename Network<T>::Gradients Network<T>::backward(const Trace& trace, const Tensor<T>& output_grad,
                                                    bool want_input_grad) const
{
    if (trace.activations.size() != layers.size() + 1) {
        throw std::invalid_argument("trace does not belong to this network");
    }
    if (!output_grad.same_shape(trace.activations.back())) {
        throw std::invalid_argument("output gradient shape does not match network output");
    }
    Gradients grads;
    grads.weights.resize(layers.size());
    grads.bias.resize(layers.size());
    Tensor<T> g = output_grad;
    for (std::size_t i = layers.size(); i-- > 0;) {
        const bool need_input = i > 0 || want_input_grad;
        const auto& in = trace.activations[i];
        const auto& out = trace.activations[i + 1];
        LayerGrads<T> lg;
        if (const auto* conv = std::get_if<ConvLayer<T>>(&layers[i])) {
            activation_backward<T>(out.data, g.data, conv->activation);
            lg = conv_backward(in, *conv, g, need_input);
        } else {
            lg = dense_backward_from_output(in, out, std::get<DenseLayer<T>>(layers[i]), g, need_input);
        }
        grads.weights[i] = std::move(lg.weights);
        grads.bias[i] = std::move(lg.bias);
        if (need_input) {
            g = std::move(lg.input);
        }
    }
    if (want_input_grad) {
        grads.input = std::move(g);
    }
    return grads;
}

template <typename T>
std::vector<std::span<const T>> Network<T>::Gradients::spans() const
{
    std::vector<std::span<const T>> out;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        out.emplace_back(weights[i]);
        out.emplace_back(bias[i]);
    }
    return out;
}

template <typename T>
std::size_t Network<T>::parameter_count() const
{
    std::size_t n = 0;
    for (const auto& p : parameters()) {
        n += p.size();
    }
    return n;
}

template <typename T>
std::vector<std::span<T>> Network<T>::parameters()
{
    std::vector<std::span<T>> out;
    for (auto& layer : layers) {
        std::visit(
            [&](auto& l) {
                out.emplace_back(l.weights);
                out.emplace_back(l.bias);
            },
            layer);
    }
    return out;
}

template <typename T>
std::vector<std::span<const T>> Network<T>::parameters() const
{
    std::vector<std::span<const T>> out;
    for (const auto& layer : layers) {
        std::visit(
            [&](const auto& l) {
                out.emplace_back(l.weights);
                out.emplace_back(l.bias);
            },
            layer);
    }
    return out;
}

template <typename T>
void Network<T>::validate() const
{
    for (const auto& layer : layers) {
        std::visit([](const auto& l) { l.validate(); }, layer);
    }
}

void SgdConfig::validate() const
{
    if (!(learning_rate > 0.0)) {
        throw std::invalid_argument("learning_rate must be positive");
    }
    if (momentum < 0.0 || momentum >= 1.0) {
        throw std::invalid_argument("momentum must lie in [0, 1)");
    }
    if (batch_size < 1) {
        throw std::invalid_argument("batch_size must be positive");
    }
    if (iterations < 0) {
        throw std::invalid_argument("iterations must be non-negative");
    }
}

template <typename T>
SgdOptimizer<T>::SgdOptimizer(SgdConfig config) : config_(config)
{
    config_.validate();
}

template <typename T>
void SgdOptimizer<T>::step(std::span<const std::span<T>> params, std::span<const std::span<const T>> grads,
                           std::span<const double> lr_scale)
{
    if (params.size() != grads.size() || (!lr_scale.empty() && lr_scale.size() != params.size())) {
        throw std::invalid_argument("sgd_step: parameter and gradient lists differ in length");
    }
    if (velocity_.empty()) {
        velocity_.resize(params.size());
        for (std::size_t i = 0; i < params.size(); ++i) {
            velocity_[i].assign(params[i].size(), T(0));
        }
    }
    if (velocity_.size() != params.size()) {
        throw std::invalid_argument("sgd_step: parameter list changed between steps");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i].size() != grads[i].size() || velocity_[i].size() != params[i].size()) {
            throw std::invalid_argument("sgd_step: parameter/gradient shape mismatch");
        }
    }
    const T m = static_cast<T>(config_.momentum);
    for (std::size_t i = 0; i < params.size(); ++i) {
        const T lr = static_cast<T>(config_.learning_rate * (lr_scale.empty() ? 1.0 : lr_scale[i]));
        auto& v = velocity_[i];
        for (std::size_t j = 0; j < params[i].size(); ++j) {
            v[j] = m * v[j] + grads[i][j];
            params[i][j] -= lr * v[j];
        }
    }
}

namespace {

// Sign pattern of every ReLU output; finite differences are meaningless when a
// perturbation moves a unit across the kink.
std::vector<bool> relu_pattern(const Network<double>& net, const Network<double>::Trace& trace)
{
    std::vector<bool> pattern;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const auto act = std::visit([](const auto& l) { return l.activation; }, net.layers[i]);
        if (act != Activation::relu) {
            continue;
        }
        for (double v : trace.activations[i + 1].data) {
            pattern.push_back(v > 0.0);
        }
    }
    return pattern;
}

GradCheckResult grad_check_double(Network<double> net, const Tensor<double>& input, const Tensor<double>& target,
                                  double eps, std::size_t samples, std::uint64_t seed)
{
    if (!(eps > 0.0)) {
        throw std::invalid_argument("grad_check eps must be positive");
    }
    typename Network<double>::Trace trace;
    const auto out = net.forward(input, trace);
    const auto loss = mse_loss(out, target);
    const auto grads = net.backward(trace, loss.grad);
    const auto gspans = grads.spans();
    const auto base_pattern = relu_pattern(net, trace);
    auto params = net.parameters();

    std::vector<std::pair<std::size_t, std::size_t>> index;
    for (std::size_t t = 0; t < params.size(); ++t) {
        for (std::size_t j = 0; j < params[t].size(); ++j) {
            index.emplace_back(t, j);
        }
    }
    if (samples != 0) {
        std::mt19937_64 rng(seed);
        std::shuffle(index.begin(), index.end(), rng);
    } else {
        samples = index.size();
    }

    GradCheckResult result;
    typename Network<double>::Trace probe;
    for (const auto& [t, j] : index) {
        if (result.checked == samples) {
            break;
        }
        double& p = params[t][j];
        const double saved = p;
        p = saved + eps;
        const double up = mse_loss(net.forward(input, probe), target).value;
        const bool up_same = relu_pattern(net, probe) == base_pattern;
        p = saved - eps;
        const double down = mse_loss(net.forward(input, probe), target).value;
        const bool down_same = relu_pattern(net, probe) == base_pattern;
        p = saved;
        if (!up_same || !down_same) {
            ++result.skipped_kinks;
            continue;
        }
        const double numeric = (up - down) / (2.0 * eps);
        const double analytic = gspans[t][j];
        const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
        result.max_relative_error = std::max(result.max_relative_error, std::abs(analytic - numeric) / denom);
        ++result.checked;
    }
    return result;
}

Tensor<double> widen(const Tensor<float>& t)
{
    return Tensor<double>(t.batch, t.height, t.width, t.channels, std::vector<double>(t.data.begin(), t.data.end()));
}

} // namespace

GradCheckResult grad_check(const Network<float>& model, const Tensor<float>& input, const Tensor<float>& target,
                           double eps, std::size_t samples, std::uint64_t seed)
{
    return grad_check_double(model.cast<double>(), widen(input), widen(target), eps, samples, seed);
}

GradCheckResult grad_check(const Network<double>& model, const Tensor<double>& input, const Tensor<double>& target,
                           double eps, std::size_t samples, std::uint64_t seed)
{
    return grad_check_double(model, input, target, eps, samples, seed);
}

void init_gaussian(std::span<float> values, double stddev, std::mt19937_64& rng)
{
    std::normal_distribution<double> dist(0.0, stddev);
    for (auto& v : values) {
        v = static_cast<float>(dist(rng));
    }
}

void init_uniform(std::span<float> values, double limit, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (auto& v : values) {
        v = static_cast<float>(dist(rng));
    }
}

#define IRISSR_INSTANTIATE(T)                                                                                      \
    template struct Tensor<T>;                                                                                     \
    template struct ConvLayer<T>;                                                                                  \
    template struct DenseLayer<T>;                                                                                 \
    template class Network<T>;                                                                                     \
    template class SgdOptimizer<T>;                                                                                \
    template void apply_activation<T>(std::span<T>, Activation);                                                   \
    template void activation_backward<T>(std::span<const T>, std::span<T>, Activation);                            \
    template Tensor<T> conv_forward<T>(const Tensor<T>&, const ConvLayer<T>&);                                     \
    template LayerGrads<T> conv_backward<T>(const Tensor<T>&, const ConvLayer<T>&, const Tensor<T>&, bool);        \
    template Tensor<T> dense_forward<T>(const Tensor<T>&, const DenseLayer<T>&);                                   \
    template LayerGrads<T> dense_backward<T>(const Tensor<T>&, const DenseLayer<T>&, const Tensor<T>&, bool);      \
    template LossResult<T> mse_loss<T>(const Tensor<T>&, const Tensor<T>&);

IRISSR_INSTANTIATE(float)
IRISSR_INSTANTIATE(double)

#undef IRISSR_INSTANTIATE

} // namespace irissr::nn

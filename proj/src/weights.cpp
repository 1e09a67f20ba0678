// Weight container layout (all integers little-endian):
//
//   "NNW1"            4 bytes
//   version           u32 (currently 1)
//   layer count       u32
//   per layer:
//     kind            u8   0 = conv, 1 = dense
//     conv header     u32 kernel_size, in_channels, out_channels, stride, padding, activation
//     dense header    u32 in_dim, out_dim, activation
//     weights         f32 x weight count, in the layer's in-memory order
//     bias            f32 x out channels / out_dim
//   crc32             u32 over every preceding byte (zlib polynomial)

#include "irissr/error.hpp"
#include "irissr/nn.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>

namespace irissr::nn {

namespace {

constexpr char kMagic[4] = {'N', 'N', 'W', '1'};
constexpr std::uint8_t kConvKind = 0;
constexpr std::uint8_t kDenseKind = 1;
// Guards allocation when reading untrusted headers.
constexpr std::uint32_t kMaxDimension = 1u << 16;

class Writer {
public:
    void bytes(const void* p, std::size_t n)
    {
        const auto* b = static_cast<const std::uint8_t*>(p);
        out_.insert(out_.end(), b, b + n);
    }
    void u8(std::uint8_t v) { out_.push_back(v); }
    void u32(std::uint32_t v)
    {
        for (int i = 0; i < 4; ++i) {
            out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
        }
    }
    void f32s(const std::vector<float>& values)
    {
        for (float f : values) {
            u32(std::bit_cast<std::uint32_t>(f));
        }
    }
    std::vector<std::uint8_t> finish()
    {
        const auto crc = crc32(0L, out_.data(), static_cast<uInt>(out_.size()));
        u32(static_cast<std::uint32_t>(crc));
        return std::move(out_);
    }

private:
    std::vector<std::uint8_t> out_;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> b) : buf_(b) {}

    void need(std::size_t n) const
    {
        if (buf_.size() - pos_ < n) {
            throw CorruptWeightsError("weight stream truncated");
        }
    }
    std::uint8_t u8()
    {
        need(1);
        return buf_[pos_++];
    }
    std::uint32_t u32()
    {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v |= static_cast<std::uint32_t>(buf_[pos_++]) << (8 * i);
        }
        return v;
    }
    std::vector<float> f32s(std::size_t count)
    {
        if (count > (buf_.size() - pos_) / 4) {
            throw CorruptWeightsError("weight stream truncated inside a parameter block");
        }
        std::vector<float> v(count);
        for (auto& f : v) {
            f = std::bit_cast<float>(u32());
        }
        return v;
    }
    bool at_end() const { return pos_ == buf_.size(); }

private:
    std::span<const std::uint8_t> buf_;
    std::size_t pos_ = 0;
};

std::uint32_t checked_dim(std::uint32_t v, const char* what)
{
    if (v == 0 || v > kMaxDimension) {
        throw CorruptWeightsError(std::string("implausible ") + what + " in weight stream: " + std::to_string(v));
    }
    return v;
}

Activation checked_activation(std::uint32_t v)
{
    if (v > static_cast<std::uint32_t>(Activation::sigmoid)) {
        throw CorruptWeightsError("unknown activation code " + std::to_string(v));
    }
    return static_cast<Activation>(v);
}

} // namespace

std::vector<std::uint8_t> save_weights(const Network<float>& model)
{
    model.validate();
    Writer w;
    w.bytes(kMagic, 4);
    w.u32(kWeightFormatVersion);
    w.u32(static_cast<std::uint32_t>(model.layers.size()));
    for (const auto& layer : model.layers) {
        if (const auto* conv = std::get_if<ConvLayer<float>>(&layer)) {
            w.u8(kConvKind);
            w.u32(static_cast<std::uint32_t>(conv->kernel_size));
            w.u32(static_cast<std::uint32_t>(conv->in_channels));
            w.u32(static_cast<std::uint32_t>(conv->out_channels));
            w.u32(static_cast<std::uint32_t>(conv->stride));
            w.u32(static_cast<std::uint32_t>(conv->padding));
            w.u32(static_cast<std::uint32_t>(conv->activation));
            w.f32s(conv->weights);
            w.f32s(conv->bias);
        } else {
            const auto& dense = std::get<DenseLayer<float>>(layer);
            w.u8(kDenseKind);
            w.u32(static_cast<std::uint32_t>(dense.in_dim));
            w.u32(static_cast<std::uint32_t>(dense.out_dim));
            w.u32(static_cast<std::uint32_t>(dense.activation));
            w.f32s(dense.weights);
            w.f32s(dense.bias);
        }
    }
    return w.finish();
}

Network<float> load_weights(std::span<const std::uint8_t> bytes)
{
    if (bytes.size() < 16) {
        throw CorruptWeightsError("weight stream too short");
    }
    if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
        throw CorruptWeightsError("bad magic in weight stream");
    }
    const auto body = bytes.first(bytes.size() - 4);
    std::uint32_t stored = 0;
    for (int i = 0; i < 4; ++i) {
        stored |= static_cast<std::uint32_t>(bytes[bytes.size() - 4 + i]) << (8 * i);
    }
    const auto crc = static_cast<std::uint32_t>(crc32(0L, body.data(), static_cast<uInt>(body.size())));
    if (crc != stored) {
        throw CorruptWeightsError("weight stream checksum mismatch");
    }

    Reader r(body.subspan(4));
    const auto version = r.u32();
    if (version != kWeightFormatVersion) {
        throw CorruptWeightsError("unsupported weight format version " + std::to_string(version));
    }
    const auto count = r.u32();
    if (count > kMaxDimension) {
        throw CorruptWeightsError("implausible layer count");
    }
    Network<float> net;
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto kind = r.u8();
        if (kind == kConvKind) {
            ConvLayer<float> c;
            c.kernel_size = static_cast<int>(checked_dim(r.u32(), "kernel size"));
            c.in_channels = static_cast<int>(checked_dim(r.u32(), "input channel count"));
            c.out_channels = static_cast<int>(checked_dim(r.u32(), "output channel count"));
            c.stride = static_cast<int>(checked_dim(r.u32(), "stride"));
            c.padding = static_cast<int>(r.u32());
            if (c.padding < 0 || static_cast<std::uint32_t>(c.padding) > kMaxDimension) {
                throw CorruptWeightsError("implausible padding in weight stream");
            }
            c.activation = checked_activation(r.u32());
            c.weights = r.f32s(c.weight_count());
            c.bias = r.f32s(static_cast<std::size_t>(c.out_channels));
            net.layers.emplace_back(std::move(c));
        } else if (kind == kDenseKind) {
            DenseLayer<float> d;
            d.in_dim = static_cast<int>(checked_dim(r.u32(), "input dimension"));
            d.out_dim = static_cast<int>(checked_dim(r.u32(), "output dimension"));
            d.activation = checked_activation(r.u32());
            d.weights = r.f32s(static_cast<std::size_t>(d.in_dim) * d.out_dim);
            d.bias = r.f32s(static_cast<std::size_t>(d.out_dim));
            net.layers.emplace_back(std::move(d));
        } else {
            throw CorruptWeightsError("unknown layer kind " + std::to_string(kind));
        }
    }
    if (!r.at_end()) {
        throw CorruptWeightsError("trailing bytes after last layer");
    }
    return net;
}

void save_weights_file(const Network<float>& model, const std::filesystem::path& path)
{
    const auto bytes = save_weights(model);
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw std::runtime_error("failed writing " + path.string());
    }
}

Network<float> load_weights_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw MissingWeightsError("cannot open weight file " + path.string());
    }
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return load_weights(bytes);
}

} // namespace irissr::nn

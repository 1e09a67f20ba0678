#include "irissr/image.hpp"

#include "irissr/error.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace irissr {

Image::Image(int w, int h, float fill) : width(w), height(h)
{
    if (w < 0 || h < 0) {
        throw std::invalid_argument("image dimensions must be non-negative");
    }
    data.assign(static_cast<std::size_t>(w) * h, fill);
}

Image::Image(int w, int h, std::vector<float> pixels) : width(w), height(h), data(std::move(pixels))
{
    if (w < 0 || h < 0 || data.size() != static_cast<std::size_t>(w) * h) {
        throw std::invalid_argument("pixel count does not match image dimensions");
    }
}

void Image::clamp()
{
    for (auto& v : data) {
        v = std::clamp(v, 0.0f, 1.0f);
    }
}

namespace {

double catmull_rom(double x)
{
    constexpr double a = -0.5;
    x = std::abs(x);
    if (x <= 1.0) {
        return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
    }
    if (x < 2.0) {
        return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
    }
    return 0.0;
}

struct Taps {
    std::vector<int> index;    // out_len * taps
    std::vector<float> weight; // out_len * taps
    int taps = 0;
};

// Pixel-center aligned mapping: src = (dst + 0.5) * in / out - 0.5.
Taps make_taps(int in_len, int out_len, Kernel kernel)
{
    Taps t;
    t.taps = kernel == Kernel::bicubic ? 4 : 2;
    t.index.resize(static_cast<std::size_t>(out_len) * t.taps);
    t.weight.resize(t.index.size());
    const double scale = static_cast<double>(in_len) / out_len;
    for (int o = 0; o < out_len; ++o) {
        const double src = (o + 0.5) * scale - 0.5;
        const double base = std::floor(src);
        const double frac = src - base;
        const int b = static_cast<int>(base);
        for (int k = 0; k < t.taps; ++k) {
            int idx;
            double w;
            if (kernel == Kernel::bicubic) {
                idx = b - 1 + k;
                w = catmull_rom(frac - (k - 1));
            } else {
                idx = b + k;
                w = k == 0 ? 1.0 - frac : frac;
            }
            t.index[static_cast<std::size_t>(o) * t.taps + k] = std::clamp(idx, 0, in_len - 1);
            t.weight[static_cast<std::size_t>(o) * t.taps + k] = static_cast<float>(w);
        }
    }
    return t;
}

} // namespace

Image resize(const Image& img, int out_w, int out_h, Kernel kernel)
{
    if (out_w < 1 || out_h < 1) {
        throw std::invalid_argument("resize target dimensions must be positive");
    }
    if (img.empty()) {
        throw std::invalid_argument("cannot resize an empty image");
    }
    if (out_w == img.width && out_h == img.height) {
        return img;
    }

    // Horizontal pass into an in_h x out_w buffer, then vertical.
    Image horiz(out_w, img.height);
    if (out_w == img.width) {
        horiz = img;
    } else {
        const Taps tx = make_taps(img.width, out_w, kernel);
        for (int r = 0; r < img.height; ++r) {
            const float* src = &img.data[static_cast<std::size_t>(r) * img.width];
            for (int c = 0; c < out_w; ++c) {
                float acc = 0.0f;
                for (int k = 0; k < tx.taps; ++k) {
                    const auto i = static_cast<std::size_t>(c) * tx.taps + k;
                    acc += tx.weight[i] * src[tx.index[i]];
                }
                horiz.at(r, c) = acc;
            }
        }
    }

    Image out(out_w, out_h);
    if (out_h == img.height) {
        out = std::move(horiz);
    } else {
        const Taps ty = make_taps(img.height, out_h, kernel);
        for (int r = 0; r < out_h; ++r) {
            for (int c = 0; c < out_w; ++c) {
                float acc = 0.0f;
                for (int k = 0; k < ty.taps; ++k) {
                    const auto i = static_cast<std::size_t>(r) * ty.taps + k;
                    acc += ty.weight[i] * horiz.at(ty.index[i], c);
                }
                out.at(r, c) = acc;
            }
        }
    }
    out.clamp();
    return out;
}

bool is_supported_factor(int factor)
{
    return factor == 2 || factor == 4 || factor == 8 || factor == 16;
}

int log2_exact(int value)
{
    if (value < 1 || (value & (value - 1)) != 0) {
        throw std::invalid_argument("value is not a power of two: " + std::to_string(value));
    }
    int n = 0;
    while (value > 1) {
        value >>= 1;
        ++n;
    }
    return n;
}

Image downscale(const Image& img, int factor)
{
    if (!is_supported_factor(factor)) {
        throw std::invalid_argument("degradation factor must be one of 2, 4, 8, 16 (got " +
                                    std::to_string(factor) + ")");
    }
    const int w = img.width / factor;
    const int h = img.height / factor;
    if (w < 1 || h < 1) {
        throw std::invalid_argument("image too small for degradation factor " + std::to_string(factor));
    }
    return resize(img, w, h, Kernel::bicubic);
}

Image degrade(const Image& img, int factor)
{
    return resize(downscale(img, factor), img.width, img.height, Kernel::bicubic);
}

Image crop(const Image& img, int row, int col, int w, int h)
{
    if (row < 0 || col < 0 || w < 0 || h < 0 || row + h > img.height || col + w > img.width) {
        throw std::invalid_argument("crop window exceeds image bounds");
    }
    Image out(w, h);
    for (int r = 0; r < h; ++r) {
        std::copy_n(&img.data[static_cast<std::size_t>(row + r) * img.width + col], w,
                    &out.data[static_cast<std::size_t>(r) * w]);
    }
    return out;
}

Image reflect_pad(const Image& img, int pad)
{
    if (pad < 0 || pad >= img.width || pad >= img.height) {
        throw std::invalid_argument("reflect padding must be smaller than the image");
    }
    const auto reflect = [](int i, int n) {
        if (i < 0) {
            return -i;
        }
        if (i >= n) {
            return 2 * (n - 1) - i;
        }
        return i;
    };
    Image out(img.width + 2 * pad, img.height + 2 * pad);
    for (int r = 0; r < out.height; ++r) {
        const int sr = reflect(r - pad, img.height);
        for (int c = 0; c < out.width; ++c) {
            out.at(r, c) = img.at(sr, reflect(c - pad, img.width));
        }
    }
    return out;
}

std::vector<int> grid_anchors(int extent, int size, int stride, bool close_edge)
{
    if (stride < 1) {
        throw std::invalid_argument("stride must be at least 1");
    }
    if (size < 1 || size > extent) {
        throw std::invalid_argument("patch size must be in [1, image extent]");
    }
    std::vector<int> anchors;
    for (int a = 0; a + size <= extent; a += stride) {
        anchors.push_back(a);
    }
    if (close_edge && anchors.back() != extent - size) {
        anchors.push_back(extent - size);
    }
    return anchors;
}

PatchSet extract_patches(const Image& img, int size, int stride)
{
    if (size < 1 || size > std::min(img.width, img.height)) {
        throw std::invalid_argument("patch size exceeds image dimension");
    }
    const auto rows = grid_anchors(img.height, size, stride, false);
    const auto cols = grid_anchors(img.width, size, stride, false);

    PatchSet set;
    set.patch_size = size;
    set.stride = stride;
    set.origins.reserve(rows.size() * cols.size());
    set.patches.reserve(rows.size() * cols.size());
    for (int r : rows) {
        for (int c : cols) {
            set.origins.push_back({r, c});
            set.patches.push_back(crop(img, r, c, size, size).data);
        }
    }
    return set;
}

Image assemble_patches(std::span<const std::vector<float>> blocks, int block_size,
                       std::span<const PatchOrigin> origins, int out_w, int out_h)
{
    if (blocks.size() != origins.size()) {
        throw std::invalid_argument("block and origin counts differ");
    }
    if (out_w < 1 || out_h < 1 || block_size < 1) {
        throw std::invalid_argument("invalid assembly extent");
    }
    const auto n = static_cast<std::size_t>(out_w) * out_h;
    std::vector<double> sum(n, 0.0);
    std::vector<int> count(n, 0);
    const auto block_len = static_cast<std::size_t>(block_size) * block_size;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        const auto& o = origins[b];
        if (blocks[b].size() != block_len) {
            throw std::invalid_argument("block size does not match declared block_size");
        }
        if (o.row < 0 || o.col < 0 || o.row + block_size > out_h || o.col + block_size > out_w) {
            throw std::invalid_argument("block placed outside the output extent");
        }
        for (int r = 0; r < block_size; ++r) {
            for (int c = 0; c < block_size; ++c) {
                const auto i = static_cast<std::size_t>(o.row + r) * out_w + (o.col + c);
                sum[i] += blocks[b][static_cast<std::size_t>(r) * block_size + c];
                ++count[i];
            }
        }
    }
    Image out(out_w, out_h);
    for (std::size_t i = 0; i < n; ++i) {
        if (count[i] == 0) {
            throw CoverageGapError("pixel (" + std::to_string(i / out_w) + ", " +
                                   std::to_string(i % out_w) + ") is not covered by any block");
        }
        out.data[i] = static_cast<float>(sum[i] / count[i]);
    }
    out.clamp();
    return out;
}

} // namespace irissr

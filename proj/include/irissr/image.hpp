#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace irissr {

/// Single-channel raster with intensities in [0, 1], stored row-major.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<float> data;

    Image() = default;
    Image(int w, int h, float fill = 0.0f);
    Image(int w, int h, std::vector<float> pixels);

    float& at(int row, int col) { return data[static_cast<std::size_t>(row) * width + col]; }
    float at(int row, int col) const { return data[static_cast<std::size_t>(row) * width + col]; }

    std::size_t size() const { return data.size(); }
    bool empty() const { return data.empty(); }

    /// Clamps every intensity into [0, 1].
    void clamp();

    friend bool operator==(const Image&, const Image&) = default;
};

enum class Kernel { bilinear, bicubic };

/// Separable resampling with edge-replicate borders. Bicubic uses the
/// Catmull-Rom kernel (a = -0.5) and applies no anti-alias prefilter.
Image resize(const Image& img, int out_w, int out_h, Kernel kernel);

/// Canonical sensor simulation: bicubic downscale to floor(dim / factor),
/// then bicubic upscale back to the source size. factor must be 2, 4, 8 or 16.
Image degrade(const Image& img, int factor);

/// Bicubic downscale only (the low-resolution observation itself).
Image downscale(const Image& img, int factor);

bool is_supported_factor(int factor);

/// Number of factor-2 steps needed for `factor`, i.e. log2(factor).
int log2_exact(int value);

Image crop(const Image& img, int row, int col, int w, int h);

/// Mirror padding without edge repetition (dcb|abcd|cba).
Image reflect_pad(const Image& img, int pad);

struct PatchOrigin {
    int row = 0;
    int col = 0;
    friend bool operator==(const PatchOrigin&, const PatchOrigin&) = default;
};

struct PatchSet {
    int patch_size = 0;
    int stride = 1;
    std::vector<PatchOrigin> origins;
    std::vector<std::vector<float>> patches;
};

/// Regular grid of square patches at (r * stride, c * stride), row-major.
/// Grid lines that would overrun the border are omitted.
PatchSet extract_patches(const Image& img, int size, int stride);

/// Grid anchors along one axis, optionally closed with an edge-aligned anchor
/// so that the last `size` samples are covered.
std::vector<int> grid_anchors(int extent, int size, int stride, bool close_edge);

/// Averages square blocks placed at `origins` into an out_w x out_h image.
/// Throws CoverageGapError if any output pixel is left uncovered.
Image assemble_patches(std::span<const std::vector<float>> blocks, int block_size,
                       std::span<const PatchOrigin> origins, int out_w, int out_h);

} // namespace irissr

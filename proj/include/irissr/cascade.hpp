#pragma once

#include "irissr/image.hpp"

#include <functional>

namespace irissr {

/// Counts network passes performed by a cascade (test instrumentation).
struct CascadeStats {
    int passes = 0;
};

/// Number of passes of a model trained at `trained_factor` needed to reach
/// `target_factor`: log2(target) / log2(trained). Throws std::invalid_argument
/// unless both are powers of two >= 2, target >= trained and the ratio is integral.
int cascade_passes(int target_factor, int trained_factor);

using PassFn = std::function<Image(const Image&)>;

/// Low-resolution input: each pass bicubic-upscales by `trained_factor`
/// and then applies `pass`. The output is target_factor times larger.
Image cascade_upscale(const Image& lr, int target_factor, int trained_factor, const PassFn& pass,
                      CascadeStats* stats = nullptr);

/// Input already bicubic-upscaled to the final size: applies `pass`
/// cascade_passes(...) times without resizing.
Image cascade_refine(const Image& upscaled, int target_factor, int trained_factor, const PassFn& pass,
                     CascadeStats* stats = nullptr);

} // namespace irissr

#pragma once

#include "irissr/image.hpp"

#include <limits>
#include <string>

namespace irissr {

/// PSNR of identical images; written as "inf" in CSV output.
inline constexpr double kPsnrIdentical = std::numeric_limits<double>::infinity();

struct QualityScore {
    double psnr = 0.0;
    double ssim = 0.0;
    double vif = 0.0;
};

/// 10 log10(peak^2 / MSE); +infinity when the images are identical.
double psnr(const Image& ref, const Image& test, double peak = 1.0);

/// Mean SSIM over the valid region of an 11x11 Gaussian window (sigma 1.5),
/// K1 = 0.01, K2 = 0.03, dynamic range `peak`.
double ssim(const Image& ref, const Image& test, double peak = 1.0);

/// Pixel-domain multi-scale VIF over 4 scales with Gaussian windows of side
/// 17, 9, 5, 3 (sigma = side / 5) and noise variance 2 on a 0-255 scale.
/// Argument order matters: `ref` is the reference, `test` the distorted image.
/// Scales whose valid region is empty contribute nothing, so images need a
/// smaller side of at least 17 (41 for all four scales). Returns NaN when the
/// reference carries no information (constant) and the images differ.
double vif(const Image& ref, const Image& test);

inline constexpr int kVifMinSide = 17;

QualityScore score_all(const Image& ref, const Image& test);

/// Formats a metric for CSV; infinities become "inf".
std::string format_metric(double value);

} // namespace irissr

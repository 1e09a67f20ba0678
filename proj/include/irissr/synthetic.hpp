#pragma once

#include "irissr/image.hpp"
#include "irissr/iris.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>

namespace irissr {

/// Iris intensity as a function of normalised radius rho in [0, 1] (pupil to
/// sclera) and angle theta in radians.
using IrisPattern = std::function<double(double rho, double theta)>;

/// Renders concentric pupil/iris/sclera discs centred at (cx, cy) with 2x2
/// supersampling. `rotation` turns the iris pattern clockwise in image
/// coordinates (angle grows from +x towards +y).
Image render_eye(int width, int height, double cx, double cy, double pupil_r, double sclera_r,
                 const IrisPattern& pattern, double rotation = 0.0, double pupil_value = 0.08,
                 double sclera_value = 0.85);

/// Band-limited iris texture unique to `eye_seed`: angular/radial sinusoids
/// plus a few dark crypts.
IrisPattern synthetic_iris_pattern(std::uint64_t eye_seed);

struct CaptureVariation {
    double rotation = 0.0;
    double dx = 0.0;
    double dy = 0.0;
    double pupil_scale = 1.0;
    double noise_sd = 0.0;
    std::uint64_t noise_seed = 0;
};

struct SyntheticEye {
    Image image;
    SegmentationAnnotation annotation;
};

/// One capture of a synthetic eye on a 320x280 canvas with sclera radius 95.
SyntheticEye render_synthetic_eye(std::uint64_t eye_seed, const CaptureVariation& capture = {});

/// Random capture conditions: rotation within +/-4 columns, small shifts,
/// pupil dilation and sensor noise.
CaptureVariation random_capture(std::uint64_t seed);

/// Smooth gradients, sinusoids and hard-edged discs; a natural-image stand-in
/// for training corpora.
Image synthetic_texture(int width, int height, std::uint64_t seed);

struct SyntheticCorpusSpec {
    int users = 10;
    int eyes_per_user = 1;
    int images_per_eye = 3;
    std::uint64_t seed = 1;
};

/// Writes <dir>/<eye_id>/<image_id>.png and <dir>/annotations.csv (with
/// eye_id column). Returns the annotation file path.
std::filesystem::path write_synthetic_corpus(const std::filesystem::path& dir, const SyntheticCorpusSpec& spec);

} // namespace irissr

#pragma once

#include "irissr/image.hpp"

#include <span>
#include <vector>

namespace irissr {

inline constexpr int kInputPatch = 33;
inline constexpr int kOutputPatch = 21;
/// Offset of the output crop inside the input patch: (33 - 21) / 2.
inline constexpr int kPatchBorder = (kInputPatch - kOutputPatch) / 2;

/// One supervised example: a degraded 33x33 patch and the centred 21x21 HR crop.
struct TrainPair {
    std::vector<float> input;
    std::vector<float> target;
};

/// Degrades each whole HR image by `factor`, then cuts co-anchored patches on
/// a stride grid. Images smaller than 33x33 are skipped with a warning.
std::vector<TrainPair> make_training_set(std::span<const Image> hr_images, int factor, int patch_stride);

/// Centred 21x21 crop of a row-major 33x33 patch.
std::vector<float> center_crop(std::span<const float> patch33);

} // namespace irissr

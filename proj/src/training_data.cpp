#include "irissr/training_data.hpp"

#include <iostream>
#include <stdexcept>

namespace irissr {

std::vector<float> center_crop(std::span<const float> patch33)
{
    if (patch33.size() != static_cast<std::size_t>(kInputPatch) * kInputPatch) {
        throw std::invalid_argument("expected a 33x33 patch");
    }
    std::vector<float> out;
    out.reserve(static_cast<std::size_t>(kOutputPatch) * kOutputPatch);
    for (int r = 0; r < kOutputPatch; ++r) {
        const auto* row = &patch33[static_cast<std::size_t>(r + kPatchBorder) * kInputPatch + kPatchBorder];
        out.insert(out.end(), row, row + kOutputPatch);
    }
    return out;
}

std::vector<TrainPair> make_training_set(std::span<const Image> hr_images, int factor, int patch_stride)
{
    if (patch_stride < 1) {
        throw std::invalid_argument("patch stride must be at least 1");
    }
    std::vector<TrainPair> pairs;
    for (std::size_t i = 0; i < hr_images.size(); ++i) {
        const auto& hr = hr_images[i];
        if (hr.width < kInputPatch || hr.height < kInputPatch) {
            std::cerr << "warning: skipping training image " << i << " (" << hr.width << "x" << hr.height
                      << " is smaller than 33x33)\n";
            continue;
        }
        const auto lr = degrade(hr, factor);
        const auto hr_patches = extract_patches(hr, kInputPatch, patch_stride);
        const auto lr_patches = extract_patches(lr, kInputPatch, patch_stride);
        for (std::size_t p = 0; p < hr_patches.patches.size(); ++p) {
            pairs.push_back({lr_patches.patches[p], center_crop(hr_patches.patches[p])});
        }
    }
    return pairs;
}

} // namespace irissr

#pragma once

#include "irissr/image.hpp"
#include "irissr/synthetic.hpp"

#include <cmath>
#include <random>

namespace irissr::testing {

inline Image random_image(int w, int h, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    Image img(w, h);
    for (auto& v : img.data) {
        v = u(rng);
    }
    return img;
}

inline Image texture_image(int w, int h, std::uint64_t seed)
{
    return synthetic_texture(w, h, seed);
}

} // namespace irissr::testing

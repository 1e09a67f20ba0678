#include "irissr/cascade.hpp"

#include <stdexcept>
#include <string>

namespace irissr {

int cascade_passes(int target_factor, int trained_factor)
{
    if (target_factor < 2 || trained_factor < 2) {
        throw std::invalid_argument("cascade factors must be at least 2");
    }
    const int target_log = log2_exact(target_factor);
    const int trained_log = log2_exact(trained_factor);
    if (target_factor < trained_factor || target_log % trained_log != 0) {
        throw std::invalid_argument("factor " + std::to_string(target_factor) +
                                    " is not reachable by whole passes of a factor-" +
                                    std::to_string(trained_factor) + " model");
    }
    return target_log / trained_log;
}

Image cascade_upscale(const Image& lr, int target_factor, int trained_factor, const PassFn& pass,
                      CascadeStats* stats)
{
    const int passes = cascade_passes(target_factor, trained_factor);
    Image current = lr;
    for (int i = 0; i < passes; ++i) {
        current = resize(current, current.width * trained_factor, current.height * trained_factor, Kernel::bicubic);
        current = pass(current);
        current.clamp();
        if (stats) {
            ++stats->passes;
        }
    }
    return current;
}

Image cascade_refine(const Image& upscaled, int target_factor, int trained_factor, const PassFn& pass,
                     CascadeStats* stats)
{
    const int passes = cascade_passes(target_factor, trained_factor);
    Image current = upscaled;
    for (int i = 0; i < passes; ++i) {
        current = pass(current);
        current.clamp();
        if (stats) {
            ++stats->passes;
        }
    }
    return current;
}

} // namespace irissr

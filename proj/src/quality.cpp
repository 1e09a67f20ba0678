#include "irissr/quality.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <vector>

namespace irissr {

namespace {

struct Plane {
    int w = 0;
    int h = 0;
    std::vector<double> v;

    double at(int r, int c) const { return v[static_cast<std::size_t>(r) * w + c]; }
};

Plane to_plane(const Image& img, double scale)
{
    Plane p{img.width, img.height, std::vector<double>(img.data.size())};
    for (std::size_t i = 0; i < img.data.size(); ++i) {
        p.v[i] = img.data[i] * scale;
    }
    return p;
}

Plane product(const Plane& a, const Plane& b)
{
    Plane p{a.w, a.h, std::vector<double>(a.v.size())};
    for (std::size_t i = 0; i < a.v.size(); ++i) {
        p.v[i] = a.v[i] * b.v[i];
    }
    return p;
}

std::vector<double> gaussian_1d(int n, double sigma)
{
    std::vector<double> g(static_cast<std::size_t>(n));
    const double c = (n - 1) / 2.0;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        g[i] = std::exp(-(i - c) * (i - c) / (2.0 * sigma * sigma));
        sum += g[i];
    }
    for (auto& x : g) {
        x /= sum;
    }
    return g;
}

// Separable correlation keeping only fully overlapped positions.
Plane filter_valid(const Plane& in, const std::vector<double>& k)
{
    const int n = static_cast<int>(k.size());
    const int ow = in.w - n + 1;
    const int oh = in.h - n + 1;
    if (ow < 1 || oh < 1) {
        return {};
    }
    Plane tmp{ow, in.h, std::vector<double>(static_cast<std::size_t>(ow) * in.h)};
    for (int r = 0; r < in.h; ++r) {
        for (int c = 0; c < ow; ++c) {
            double acc = 0.0;
            for (int i = 0; i < n; ++i) {
                acc += k[i] * in.at(r, c + i);
            }
            tmp.v[static_cast<std::size_t>(r) * ow + c] = acc;
        }
    }
    Plane out{ow, oh, std::vector<double>(static_cast<std::size_t>(ow) * oh)};
    for (int r = 0; r < oh; ++r) {
        for (int c = 0; c < ow; ++c) {
            double acc = 0.0;
            for (int i = 0; i < n; ++i) {
                acc += k[i] * tmp.at(r + i, c);
            }
            out.v[static_cast<std::size_t>(r) * ow + c] = acc;
        }
    }
    return out;
}

// Keeps rows/cols 0, 2, 4, ... (ceil halving).
Plane decimate(const Plane& in)
{
    Plane out{(in.w + 1) / 2, (in.h + 1) / 2, {}};
    out.v.resize(static_cast<std::size_t>(out.w) * out.h);
    for (int r = 0; r < out.h; ++r) {
        for (int c = 0; c < out.w; ++c) {
            out.v[static_cast<std::size_t>(r) * out.w + c] = in.at(2 * r, 2 * c);
        }
    }
    return out;
}

void check_same_size(const Image& a, const Image& b)
{
    if (a.width != b.width || a.height != b.height) {
        throw std::invalid_argument("images must have equal dimensions");
    }
    if (a.empty()) {
        throw std::invalid_argument("images must not be empty");
    }
}

} // namespace

double psnr(const Image& ref, const Image& test, double peak)
{
    check_same_size(ref, test);
    double sum = 0.0;
    for (std::size_t i = 0; i < ref.data.size(); ++i) {
        const double d = static_cast<double>(ref.data[i]) - static_cast<double>(test.data[i]);
        sum += d * d;
    }
    if (sum == 0.0) {
        return kPsnrIdentical;
    }
    const double mse = sum / static_cast<double>(ref.data.size());
    return 10.0 * std::log10(peak * peak / mse);
}

double ssim(const Image& ref, const Image& test, double peak)
{
    check_same_size(ref, test);
    constexpr int kWindow = 11;
    if (ref.width < kWindow || ref.height < kWindow) {
        throw std::invalid_argument("SSIM needs images of at least 11x11");
    }
    const double c1 = (0.01 * peak) * (0.01 * peak);
    const double c2 = (0.03 * peak) * (0.03 * peak);
    const auto win = gaussian_1d(kWindow, 1.5);
    const auto x = to_plane(ref, 1.0);
    const auto y = to_plane(test, 1.0);
    const auto mu_x = filter_valid(x, win);
    const auto mu_y = filter_valid(y, win);
    const auto xx = filter_valid(product(x, x), win);
    const auto yy = filter_valid(product(y, y), win);
    const auto xy = filter_valid(product(x, y), win);
    double total = 0.0;
    for (std::size_t i = 0; i < mu_x.v.size(); ++i) {
        const double mx = mu_x.v[i];
        const double my = mu_y.v[i];
        const double sxx = xx.v[i] - mx * mx;
        const double syy = yy.v[i] - my * my;
        const double sxy = xy.v[i] - mx * my;
        total += ((2.0 * mx * my + c1) * (2.0 * sxy + c2)) / ((mx * mx + my * my + c1) * (sxx + syy + c2));
    }
    return total / static_cast<double>(mu_x.v.size());
}

double vif(const Image& ref, const Image& test)
{
    check_same_size(ref, test);
    if (ref.width < kVifMinSide || ref.height < kVifMinSide) {
        throw std::invalid_argument("VIF needs images with a smaller side of at least 17 pixels");
    }
    constexpr double kNoiseVar = 2.0;
    constexpr double kTiny = 1e-10;
    auto r = to_plane(ref, 255.0);
    auto d = to_plane(test, 255.0);
    double num = 0.0;
    double den = 0.0;
    for (int scale = 1; scale <= 4; ++scale) {
        const int n = (1 << (5 - scale)) + 1;
        const auto win = gaussian_1d(n, n / 5.0);
        if (scale > 1) {
            r = filter_valid(r, win);
            d = filter_valid(d, win);
            if (r.v.empty()) {
                break;
            }
            r = decimate(r);
            d = decimate(d);
        }
        const auto mu1 = filter_valid(r, win);
        if (mu1.v.empty()) {
            break;
        }
        const auto mu2 = filter_valid(d, win);
        const auto rr = filter_valid(product(r, r), win);
        const auto dd = filter_valid(product(d, d), win);
        const auto rd = filter_valid(product(r, d), win);
        for (std::size_t i = 0; i < mu1.v.size(); ++i) {
            double s1 = rr.v[i] - mu1.v[i] * mu1.v[i];
            double s2 = dd.v[i] - mu2.v[i] * mu2.v[i];
            const double s12 = rd.v[i] - mu1.v[i] * mu2.v[i];
            s1 = std::max(s1, 0.0);
            s2 = std::max(s2, 0.0);
            double g = s12 / (s1 + kTiny);
            double sv = s2 - g * s12;
            if (s1 < kTiny) {
                g = 0.0;
                sv = s2;
                s1 = 0.0;
            }
            if (s2 < kTiny) {
                g = 0.0;
                sv = 0.0;
            }
            if (g < 0.0) {
                sv = s2;
                g = 0.0;
            }
            sv = std::max(sv, kTiny);
            num += std::log10(1.0 + g * g * s1 / (sv + kNoiseVar));
            den += std::log10(1.0 + s1 / kNoiseVar);
        }
    }
    if (den == 0.0) {
        return ref == test ? 1.0 : std::numeric_limits<double>::quiet_NaN();
    }
    return num / den;
}

QualityScore score_all(const Image& ref, const Image& test)
{
    return {psnr(ref, test), ssim(ref, test), vif(ref, test)};
}

std::string format_metric(double value)
{
    if (std::isinf(value)) {
        return value > 0 ? "inf" : "-inf";
    }
    if (std::isnan(value)) {
        return "nan";
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", value);
    return buf;
}

} // namespace irissr

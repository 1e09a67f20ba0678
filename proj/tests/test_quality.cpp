#include "irissr/image.hpp"
#include "irissr/quality.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

using namespace irissr;

namespace {

Image add_noise(const Image& img, double sd, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, sd);
    Image out = img;
    for (auto& v : out.data) {
        v = static_cast<float>(v + n(rng));
    }
    out.clamp();
    return out;
}

Image box_blur(const Image& img)
{
    Image out = img;
    for (int r = 0; r < img.height; ++r) {
        for (int c = 0; c < img.width; ++c) {
            double s = 0.0;
            int n = 0;
            for (int dr = -2; dr <= 2; ++dr) {
                for (int dc = -2; dc <= 2; ++dc) {
                    const int rr = r + dr;
                    const int cc = c + dc;
                    if (rr >= 0 && rr < img.height && cc >= 0 && cc < img.width) {
                        s += img.at(rr, cc);
                        ++n;
                    }
                }
            }
            out.at(r, c) = static_cast<float>(s / n);
        }
    }
    return out;
}

// Direct 2D-window SSIM, no separability.
double ssim_oracle(const Image& x, const Image& y)
{
    double w[11][11];
    double sum = 0.0;
    for (int i = 0; i < 11; ++i) {
        for (int j = 0; j < 11; ++j) {
            w[i][j] = std::exp(-((i - 5) * (i - 5) + (j - 5) * (j - 5)) / (2 * 1.5 * 1.5));
            sum += w[i][j];
        }
    }
    const double c1 = 0.01 * 0.01;
    const double c2 = 0.03 * 0.03;
    double total = 0.0;
    int count = 0;
    for (int r = 0; r + 11 <= x.height; ++r) {
        for (int c = 0; c + 11 <= x.width; ++c) {
            double mx = 0, my = 0, xx = 0, yy = 0, xy = 0;
            for (int i = 0; i < 11; ++i) {
                for (int j = 0; j < 11; ++j) {
                    const double k = w[i][j] / sum;
                    const double a = x.at(r + i, c + j);
                    const double b = y.at(r + i, c + j);
                    mx += k * a;
                    my += k * b;
                    xx += k * a * a;
                    yy += k * b * b;
                    xy += k * a * b;
                }
            }
            const double sx = xx - mx * mx;
            const double sy = yy - my * my;
            const double sxy = xy - mx * my;
            total += ((2 * mx * my + c1) * (2 * sxy + c2)) / ((mx * mx + my * my + c1) * (sx + sy + c2));
            ++count;
        }
    }
    return total / count;
}

} // namespace

TEST_CASE("psnr of identical images is infinite and formats as inf")
{
    const auto img = testing::random_image(32, 32, 1);
    CHECK(std::isinf(psnr(img, img)));
    CHECK(format_metric(psnr(img, img)) == "inf");
}

TEST_CASE("psnr of a uniform 0.1 offset is 20 dB")
{
    Image a(40, 30, std::vector<float>(1200, 0.5f));
    Image b(40, 30, std::vector<float>(1200, 0.4f));
    CHECK(psnr(a, b) == doctest::Approx(20.0).epsilon(1e-5));
    CHECK(psnr(a, b) == doctest::Approx(psnr(b, a)));
}

TEST_CASE("ssim and vif of identical images are one")
{
    const auto img = testing::texture_image(64, 64, 2);
    CHECK(ssim(img, img) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(vif(img, img) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("ssim matches a direct windowed computation")
{
    const auto a = testing::random_image(16, 16, 5);
    const auto b = add_noise(a, 0.2, 6);
    CHECK(ssim(a, b) == doctest::Approx(ssim_oracle(a, b)).epsilon(1e-10));
    CHECK(ssim(a, b) == doctest::Approx(ssim(b, a)).epsilon(1e-12));
}

TEST_CASE("ssim of a binary pattern against its inverse is negative")
{
    Image a(16, 16);
    for (int r = 0; r < 16; ++r) {
        for (int c = 0; c < 16; ++c) {
            a.at(r, c) = ((r / 2 + c / 2) % 2) ? 1.0f : 0.0f;
        }
    }
    Image inv = a;
    for (auto& v : inv.data) {
        v = 1.0f - v;
    }
    const double s = ssim(a, inv);
    CHECK(s < 0.0);
    CHECK(s == doctest::Approx(ssim_oracle(a, inv)).epsilon(1e-10));
}

TEST_CASE("vif of a blurred image lies strictly between 0 and 1")
{
    const auto img = testing::texture_image(96, 96, 3);
    const double v = vif(img, box_blur(img));
    CHECK(v > 0.0);
    CHECK(v < 1.0);
}

TEST_CASE("metrics decrease monotonically with noise")
{
    const auto img = testing::texture_image(80, 80, 4);
    double prev_p = kPsnrIdentical, prev_s = 1.0, prev_v = 1.0;
    for (double sd : {0.01, 0.03, 0.08, 0.2}) {
        const auto noisy = add_noise(img, sd, 9);
        const auto q = score_all(img, noisy);
        CHECK(q.psnr < prev_p);
        CHECK(q.ssim < prev_s);
        CHECK(q.vif < prev_v);
        prev_p = q.psnr;
        prev_s = q.ssim;
        prev_v = q.vif;
    }
}

TEST_CASE("bicubic reconstruction quality falls with the degradation factor")
{
    const auto img = testing::texture_image(231, 231, 7);
    double prev = kPsnrIdentical;
    double prev_ssim = 1.0;
    for (int f : {2, 4, 8, 16}) {
        const auto rec = degrade(img, f);
        const double p = psnr(img, rec);
        CHECK(p < prev);
        const double s = ssim(img, rec);
        CHECK(s < prev_ssim);
        prev = p;
        prev_ssim = s;
    }
}

TEST_CASE("vif handles unwrapped strips using the scales that fit")
{
    const auto strip = testing::texture_image(240, 20, 8);
    const auto rec = degrade(strip, 2);
    const double v = vif(strip, rec);
    CHECK(v > 0.0);
    CHECK(v < 1.0);
    CHECK(vif(strip, strip) == doctest::Approx(1.0));
}

TEST_CASE("metric preconditions")
{
    const auto a = testing::random_image(20, 20, 1);
    const auto b = testing::random_image(21, 20, 1);
    CHECK_THROWS_AS(psnr(a, b), std::invalid_argument);
    CHECK_THROWS_AS(ssim(a, b), std::invalid_argument);
    CHECK_THROWS_AS(vif(a, b), std::invalid_argument);
    const auto tiny = testing::random_image(10, 40, 1);
    CHECK_THROWS_AS(ssim(tiny, tiny), std::invalid_argument);
    const auto small = testing::random_image(16, 40, 1);
    CHECK_THROWS_AS(vif(small, small), std::invalid_argument);
}

TEST_CASE("vif of a constant reference")
{
    Image flat(32, 32, std::vector<float>(1024, 0.3f));
    CHECK(vif(flat, flat) == 1.0);
    const auto other = testing::random_image(32, 32, 2);
    CHECK(std::isnan(vif(flat, other)));
}

#include "irissr/synthetic.hpp"

#include "irissr/image_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <stdexcept>

namespace irissr {

Image render_eye(int width, int height, double cx, double cy, double pupil_r, double sclera_r,
                 const IrisPattern& pattern, double rotation, double pupil_value, double sclera_value)
{
    if (width < 1 || height < 1 || !(pupil_r > 0.0) || !(pupil_r < sclera_r)) {
        throw std::invalid_argument("render_eye needs a positive canvas and 0 < pupil_r < sclera_r");
    }
    constexpr int kSub = 2;
    Image img(width, height);
    for (int row = 0; row < height; ++row) {
        for (int col = 0; col < width; ++col) {
            double acc = 0.0;
            for (int sy = 0; sy < kSub; ++sy) {
                for (int sx = 0; sx < kSub; ++sx) {
                    const double x = col + (sx + 0.5) / kSub - 0.5 - cx;
                    const double y = row + (sy + 0.5) / kSub - 0.5 - cy;
                    const double r = std::hypot(x, y);
                    if (r < pupil_r) {
                        acc += pupil_value;
                    } else if (r > sclera_r) {
                        acc += sclera_value;
                    } else {
                        acc += pattern((r - pupil_r) / (sclera_r - pupil_r), std::atan2(y, x) - rotation);
                    }
                }
            }
            img.at(row, col) = static_cast<float>(acc / (kSub * kSub));
        }
    }
    img.clamp();
    return img;
}

IrisPattern synthetic_iris_pattern(std::uint64_t eye_seed)
{
    std::mt19937_64 rng(eye_seed * 0x9E3779B97F4A7C15ull + 17);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    struct Wave {
        double amp, m, n, phase;
    };
    struct Crypt {
        double rho, theta, width, depth;
    };
    std::vector<Wave> waves;
    for (int i = 0; i < 12; ++i) {
        // Integer angular frequencies keep the texture continuous at theta = 2 pi.
        waves.push_back({0.015 + 0.025 * u(rng), std::floor(6 + 26 * u(rng)), 0.3 + 3.0 * u(rng),
                         2 * std::numbers::pi * u(rng)});
    }
    std::vector<Crypt> crypts;
    for (int i = 0; i < 6; ++i) {
        crypts.push_back({0.2 + 0.6 * u(rng), 2 * std::numbers::pi * u(rng), 0.05 + 0.06 * u(rng), 0.1 + 0.15 * u(rng)});
    }
    const double base = 0.35 + 0.2 * u(rng);
    return [=](double rho, double theta) {
        double v = base;
        for (const auto& w : waves) {
            v += w.amp * std::cos(w.m * theta + 2 * std::numbers::pi * w.n * rho + w.phase);
        }
        for (const auto& c : crypts) {
            const double dt = std::remainder(theta - c.theta, 2 * std::numbers::pi) * (0.5 + rho);
            const double dr = rho - c.rho;
            v -= c.depth * std::exp(-(dt * dt + dr * dr) / (2 * c.width * c.width));
        }
        return std::clamp(v, 0.02, 0.98);
    };
}

SyntheticEye render_synthetic_eye(std::uint64_t eye_seed, const CaptureVariation& capture)
{
    constexpr int kWidth = 320;
    constexpr int kHeight = 280;
    constexpr double kScleraR = 95.0;
    std::mt19937_64 rng(eye_seed);
    const double pupil_r = (30.0 + 10.0 * std::uniform_real_distribution<double>(0.0, 1.0)(rng)) * capture.pupil_scale;
    const double cx = kWidth / 2.0 + capture.dx;
    const double cy = kHeight / 2.0 + capture.dy;
    SyntheticEye eye;
    eye.image = render_eye(kWidth, kHeight, cx, cy, pupil_r, kScleraR, synthetic_iris_pattern(eye_seed),
                           capture.rotation);
    if (capture.noise_sd > 0.0) {
        std::mt19937_64 noise_rng(capture.noise_seed);
        std::normal_distribution<double> n(0.0, capture.noise_sd);
        for (auto& v : eye.image.data) {
            v = static_cast<float>(v + n(noise_rng));
        }
        eye.image.clamp();
    }
    eye.annotation.pupil = {cx, cy, pupil_r};
    eye.annotation.sclera = {cx, cy, kScleraR};
    return eye;
}

CaptureVariation random_capture(std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    CaptureVariation c;
    c.rotation = u(rng) * 4.0 * 2.0 * std::numbers::pi / kStripCols;
    c.dx = 6.0 * u(rng);
    c.dy = 6.0 * u(rng);
    c.pupil_scale = 1.0 + 0.1 * u(rng);
    c.noise_sd = 0.01;
    c.noise_seed = rng();
    return c;
}

Image synthetic_texture(int width, int height, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    struct Wave {
        double fx, fy, phase, amp;
    };
    std::vector<Wave> waves;
    for (int i = 0; i < 6; ++i) {
        waves.push_back({u(rng) * 0.35, u(rng) * 0.35, u(rng) * 6.283, 0.04 + 0.06 * u(rng)});
    }
    struct Disc {
        double cx, cy, r, v;
    };
    std::vector<Disc> discs;
    for (int i = 0; i < 8; ++i) {
        discs.push_back({u(rng) * width, u(rng) * height, 3 + u(rng) * width / 6.0, u(rng) * 0.4 - 0.2});
    }
    Image img(width, height);
    for (int r = 0; r < height; ++r) {
        for (int c = 0; c < width; ++c) {
            double v = 0.5 + 0.1 * (static_cast<double>(c) / width - 0.5);
            for (const auto& wv : waves) {
                v += wv.amp * std::sin(6.283 * (wv.fx * c + wv.fy * r) + wv.phase);
            }
            for (const auto& d : discs) {
                if ((c - d.cx) * (c - d.cx) + (r - d.cy) * (r - d.cy) < d.r * d.r) {
                    v += d.v;
                }
            }
            img.at(r, c) = static_cast<float>(v);
        }
    }
    img.clamp();
    return img;
}

std::filesystem::path write_synthetic_corpus(const std::filesystem::path& dir, const SyntheticCorpusSpec& spec)
{
    if (spec.users < 1 || spec.eyes_per_user < 1 || spec.eyes_per_user > 2 || spec.images_per_eye < 1) {
        throw std::invalid_argument("synthetic corpus needs users >= 1, 1-2 eyes per user, images >= 1");
    }
    std::filesystem::create_directories(dir);
    const auto csv_path = dir / "annotations.csv";
    std::ofstream csv(csv_path);
    if (!csv) {
        throw std::runtime_error("cannot write " + csv_path.string());
    }
    csv << "image_id,pupil_cx,pupil_cy,pupil_r,sclera_cx,sclera_cy,sclera_r,eye_id\n";
    csv.precision(10);
    for (int u = 0; u < spec.users; ++u) {
        for (int e = 0; e < spec.eyes_per_user; ++e) {
            char eye_id[16];
            std::snprintf(eye_id, sizeof eye_id, "S%04d%c", 1001 + u, e == 0 ? 'L' : 'R');
            const std::uint64_t eye_seed = spec.seed * 1000003ull + static_cast<std::uint64_t>(u * 2 + e);
            std::filesystem::create_directories(dir / eye_id);
            for (int k = 0; k < spec.images_per_eye; ++k) {
                char image_id[24];
                std::snprintf(image_id, sizeof image_id, "%s%02d", eye_id, k + 1);
                const auto eye = render_synthetic_eye(eye_seed, random_capture(eye_seed * 31 + static_cast<std::uint64_t>(k)));
                write_image(dir / eye_id / (std::string(image_id) + ".png"), eye.image);
                const auto& a = eye.annotation;
                csv << image_id << ',' << a.pupil.cx << ',' << a.pupil.cy << ',' << a.pupil.r << ',' << a.sclera.cx << ','
                    << a.sclera.cy << ',' << a.sclera.r << ',' << eye_id << '\n';
            }
        }
    }
    return csv_path;
}

} // namespace irissr

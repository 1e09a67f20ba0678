#include "irissr/error.hpp"
#include "irissr/image.hpp"
#include "irissr/image_io.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <random>

using namespace irissr;

TEST_CASE("resize produces requested dimensions with floor halving")
{
    const auto img = testing::texture_image(231, 231, 3);
    const auto half = resize(img, 231 / 2, 231 / 2, Kernel::bicubic);
    CHECK(half.width == 115);
    CHECK(half.height == 115);
    const auto odd = resize(img, 40, 17, Kernel::bilinear);
    CHECK(odd.width == 40);
    CHECK(odd.height == 17);
}

TEST_CASE("resize to the source size is bitwise identity")
{
    const auto img = testing::random_image(37, 21, 11);
    CHECK(resize(img, 37, 21, Kernel::bicubic) == img);
    CHECK(resize(img, 37, 21, Kernel::bilinear) == img);
}

TEST_CASE("interpolating a constant image yields the constant")
{
    const Image img(4, 4, 0.7f);
    for (auto kernel : {Kernel::bicubic, Kernel::bilinear}) {
        const auto up = resize(img, 8, 8, kernel);
        for (float v : up.data) {
            CHECK(v == doctest::Approx(0.7f).epsilon(1e-6));
        }
    }
}

TEST_CASE("resize rejects non-positive targets")
{
    const Image img(4, 4, 0.5f);
    CHECK_THROWS_AS(resize(img, 0, 4, Kernel::bicubic), std::invalid_argument);
    CHECK_THROWS_AS(resize(img, 4, -1, Kernel::bilinear), std::invalid_argument);
}

TEST_CASE("bicubic upscale interpolates a linear ramp exactly in the interior")
{
    // Catmull-Rom reproduces linear functions away from clamped borders.
    Image ramp(16, 1);
    for (int c = 0; c < 16; ++c) {
        ramp.at(0, c) = 0.05f * c;
    }
    const auto up = resize(ramp, 32, 1, Kernel::bicubic);
    for (int c = 6; c < 26; ++c) {
        const double src = (c + 0.5) / 2.0 - 0.5;
        CHECK(up.at(0, c) == doctest::Approx(0.05 * src).epsilon(1e-5));
    }
}

TEST_CASE("degrade keeps dimensions and the unit interval")
{
    const auto img = testing::random_image(231, 231, 5);
    for (int f : {2, 4, 8, 16}) {
        const auto d = degrade(img, f);
        CHECK(d.width == 231);
        CHECK(d.height == 231);
        CHECK(std::all_of(d.data.begin(), d.data.end(), [](float v) { return v >= 0.0f && v <= 1.0f; }));
    }
    CHECK(downscale(img, 4).width == 57);
    CHECK(downscale(img, 8).width == 28);
    CHECK(downscale(img, 16).width == 14);
}

TEST_CASE("degrade of a constant image is the constant")
{
    const Image img(64, 48, 0.3f);
    const auto d = degrade(img, 2);
    for (float v : d.data) {
        CHECK(v == doctest::Approx(0.3f).epsilon(1e-6));
    }
}

TEST_CASE("degrade rejects unsupported factors")
{
    const Image img(64, 64, 0.3f);
    for (int f : {0, 1, 3, 6, 32}) {
        CHECK_THROWS_AS(degrade(img, f), std::invalid_argument);
    }
}

TEST_CASE("extract_patches grid arithmetic")
{
    const auto img = testing::random_image(231, 231, 1);
    const auto set = extract_patches(img, 33, 14);
    CHECK(set.origins.size() == 225);
    CHECK(set.origins.front() == PatchOrigin{0, 0});
    CHECK(set.origins.back() == PatchOrigin{196, 196});
    CHECK(set.origins[1] == PatchOrigin{0, 14});
    for (const auto& p : set.patches) {
        CHECK(p.size() == 33u * 33u);
    }

    const auto whole = extract_patches(img, 231, 5);
    REQUIRE(whole.patches.size() == 1);
    CHECK(whole.patches[0] == img.data);

    const auto small = testing::random_image(33, 33, 2);
    CHECK(extract_patches(small, 33, 1).patches.size() == 1);
    CHECK_THROWS_AS(extract_patches(small, 34, 1), std::invalid_argument);
}

TEST_CASE("assemble_patches averages overlapping blocks")
{
    SUBCASE("single covering block")
    {
        const auto img = testing::random_image(5, 5, 9);
        const std::vector<std::vector<float>> blocks{img.data};
        const std::vector<PatchOrigin> origins{{0, 0}};
        CHECK(assemble_patches(blocks, 5, origins, 5, 5) == img);
    }
    SUBCASE("two identical placements")
    {
        const std::vector<std::vector<float>> blocks{std::vector<float>(9, 0.2f), std::vector<float>(9, 0.6f)};
        const std::vector<PatchOrigin> origins{{0, 0}, {0, 0}};
        const auto out = assemble_patches(blocks, 3, origins, 3, 3);
        for (float v : out.data) {
            CHECK(v == doctest::Approx(0.4f));
        }
    }
    SUBCASE("staggered 1-D strip against direct accumulation")
    {
        // Blocks are 1-row strips embedded as 3x3 blocks on a 3-row image.
        std::mt19937_64 rng(4);
        std::uniform_real_distribution<float> u(0.0f, 1.0f);
        const std::vector<PatchOrigin> origins{{0, 0}, {0, 2}, {0, 3}};
        std::vector<std::vector<float>> blocks(3, std::vector<float>(9));
        for (auto& b : blocks) {
            for (auto& v : b) {
                v = u(rng);
            }
        }
        const int w = 6, h = 3;
        const auto out = assemble_patches(blocks, 3, origins, w, h);
        for (int r = 0; r < h; ++r) {
            for (int c = 0; c < w; ++c) {
                double sum = 0;
                int count = 0;
                for (std::size_t b = 0; b < blocks.size(); ++b) {
                    const int lc = c - origins[b].col;
                    if (lc >= 0 && lc < 3) {
                        sum += blocks[b][static_cast<std::size_t>(r) * 3 + lc];
                        ++count;
                    }
                }
                REQUIRE(count > 0);
                CHECK(out.at(r, c) == doctest::Approx(sum / count).epsilon(1e-6));
            }
        }
    }
    SUBCASE("uncovered pixel is a coverage gap")
    {
        const std::vector<std::vector<float>> blocks{std::vector<float>(4, 0.5f)};
        const std::vector<PatchOrigin> origins{{0, 0}};
        CHECK_THROWS_AS(assemble_patches(blocks, 2, origins, 3, 2), CoverageGapError);
    }
}

TEST_CASE("patch round trip and permutation invariance")
{
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        std::mt19937_64 rng(seed);
        const int w = 20 + static_cast<int>(rng() % 30);
        const int h = 20 + static_cast<int>(rng() % 30);
        const int size = 3 + static_cast<int>(rng() % 10);
        const int stride = 1 + static_cast<int>(rng() % size);
        const auto img = testing::random_image(w, h, seed + 100);

        const auto rows = grid_anchors(h, size, stride, true);
        const auto cols = grid_anchors(w, size, stride, true);
        std::vector<PatchOrigin> origins;
        std::vector<std::vector<float>> blocks;
        for (int r : rows) {
            for (int c : cols) {
                origins.push_back({r, c});
                blocks.push_back(crop(img, r, c, size, size).data);
            }
        }
        const auto rebuilt = assemble_patches(blocks, size, origins, w, h);
        for (std::size_t i = 0; i < img.size(); ++i) {
            REQUIRE(rebuilt.data[i] == doctest::Approx(img.data[i]).epsilon(1e-6));
        }

        std::vector<std::size_t> perm(blocks.size());
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        std::vector<PatchOrigin> po;
        std::vector<std::vector<float>> pb;
        for (auto i : perm) {
            po.push_back(origins[i]);
            pb.push_back(blocks[i]);
        }
        const auto permuted = assemble_patches(pb, size, po, w, h);
        for (std::size_t i = 0; i < img.size(); ++i) {
            REQUIRE(permuted.data[i] == doctest::Approx(rebuilt.data[i]).epsilon(1e-7));
        }
    }
}

TEST_CASE("reflect padding mirrors without repeating the edge")
{
    Image img(3, 1, std::vector<float>{0.1f, 0.2f, 0.3f});
    img = resize(img, 3, 3, Kernel::bilinear);
    const auto p = reflect_pad(img, 2);
    CHECK(p.width == 7);
    CHECK(p.at(2, 0) == doctest::Approx(0.3f));
    CHECK(p.at(2, 1) == doctest::Approx(0.2f));
    CHECK(p.at(2, 6) == doctest::Approx(0.1f));
}

TEST_CASE("8-bit PNG and PGM round trip")
{
    const auto img = testing::random_image(23, 17, 8);
    const auto dir = std::filesystem::temp_directory_path();
    for (const char* name : {"irissr_io_test.png", "irissr_io_test.pgm"}) {
        const auto path = dir / name;
        write_image(path, img);
        const auto back = read_image(path);
        REQUIRE(back.width == 23);
        REQUIRE(back.height == 17);
        CHECK(to_gray8(back) == to_gray8(img));
        std::filesystem::remove(path);
    }
}

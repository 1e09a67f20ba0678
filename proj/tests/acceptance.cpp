// Acceptance suite: one PASS/FAIL/SKIP line per criterion, exit 1 on any FAIL.

#include "irissr/cascade.hpp"
#include "irissr/error.hpp"
#include "irissr/harness.hpp"
#include "irissr/image.hpp"
#include "irissr/iris.hpp"
#include "irissr/quality.hpp"
#include "irissr/sae.hpp"
#include "irissr/srcnn.hpp"
#include "irissr/synthetic.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace irissr;

namespace {

enum class Outcome { pass, fail, skip };

struct Verdict {
    Outcome outcome = Outcome::fail;
    std::string detail;
};

Verdict verdict(bool ok, const std::string& detail) { return {ok ? Outcome::pass : Outcome::fail, detail}; }

int failures = 0;

void criterion(int id, const char* name, const std::function<Verdict()>& body)
{
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
        v = body();
    } catch (const std::exception& e) {
        v = {Outcome::fail, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const char* tag = v.outcome == Outcome::pass ? "PASS" : v.outcome == Outcome::fail ? "FAIL" : "SKIP";
    if (v.outcome == Outcome::fail) {
        ++failures;
    }
    std::printf("[%s] %d %s: %s (%.1f s)\n", tag, id, name, v.detail.c_str(), secs);
    std::fflush(stdout);
}

std::string fmt(const char* f, double a)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

Image random_image(int w, int h, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    Image img(w, h);
    for (auto& v : img.data) {
        v = u(rng);
    }
    return img;
}

std::vector<float> patch_at(const Image& img, int top, int left)
{
    std::vector<float> p;
    p.reserve(kInputPatch * kInputPatch);
    for (int r = 0; r < kInputPatch; ++r) {
        for (int c = 0; c < kInputPatch; ++c) {
            p.push_back(img.at(top + r, left + c));
        }
    }
    return p;
}

Verdict gradients()
{
    const auto rows = run_gradcheck(200, 1e-4, 1);
    bool ok = true;
    std::ostringstream d;
    for (const auto& r : rows) {
        ok = ok && r.result.checked >= 200 && r.result.max_relative_error <= 1e-3;
        d << r.network << " max rel err " << r.result.max_relative_error << " over " << r.result.checked
          << " params; ";
    }
    return verdict(ok, d.str());
}

Verdict convolution_equivalence()
{
    const auto model = build_default_srcnn(2, 7);
    const Image img = random_image(64, 64, 3);
    const Image full = apply_srcnn(model, img);
    const auto raw = model.net.forward(nn::Tensor<float>(1, 64, 64, 1, img.data));
    const int raw_w = raw.width;
    double worst_raw = 0.0;
    double worst_full = 0.0;
    int count = 0;
    constexpr int kCentre = kOutputPatch / 2;
    // Every pixel with a complete 33x33 neighbourhood.
    for (int r = 16; r + 16 < 64; ++r) {
        for (int c = 16; c + 16 < 64; ++c) {
            const auto out = predict_patch(model, patch_at(img, r - 16, c - 16));
            const double centre = out[kCentre * kOutputPatch + kCentre];
            worst_raw = std::max(worst_raw, std::abs(centre - raw.data[static_cast<std::size_t>(r - 6) * raw_w + (c - 6)]));
            worst_full = std::max(worst_full, std::abs(std::clamp(centre, 0.0, 1.0) - full.at(r, c)));
            ++count;
        }
    }
    return verdict(worst_raw <= 1e-5 && worst_full <= 1e-5,
                   std::to_string(count) + " interior pixels, max |diff| " + fmt("%.2e", worst_raw) +
                       " (network), " + fmt("%.2e", worst_full) + " (clamped image)");
}

Verdict architecture()
{
    const auto srcnn = build_default_srcnn(2);
    const std::size_t params = srcnn.net.parameter_count();
    const auto out = srcnn.net.forward(nn::Tensor<float>(1, 33, 33, 1));
    std::vector<Autoencoder> layers;
    for (std::size_t i = 0; i + 2 < kSaeDims.size(); ++i) {
        layers.push_back({nn::DenseLayer<float>(kSaeDims[i], kSaeDims[i + 1], nn::Activation::sigmoid),
                          nn::DenseLayer<float>(kSaeDims[i + 1], kSaeDims[i], nn::Activation::sigmoid)});
    }
    const auto sae = stack_encoders(layers, SaeTrainConfig{});
    std::vector<int> dims;
    for (const auto& l : sae.net.layers) {
        const auto& d = std::get<nn::DenseLayer<float>>(l);
        if (dims.empty()) {
            dims.push_back(d.in_dim);
        }
        dims.push_back(d.out_dim);
    }
    const bool chain = std::equal(dims.begin(), dims.end(), kSaeDims.begin(), kSaeDims.end());
    std::ostringstream d;
    d << "SRCNN " << params << " params, 33x33 -> " << out.height << "x" << out.width << "; SAE";
    for (int v : dims) {
        d << ' ' << v;
    }
    return verdict(params == 8129 && out.height == 21 && out.width == 21 && out.channels == 1 && chain, d.str());
}

double mean_psnr_gain(const SrcnnModel& model, const std::vector<Image>& held_out)
{
    double gain = 0.0;
    for (const auto& hr : held_out) {
        const Image bic = degrade(hr, 2);
        gain += psnr(hr, refine(bic, 2, model)) - psnr(hr, bic);
    }
    return gain / static_cast<double>(held_out.size());
}

Verdict desk_learning()
{
    std::vector<Image> train;
    std::vector<Image> held_out;
    for (std::uint64_t i = 0; i < 20; ++i) {
        train.push_back(synthetic_texture(96, 96, 100 + i));
    }
    for (std::uint64_t i = 0; i < 10; ++i) {
        held_out.push_back(synthetic_texture(96, 96, 500 + i));
    }
    const auto pairs = make_training_set(train, 2, 14);
    TrainRegime regime;
    regime.config.sgd.iterations = 2000;
    regime.config.seed = 1;
    const auto result = train_srcnn(build_default_srcnn(2, 1), pairs, regime);
    const double gain = mean_psnr_gain(result.model, held_out);

    // SAE: stacked pretrained encoders, then supervised fine-tuning.
    std::vector<TrainPair> sae_pairs(pairs.begin(), pairs.begin() + std::min<std::size_t>(100, pairs.size()));
    std::vector<std::vector<float>> inputs;
    for (const auto& p : sae_pairs) {
        inputs.push_back(p.input);
    }
    auto cfg = SaeTrainConfig::desk_scale(1);
    cfg.seed = 3;
    auto model = stack_encoders(pretrain_stack(inputs, cfg), cfg);
    const double before = evaluate_mse(model, sae_pairs);
    auto tune = SaeTrainConfig::desk_scale(16);
    tune.seed = 4;
    fine_tune(model, sae_pairs, tune);
    const double after = evaluate_mse(model, sae_pairs);
    const double reduction = 1.0 - after / before;

    return verdict(gain >= 0.3 && reduction >= 0.5,
                   "SRCNN-FS " + std::to_string(pairs.size()) + " pairs, 2000 iterations: held-out PSNR gain over bicubic " +
                       fmt("%.3f dB", gain) + "; SAE train MSE " + fmt("%.5f", before) + " -> " + fmt("%.5f", after) +
                       " (" + fmt("%.1f%% lower)", 100.0 * reduction));
}

Verdict metrics()
{
    // Test-split style inputs: preprocessed 231x231 iris crops.
    std::vector<Image> images;
    for (std::uint64_t s = 0; s < 10; ++s) {
        const auto eye = render_synthetic_eye(40 + s, random_capture(s));
        images.push_back(preprocess(eye.image, eye.annotation)->image);
    }
    bool identities = true;
    bool monotone = true;
    double worst_identity = 0.0;
    for (const auto& img : images) {
        identities = identities && psnr(img, img) == kPsnrIdentical;
        worst_identity = std::max({worst_identity, std::abs(ssim(img, img) - 1.0), std::abs(vif(img, img) - 1.0)});
        double prev_p = kPsnrIdentical;
        double prev_s = 2.0;
        for (int f : {2, 4, 8, 16}) {
            const Image d = degrade(img, f);
            const double p = psnr(img, d);
            const double s = ssim(img, d);
            monotone = monotone && p <= prev_p && s <= prev_s;
            prev_p = p;
            prev_s = s;
        }
    }
    identities = identities && worst_identity <= 1e-9;
    return verdict(identities && monotone, std::to_string(images.size()) + " images: psnr(x,x)=inf, max |ssim-1|,|vif-1| " +
                                               fmt("%.1e", worst_identity) + "; bicubic PSNR/SSIM over x2..x16 " +
                                               (monotone ? "non-increasing" : "NOT monotone"));
}

// Brute-force sweep, written apart from the library: returns the EER and
// whether it was read exactly at a crossing.
std::pair<double, bool> eer_sweep(const std::vector<double>& g, const std::vector<double>& im)
{
    std::vector<double> t(g);
    t.insert(t.end(), im.begin(), im.end());
    std::sort(t.begin(), t.end());
    t.erase(std::unique(t.begin(), t.end()), t.end());
    double prev_far = 0.0;
    double prev_d = 0.0;
    for (double th : t) {
        const double far = static_cast<double>(std::count_if(im.begin(), im.end(), [&](double v) { return v < th; })) /
                           static_cast<double>(im.size());
        const double frr = static_cast<double>(std::count_if(g.begin(), g.end(), [&](double v) { return v > th; })) /
                           static_cast<double>(g.size());
        const double d = far - frr;
        if (d == 0.0) {
            return {far, true};
        }
        if (d > 0.0) {
            return {prev_far + (-prev_d / (d - prev_d)) * (far - prev_far), false};
        }
        prev_far = far;
        prev_d = d;
    }
    return {prev_far, true};
}

Verdict eer_oracle()
{
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> len(1, 50);
    std::uniform_int_distribution<int> levels(0, 1);
    int exact = 0;
    int interpolated = 0;
    double worst = 0.0;
    bool ok = true;
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> g(static_cast<std::size_t>(len(rng)));
        std::vector<double> im(static_cast<std::size_t>(len(rng)));
        const bool coarse = levels(rng) == 1;
        std::uniform_int_distribution<int> q(0, 12);
        std::normal_distribution<double> n(0.0, 0.08);
        for (auto& v : g) {
            v = coarse ? q(rng) / 24.0 : 0.30 + n(rng);
        }
        for (auto& v : im) {
            v = coarse ? q(rng) / 24.0 + 0.1 : 0.42 + n(rng);
        }
        const double got = compute_eer(g, im).eer;
        const auto [want, at_crossing] = eer_sweep(g, im);
        if (at_crossing) {
            ++exact;
            ok = ok && got == want;
        } else {
            ++interpolated;
            ok = ok && std::abs(got - want) <= 1e-12;
        }
        worst = std::max(worst, std::abs(got - want));
    }
    return verdict(ok, "200 instances (" + std::to_string(exact) + " exact crossings, " + std::to_string(interpolated) +
                           " interpolated), max |diff| " + fmt("%.1e", worst));
}

IrisCode random_code(std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution coin(0.5);
    IrisCode c;
    for (auto& b : c.bits) {
        b = coin(rng) ? 1 : 0;
    }
    std::fill(c.mask.begin(), c.mask.end(), 1);
    return c;
}

Verdict iris_invariants()
{
    const auto a = random_code(5);
    const auto b = random_code(6);
    IrisCode inv = a;
    for (auto& bit : inv.bits) {
        bit ^= 1;
    }
    const double self = hamming_distance(a, a);
    const double complement = hamming_distance(a, inv, 0);
    const double independent = hamming_distance(a, b);

    const auto eye = render_synthetic_eye(77);
    const auto norm = unwrap(eye.image, eye.annotation);
    const auto code = log_gabor_encode(norm);
    double worst_rotation = 0.0;
    for (int k = -kDefaultMaxShift; k <= kDefaultMaxShift; ++k) {
        NormalizedIris rotated;
        for (int i = 0; i < kStripRows; ++i) {
            for (int j = 0; j < kStripCols; ++j) {
                const auto src = static_cast<std::size_t>(i) * kStripCols + (j + k + kStripCols) % kStripCols;
                rotated.strip[static_cast<std::size_t>(i) * kStripCols + j] = norm.strip[src];
            }
        }
        worst_rotation = std::max(worst_rotation, hamming_distance(log_gabor_encode(rotated), code));
    }
    const bool ok = self == 0.0 && complement == 1.0 && std::abs(independent - 0.5) <= 0.02 && worst_rotation == 0.0;
    return verdict(ok, "HD(c,c)=" + fmt("%g", self) + ", HD(c,~c)=" + fmt("%g", complement) + ", independent " +
                           fmt("%.4f", independent) + ", worst HD over strip rotations -8..8 " +
                           fmt("%g", worst_rotation));
}

Verdict cascade_contract()
{
    const auto srcnn = build_default_srcnn(2, 1);
    CascadeStats up;
    const Image lr = synthetic_texture(20, 18, 9);
    const Image big = super_resolve(lr, 8, srcnn, &up);
    CascadeStats in_place;
    (void)refine(degrade(synthetic_texture(64, 64, 9), 8), 8, srcnn, &in_place);
    const bool ok = up.passes == 3 && in_place.passes == 3 && big.width == 160 && big.height == 144;
    return verdict(ok, "x8 with a x2 model: " + std::to_string(up.passes) + " passes (upscale), " +
                           std::to_string(in_place.passes) + " passes (refine), output " + std::to_string(big.width) +
                           "x" + std::to_string(big.height));
}

const char* env(const char* name)
{
    const char* v = std::getenv(name);
    return v && *v ? v : nullptr;
}

Verdict dataset()
{
    const char* root = env("IRISSR_CASIA_ROOT");
    const char* ann = env("IRISSR_CASIA_ANNOTATIONS");
    if (!root || !ann) {
        return {Outcome::skip, "set IRISSR_CASIA_ROOT and IRISSR_CASIA_ANNOTATIONS to run on CASIA-IrisV3-Interval"};
    }
    const auto corpus = ingest(root, ann);
    ExperimentConfig cfg;
    cfg.methods = {"bilinear", "bicubic"};
    const char* base = env("IRISSR_BASE_WEIGHTS");
    if (base) {
        cfg.methods.push_back("srcnn-ft");
        cfg.weights["base-x2"] = base;
    }
    cfg.factors = {2};
    cfg.regions = {Region::full};
    cfg.scenarios = {1};
    ModelStore models(corpus, cfg);
    const auto quality = run_quality_experiment(corpus, cfg, models);
    auto value = [&](const ExperimentReport& r, const std::string& m, std::optional<int> tf, int f,
                     const std::string& metric) { return *r.find(m, tf, f, metric)->value; };
    const double p = value(quality, "bicubic", std::nullopt, 2, "psnr");
    const double s = value(quality, "bicubic", std::nullopt, 2, "ssim");
    bool ok = std::abs(p - 34.04) <= 0.5 && std::abs(s - 0.926) <= 0.02;
    std::string d = "bicubic x2 PSNR " + fmt("%.2f", p) + " SSIM " + fmt("%.3f", s);

    auto control_cfg = cfg;
    control_cfg.methods = {"bicubic"};
    const auto recognition = run_recognition_experiment(corpus, control_cfg);
    const double eer = value(recognition, "none", std::nullopt, 1, "eer_s1");
    ok = ok && std::abs(eer - 0.76) <= 0.3;
    d += "; unscaled EER " + fmt("%.2f%%", eer);

    const double vif_bil = value(quality, "bilinear", std::nullopt, 2, "vif");
    const double vif_bic = value(quality, "bicubic", std::nullopt, 2, "vif");
    bool vif_rank = vif_bic > vif_bil;
    if (base) {
        const double ft = value(quality, "srcnn-ft", 2, 2, "psnr");
        ok = ok && ft > p;
        vif_rank = vif_rank && value(quality, "srcnn-ft", 2, 2, "vif") > vif_bic;
        d += "; CNN-FT x2 PSNR " + fmt("%.2f", ft);
    } else {
        d += "; CNN-FT ordering skipped (set IRISSR_BASE_WEIGHTS)";
    }
    ok = ok && vif_rank;
    d += vif_rank ? "; VIF rank order matches" : "; VIF rank order differs";
    return verdict(ok, d);
}

} // namespace

int main()
{
    criterion(1, "gradient correctness", gradients);
    criterion(2, "convolution equivalence", convolution_equivalence);
    criterion(3, "architecture arithmetic", architecture);
    criterion(4, "learning at desk scale", desk_learning);
    criterion(5, "metric identities and monotonicity", metrics);
    criterion(6, "EER oracle equivalence", eer_oracle);
    criterion(7, "iris pipeline invariants", iris_invariants);
    criterion(8, "cascade contract", cascade_contract);
    criterion(9, "dataset reproduction", dataset);
    std::printf("%s: %d criterion(s) failed\n", failures ? "FAILED" : "OK", failures);
    return failures ? 1 : 0;
}

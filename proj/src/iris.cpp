#include "irissr/iris.hpp"

#include "irissr/error.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <iostream>
#include <numbers>
#include <stdexcept>

namespace irissr {

namespace {

constexpr int kHalfCrop = kCropSize / 2;

float bilinear(const Image& img, double x, double y)
{
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    const int x1 = std::min(x0 + 1, img.width - 1);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double fx = x - x0;
    const double fy = y - y0;
    const double top = (1.0 - fx) * img.at(y0, x0) + fx * img.at(y0, x1);
    const double bottom = (1.0 - fx) * img.at(y1, x0) + fx * img.at(y1, x1);
    return static_cast<float>((1.0 - fy) * top + fy * bottom);
}

// Spatial kernel of the one-sided log-Gabor filter: inverse DFT of its
// frequency response over bins 1 .. N/2 (DC and negative frequencies are 0).
std::vector<std::complex<double>> log_gabor_kernel(const LogGaborParams& p)
{
    if (!(p.wavelength > 2.0) || !(p.sigma_on_f > 0.0 && p.sigma_on_f < 1.0)) {
        throw std::invalid_argument("log-Gabor needs wavelength > 2 and 0 < sigma/f < 1");
    }
    constexpr int n = kStripCols;
    const double f0 = 1.0 / p.wavelength;
    const double denom = 2.0 * std::log(p.sigma_on_f) * std::log(p.sigma_on_f);
    std::vector<double> gain(n / 2 + 1, 0.0);
    for (int k = 1; k <= n / 2; ++k) {
        const double f = static_cast<double>(k) / n;
        const double l = std::log(f / f0);
        gain[k] = std::exp(-l * l / denom);
    }
    std::vector<std::complex<double>> h(n);
    for (int m = 0; m < n; ++m) {
        std::complex<double> acc = 0.0;
        for (int k = 1; k <= n / 2; ++k) {
            acc += gain[k] * std::polar(1.0, 2.0 * std::numbers::pi * k * m / n);
        }
        h[m] = acc / static_cast<double>(n);
    }
    return h;
}

} // namespace

void SegmentationAnnotation::validate() const
{
    const bool finite = std::isfinite(pupil.cx) && std::isfinite(pupil.cy) && std::isfinite(pupil.r) &&
                        std::isfinite(sclera.cx) && std::isfinite(sclera.cy) && std::isfinite(sclera.r);
    if (!finite || !(pupil.r > 0.0) || !(pupil.r < sclera.r)) {
        throw InvalidAnnotationError("annotation needs 0 < pupil radius < sclera radius");
    }
    if (std::hypot(pupil.cx - sclera.cx, pupil.cy - sclera.cy) >= sclera.r) {
        throw InvalidAnnotationError("pupil centre lies outside the sclera circle");
    }
}

Image NormalizedIris::as_image() const
{
    return Image(kStripCols, kStripRows, strip);
}

NormalizedIris NormalizedIris::from_image(const Image& strip_image)
{
    if (strip_image.width != kStripCols || strip_image.height != kStripRows) {
        throw std::invalid_argument("normalized iris must be 240 x 20");
    }
    NormalizedIris n;
    n.strip = strip_image.data;
    return n;
}

std::size_t IrisCode::valid_count() const
{
    return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), 1));
}

std::optional<PreprocessedIris> preprocess(const Image& img, const SegmentationAnnotation& ann,
                                           double target_sclera_radius)
{
    ann.validate();
    if (!(target_sclera_radius > 0.0)) {
        throw std::invalid_argument("target sclera radius must be positive");
    }
    if (img.empty()) {
        throw std::invalid_argument("cannot preprocess an empty image");
    }
    const double s = target_sclera_radius / ann.sclera.r;
    const int new_w = std::max(1, static_cast<int>(std::lround(img.width * s)));
    const int new_h = std::max(1, static_cast<int>(std::lround(img.height * s)));
    const double sx = static_cast<double>(new_w) / img.width;
    const double sy = static_cast<double>(new_h) / img.height;
    auto map_x = [&](double x) { return (x + 0.5) * sx - 0.5; };
    auto map_y = [&](double y) { return (y + 0.5) * sy - 0.5; };

    const long cx = std::lround(map_x(ann.pupil.cx));
    const long cy = std::lround(map_y(ann.pupil.cy));
    const long left = cx - kHalfCrop;
    const long top = cy - kHalfCrop;
    if (left < 0 || top < 0 || left + kCropSize > new_w || top + kCropSize > new_h) {
        return std::nullopt;
    }

    const Image scaled = resize(img, new_w, new_h, Kernel::bicubic);
    PreprocessedIris out;
    out.scale = 0.5 * (sx + sy);
    out.image = crop(scaled, static_cast<int>(top), static_cast<int>(left), kCropSize, kCropSize);
    out.annotation.pupil = {map_x(ann.pupil.cx) - left, map_y(ann.pupil.cy) - top, ann.pupil.r * out.scale};
    out.annotation.sclera = {map_x(ann.sclera.cx) - left, map_y(ann.sclera.cy) - top, ann.sclera.r * out.scale};
    return out;
}

NormalizedIris unwrap(const Image& img, const SegmentationAnnotation& ann)
{
    ann.validate();
    NormalizedIris out;
    int valid = 0;
    for (int j = 0; j < kStripCols; ++j) {
        const double theta = 2.0 * std::numbers::pi * j / kStripCols;
        const double c = std::cos(theta);
        const double s = std::sin(theta);
        const double px = ann.pupil.cx + ann.pupil.r * c;
        const double py = ann.pupil.cy + ann.pupil.r * s;
        const double qx = ann.sclera.cx + ann.sclera.r * c;
        const double qy = ann.sclera.cy + ann.sclera.r * s;
        for (int i = 0; i < kStripRows; ++i) {
            const double rho = (i + 0.5) / kStripRows;
            const double x = (1.0 - rho) * px + rho * qx;
            const double y = (1.0 - rho) * py + rho * qy;
            const auto idx = static_cast<std::size_t>(i) * kStripCols + j;
            if (x < 0.0 || y < 0.0 || x > img.width - 1 || y > img.height - 1) {
                out.strip[idx] = 0.0f;
                out.valid[idx] = 0;
                continue;
            }
            out.strip[idx] = bilinear(img, x, y);
            ++valid;
        }
    }
    if (valid == 0) {
        throw InvalidAnnotationError("annotation lies entirely outside the image");
    }
    return out;
}

IrisCode log_gabor_encode(const NormalizedIris& norm, const LogGaborParams& params)
{
    if (norm.strip.size() != static_cast<std::size_t>(kStripSamples) ||
        norm.valid.size() != static_cast<std::size_t>(kStripSamples)) {
        throw std::invalid_argument("normalized iris must hold 20 x 240 samples");
    }
    const auto h = log_gabor_kernel(params);
    IrisCode code;
    std::vector<double> row(kStripCols);
    for (int i = 0; i < kStripRows; ++i) {
        const auto base = static_cast<std::size_t>(i) * kStripCols;
        // Invalid samples are replaced by the row mean so they add no edge.
        double sum = 0.0;
        int count = 0;
        for (int j = 0; j < kStripCols; ++j) {
            if (norm.valid[base + j]) {
                sum += norm.strip[base + j];
                ++count;
            }
        }
        const double fill = count ? sum / count : 0.0;
        for (int j = 0; j < kStripCols; ++j) {
            row[j] = norm.valid[base + j] ? static_cast<double>(norm.strip[base + j]) : fill;
        }
        for (int m = 0; m < kStripCols; ++m) {
            std::complex<double> acc = 0.0;
            for (int n = 0; n < kStripCols; ++n) {
                int k = m - n;
                if (k < 0) {
                    k += kStripCols;
                }
                acc += row[k] * h[n];
            }
            const auto idx = base + m;
            code.bits[2 * idx] = acc.real() >= 0.0 ? 1 : 0;
            code.bits[2 * idx + 1] = acc.imag() >= 0.0 ? 1 : 0;
            code.mask[idx] = (norm.valid[idx] && std::abs(acc) >= params.magnitude_floor) ? 1 : 0;
        }
    }
    return code;
}

IrisCode shift_columns(const IrisCode& code, int shift)
{
    IrisCode out;
    for (int i = 0; i < kStripRows; ++i) {
        for (int j = 0; j < kStripCols; ++j) {
            int src = (j + shift) % kStripCols;
            if (src < 0) {
                src += kStripCols;
            }
            const auto d = static_cast<std::size_t>(i) * kStripCols + j;
            const auto s = static_cast<std::size_t>(i) * kStripCols + src;
            out.bits[2 * d] = code.bits[2 * s];
            out.bits[2 * d + 1] = code.bits[2 * s + 1];
            out.mask[d] = code.mask[s];
        }
    }
    return out;
}

PackedCode::PackedCode(const IrisCode& code, int max_shift) : max_shift_(max_shift)
{
    if (max_shift < 0 || max_shift >= kStripCols / 2) {
        throw std::invalid_argument("max_shift must lie in [0, 119]");
    }
    if (code.bits.size() != static_cast<std::size_t>(kCodeBits) ||
        code.mask.size() != static_cast<std::size_t>(kStripSamples)) {
        throw std::invalid_argument("iris code has the wrong size");
    }
    for (int s = -max_shift; s <= max_shift; ++s) {
        const auto shifted = shift_columns(code, s);
        Plane p;
        for (std::size_t b = 0; b < static_cast<std::size_t>(kCodeBits); ++b) {
            const std::uint64_t bit = std::uint64_t{1} << (b % 64);
            if (shifted.bits[b]) {
                p.bits[b / 64] |= bit;
            }
            if (shifted.mask[b / 2]) {
                p.mask[b / 64] |= bit;
            }
        }
        planes_.push_back(p);
    }
}

double hamming_distance(const PackedCode& query, const PackedCode& enrolled)
{
    if (query.planes_.empty() || enrolled.planes_.empty()) {
        throw std::invalid_argument("hamming_distance on an empty packed code");
    }
    const auto& e = enrolled.planes_[static_cast<std::size_t>(enrolled.max_shift_)];
    double best = 2.0;
    for (const auto& q : query.planes_) {
        int joint = 0;
        int diff = 0;
        for (int w = 0; w < PackedCode::kWords; ++w) {
            const auto m = q.mask[w] & e.mask[w];
            joint += std::popcount(m);
            diff += std::popcount((q.bits[w] ^ e.bits[w]) & m);
        }
        if (joint > 0) {
            best = std::min(best, static_cast<double>(diff) / joint);
        }
    }
    if (best > 1.0) {
        throw IncomparableError("iris codes share no valid sample at any shift");
    }
    return best;
}

double hamming_distance(const IrisCode& a, const IrisCode& b, int max_shift)
{
    return hamming_distance(PackedCode(a, max_shift), PackedCode(b, 0));
}

VerificationResult compute_eer(std::span<const double> genuine, std::span<const double> impostor)
{
    if (genuine.empty() || impostor.empty()) {
        throw std::invalid_argument("EER needs genuine and impostor scores");
    }
    std::vector<double> g(genuine.begin(), genuine.end());
    std::vector<double> im(impostor.begin(), impostor.end());
    for (double v : g) {
        if (std::isnan(v)) {
            throw std::invalid_argument("NaN genuine score");
        }
    }
    for (double v : im) {
        if (std::isnan(v)) {
            throw std::invalid_argument("NaN impostor score");
        }
    }
    std::sort(g.begin(), g.end());
    std::sort(im.begin(), im.end());
    std::vector<double> thresholds;
    thresholds.reserve(g.size() + im.size());
    std::merge(g.begin(), g.end(), im.begin(), im.end(), std::back_inserter(thresholds));
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

    const double ng = static_cast<double>(g.size());
    const double ni = static_cast<double>(im.size());
    auto far = [&](double t) { return static_cast<double>(std::lower_bound(im.begin(), im.end(), t) - im.begin()) / ni; };
    auto frr = [&](double t) { return static_cast<double>(g.end() - std::upper_bound(g.begin(), g.end(), t)) / ng; };

    VerificationResult r;
    r.genuine_count = g.size();
    r.impostor_count = im.size();
    double prev_t = 0.0;
    double prev_far = 0.0;
    double prev_d = 0.0;
    for (std::size_t k = 0; k < thresholds.size(); ++k) {
        const double t = thresholds[k];
        const double fa = far(t);
        const double d = fa - frr(t);
        if (d == 0.0) {
            r.eer = fa;
            r.threshold_at_eer = t;
            return r;
        }
        if (d > 0.0) {
            // FAR - FRR starts at -FRR(min) <= 0, so k > 0 here.
            const double alpha = -prev_d / (d - prev_d);
            r.eer = prev_far + alpha * (fa - prev_far);
            r.threshold_at_eer = prev_t + alpha * (t - prev_t);
            return r;
        }
        prev_t = t;
        prev_far = fa;
        prev_d = d;
    }
    // Unreachable: at the largest threshold FRR is 0 and FAR >= 0.
    r.eer = prev_far;
    r.threshold_at_eer = prev_t;
    return r;
}

VerificationRun run_verification(int scenario, std::span<const IrisSample> samples, const Reconstructor& reconstruct,
                                 const VerificationOptions& options)
{
    if (scenario != 1 && scenario != 2) {
        throw std::invalid_argument("scenario must be 1 or 2");
    }
    struct Encoded {
        const IrisSample* sample;
        PackedCode enrolled;
        PackedCode query;
    };
    VerificationRun run;
    std::vector<Encoded> codes;
    for (const auto& s : samples) {
        const auto pre = preprocess(s.image, s.annotation, options.target_sclera_radius);
        if (!pre) {
            std::cerr << "warning: dropping " << s.image_id << " (231x231 crop leaves the image)\n";
            run.dropped.push_back(s.image_id);
            continue;
        }
        const Image sr = reconstruct(pre->image);
        if (sr.width != kCropSize || sr.height != kCropSize) {
            throw std::invalid_argument("reconstruction must keep the 231x231 size");
        }
        const auto sr_code = log_gabor_encode(unwrap(sr, pre->annotation), options.log_gabor);
        const auto enrolled_code =
            scenario == 1 ? log_gabor_encode(unwrap(pre->image, pre->annotation), options.log_gabor) : sr_code;
        codes.push_back({&s, PackedCode(enrolled_code, 0), PackedCode(sr_code, options.max_shift)});
    }

    std::vector<double> genuine;
    std::vector<double> impostor;
    for (const auto& q : codes) {
        for (const auto& e : codes) {
            if (q.sample->image_id == e.sample->image_id) {
                continue;
            }
            double score = 0.0;
            try {
                score = hamming_distance(q.query, e.enrolled);
            } catch (const IncomparableError&) {
                std::cerr << "warning: " << q.sample->image_id << " and " << e.sample->image_id
                          << " are incomparable\n";
                continue;
            }
            const bool same = q.sample->eye_id == e.sample->eye_id;
            (same ? genuine : impostor).push_back(score);
            run.scores.push_back({q.sample->image_id, e.sample->image_id, same, score});
        }
    }
    run.result = compute_eer(genuine, impostor);
    return run;
}

void write_scores_csv(std::ostream& out, std::span<const ScoreRecord> scores)
{
    out << "query_id,enrolled_id,label,score\n";
    const auto old_precision = out.precision(10);
    for (const auto& s : scores) {
        out << s.query_id << ',' << s.enrolled_id << ',' << (s.genuine ? "genuine" : "impostor") << ',' << s.score
            << '\n';
    }
    out.precision(old_precision);
}

} // namespace irissr

#pragma once

#include "irissr/image.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace irissr {

inline constexpr int kStripRows = 20;
inline constexpr int kStripCols = 240;
inline constexpr int kStripSamples = kStripRows * kStripCols;
inline constexpr int kCodeBits = 2 * kStripSamples;
inline constexpr int kCropSize = 231;
inline constexpr double kDefaultScleraRadius = 105.0;
inline constexpr int kDefaultMaxShift = 8;

struct Circle {
    double cx = 0.0;
    double cy = 0.0;
    double r = 0.0;
};

/// Pupil and sclera (outer iris) boundaries in pixel coordinates, where
/// pixel (row, col) has its centre at (x = col, y = row).
struct SegmentationAnnotation {
    Circle pupil;
    Circle sclera;

    /// Throws InvalidAnnotationError unless 0 < pupil.r < sclera.r and the
    /// pupil centre lies inside the sclera circle.
    void validate() const;
};

/// Rubber-sheet strip: row i is radial position (i + 0.5) / 20 between the
/// pupil and sclera boundaries, column j is angle 2 pi j / 240.
struct NormalizedIris {
    std::vector<float> strip = std::vector<float>(kStripSamples, 0.0f);
    std::vector<std::uint8_t> valid = std::vector<std::uint8_t>(kStripSamples, 1);

    Image as_image() const;
    static NormalizedIris from_image(const Image& strip_image);
};

/// Two phase bits per strip sample at index 2 * (row * 240 + col) + {0: real, 1: imaginary}.
struct IrisCode {
    std::vector<std::uint8_t> bits = std::vector<std::uint8_t>(kCodeBits, 0);
    std::vector<std::uint8_t> mask = std::vector<std::uint8_t>(kStripSamples, 0);

    std::size_t valid_count() const;
};

struct LogGaborParams {
    double wavelength = 18.0;
    double sigma_on_f = 0.5;
    double magnitude_floor = 1e-4;
};

struct PreprocessedIris {
    Image image;
    SegmentationAnnotation annotation;
    double scale = 1.0;
};

/// Rescales so the sclera radius becomes `target_sclera_radius` (bicubic) and
/// cuts the 231x231 square centred on the rounded pupil centre. Returns
/// nothing when that square leaves the rescaled image.
std::optional<PreprocessedIris> preprocess(const Image& img, const SegmentationAnnotation& ann,
                                           double target_sclera_radius = kDefaultScleraRadius);

/// Daugman rubber-sheet unwrapping with bilinear sampling. Samples outside the
/// image are marked invalid; throws InvalidAnnotationError if none is valid.
NormalizedIris unwrap(const Image& img, const SegmentationAnnotation& ann);

/// One-sided 1-D log-Gabor filter along each strip row, applied as a circular
/// convolution, quantised to quadrant bits (Re >= 0, Im >= 0). Samples with a
/// response magnitude below the floor, or invalid in the strip, are masked.
IrisCode log_gabor_encode(const NormalizedIris& norm, const LogGaborParams& params = {});

/// Code with every column moved: out[col] = in[(col + shift) mod 240].
IrisCode shift_columns(const IrisCode& code, int shift);

/// Bit-packed code with all column shifts in [-max_shift, max_shift] precomputed.
class PackedCode {
public:
    static constexpr int kWords = kCodeBits / 64;

    PackedCode() = default;
    PackedCode(const IrisCode& code, int max_shift);

    int max_shift() const { return max_shift_; }

private:
    friend double hamming_distance(const PackedCode& query, const PackedCode& enrolled);

    struct Plane {
        std::array<std::uint64_t, kWords> bits{};
        std::array<std::uint64_t, kWords> mask{};
    };
    int max_shift_ = 0;
    std::vector<Plane> planes_;
};

/// Masked fractional Hamming distance, minimised over column shifts of the
/// query in [-max_shift, max_shift]. Throws IncomparableError when the joint
/// mask is empty at every shift.
double hamming_distance(const IrisCode& a, const IrisCode& b, int max_shift = kDefaultMaxShift);
/// Uses the shifts precomputed in `query`; `enrolled` contributes its unshifted plane.
double hamming_distance(const PackedCode& query, const PackedCode& enrolled);

struct VerificationResult {
    double eer = 0.0;
    double threshold_at_eer = 0.0;
    std::size_t genuine_count = 0;
    std::size_t impostor_count = 0;
};

/// Lower scores mean more similar. Over the merged sorted score set,
/// FAR(t) = share of impostor scores < t and FRR(t) = share of genuine
/// scores > t. The EER is read where FAR - FRR first reaches zero, with
/// linear interpolation between the two thresholds bracketing a sign change.
VerificationResult compute_eer(std::span<const double> genuine, std::span<const double> impostor);

/// One annotated eye image.
struct IrisSample {
    std::string image_id;
    std::string eye_id;
    Image image;
    SegmentationAnnotation annotation;
};

struct VerificationOptions {
    double target_sclera_radius = kDefaultScleraRadius;
    int max_shift = kDefaultMaxShift;
    LogGaborParams log_gabor;
};

struct ScoreRecord {
    std::string query_id;
    std::string enrolled_id;
    bool genuine = false;
    double score = 0.0;
};

struct VerificationRun {
    VerificationResult result;
    std::vector<ScoreRecord> scores;
    std::vector<std::string> dropped;
};

/// Maps a preprocessed 231x231 HR crop to its reconstruction (degradation plus
/// super-resolution). The identity gives the unscaled baseline.
using Reconstructor = std::function<Image(const Image&)>;

/// Scenario 1: enrolled codes from HR crops, queries from reconstructions.
/// Scenario 2: both sides from reconstructions. Every ordered pair of distinct
/// images is scored; same eye_id means genuine. Images discarded by
/// preprocessing are dropped from both sides and listed in `dropped`.
VerificationRun run_verification(int scenario, std::span<const IrisSample> samples, const Reconstructor& reconstruct,
                                 const VerificationOptions& options = {});

/// Score dump CSV: query_id,enrolled_id,label,score.
void write_scores_csv(std::ostream& out, std::span<const ScoreRecord> scores);

} // namespace irissr

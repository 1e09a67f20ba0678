#pragma once

#include "irissr/iris.hpp"
#include "irissr/sae.hpp"
#include "irissr/srcnn.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace irissr {

enum class Split { train, test };

const char* to_string(Split s);

struct CorpusEntry {
    std::string image_id;
    std::filesystem::path path;
    SegmentationAnnotation annotation;
    /// Each eye is its own identity, so user_id == eye_id.
    std::string user_id;
    std::string eye_id;
    Split split = Split::train;
};

struct Reject {
    std::string image_id;
    std::string reason;
};

struct Corpus {
    std::vector<CorpusEntry> entries;
    std::vector<Reject> rejects;

    /// Throws ValidationError on duplicate image ids or a user in both splits.
    void validate() const;
    std::vector<const CorpusEntry*> split(Split s) const;
    std::size_t user_count(Split s) const;
};

inline constexpr double kDefaultTrainUserFraction = 0.47;

struct IngestOptions {
    double train_user_fraction = kDefaultTrainUserFraction;
    /// Decode every listed image during ingest (unreadable files become rejects).
    bool check_decode = true;
};

/// Reads the annotation CSV (image_id, pupil_cx, pupil_cy, pupil_r, sclera_cx,
/// sclera_cy, sclera_r, optional eye_id and split columns) and locates each
/// image under `root_dir`, either at root_dir/image_id or as any file whose
/// stem equals image_id. Without an eye_id column the id is taken from a
/// CASIA-style name (S1001L01 -> S1001L) or else from the parent directory.
/// Without a split column users are sorted lexicographically and the first
/// floor(fraction * users) go to training. Missing or unreadable images are
/// listed in `rejects`; malformed rows and duplicate ids throw ValidationError.
Corpus ingest(const std::filesystem::path& root_dir, const std::filesystem::path& annotation_file,
              const IngestOptions& options = {});

/// Reassigns splits by sorted user order.
void assign_split(Corpus& corpus, double train_user_fraction);

void write_rejects_csv(std::ostream& out, const Corpus& corpus);

IrisSample load_sample(const CorpusEntry& entry);

inline constexpr const char* kMethodNames[] = {"bilinear", "bicubic", "srcnn-fs", "srcnn-tl", "srcnn-ft", "sae"};

bool is_learned_method(const std::string& method);

enum class Region { full, strip };

struct ExperimentConfig {
    std::vector<std::string> methods{"bilinear", "bicubic"};
    std::vector<int> factors{2, 4, 8, 16};
    /// Training factors of the learned models; one table column per entry.
    std::vector<int> train_factors{2};
    std::vector<int> scenarios{1, 2};
    std::vector<Region> regions{Region::full, Region::strip};
    /// Adds the unscaled factor-1 rows to recognition reports.
    bool include_control = true;
    std::uint64_t seed = 0;
    /// Worker threads for independent cells; 1 runs everything in order.
    int threads = 1;
    double train_user_fraction = kDefaultTrainUserFraction;

    int patch_stride = 14;
    /// Cap on training pairs after a seeded shuffle (0 keeps all).
    std::size_t max_train_pairs = 0;
    /// Train missing FS/FT/SAE models from the training split; otherwise a
    /// learned method without weights throws MissingWeightsError.
    bool train_missing = true;

    SrcnnTrainConfig srcnn;
    SrcnnInit srcnn_init;
    SaeTrainConfig sae_pretrain = SaeTrainConfig::desk_scale(5);
    SaeTrainConfig sae_fine_tune = SaeTrainConfig::desk_scale(30);
    int sae_stride = kDefaultSaeStride;

    VerificationOptions verification;

    /// Keys "<method>-x<factor>" for ready models, "base-x<factor>" for the
    /// foreign weights used by srcnn-tl and srcnn-ft.
    std::map<std::string, std::filesystem::path> weights;
    std::optional<std::filesystem::path> weights_out_dir;
    std::optional<std::filesystem::path> scores_dir;

    /// Throws ValidationError for empty method/factor lists, unknown names and
    /// unsupported factors.
    void validate() const;
};

/// INI file with [experiment], [srcnn], [sae], [iris] and [weights] sections.
/// Unknown keys are rejected.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(std::istream& in);

struct ReportRow {
    std::string method;
    std::optional<int> train_factor;
    int eval_factor = 0;
    std::string metric;
    std::optional<double> value;
};

struct ExperimentReport {
    std::vector<ReportRow> rows;

    const ReportRow* find(const std::string& method, std::optional<int> train_factor, int eval_factor,
                          const std::string& metric) const;
};

/// Header method,train_factor,eval_factor,metric,value; absent cells print "-".
void write_report_csv(std::ostream& out, const ExperimentReport& report);

/// Preprocessed training-split crops degraded by `factor` and cut into
/// patches at config.patch_stride, capped at config.max_train_pairs.
std::vector<TrainPair> training_pairs(const Corpus& corpus, const ExperimentConfig& config, int factor);

/// Trains or loads learned models on demand and keeps them for reuse.
class ModelStore {
public:
    ModelStore(const Corpus& corpus, const ExperimentConfig& config);

    const SrcnnModel& srcnn(Regime regime, int train_factor);
    const SaeModel& sae(int train_factor);

    /// Degrade-then-reconstruct for one method: the crop is degraded by
    /// eval_factor and handed to the method. Learned models cascade
    /// log2(eval) / log2(train) passes over the bicubic upscale.
    Image reconstruct(const std::string& method, std::optional<int> train_factor, int eval_factor, const Image& hr);

private:
    const std::vector<TrainPair>& pairs(int factor);
    std::optional<std::filesystem::path> weight_path(const std::string& key) const;

    const Corpus& corpus_;
    const ExperimentConfig& config_;
    std::mutex mutex_;
    std::map<int, std::vector<TrainPair>> pairs_;
    std::map<std::pair<Regime, int>, std::unique_ptr<SrcnnModel>> srcnn_;
    std::map<int, std::unique_ptr<SaeModel>> sae_;
};

/// Table cells for a method: a single column for interpolation, one per
/// training factor for learned methods. A cell whose evaluation factor cannot
/// be reached by whole passes of the model is absent.
struct Cell {
    std::string method;
    std::optional<int> train_factor;
    int eval_factor = 0;
    bool reachable = true;
};
std::vector<Cell> experiment_cells(const ExperimentConfig& config);

/// PSNR/SSIM/VIF averaged over the test split, on the 231x231 crops
/// ("psnr", ...) and on the unwrapped strips ("psnr_strip", ...).
ExperimentReport run_quality_experiment(const Corpus& corpus, const ExperimentConfig& config, ModelStore& models);
ExperimentReport run_quality_experiment(const Corpus& corpus, const ExperimentConfig& config);

/// EER in percent per cell and scenario ("eer_s1", "eer_s2"). The control
/// rows use method "none" at factor 1.
ExperimentReport run_recognition_experiment(const Corpus& corpus, const ExperimentConfig& config, ModelStore& models);
ExperimentReport run_recognition_experiment(const Corpus& corpus, const ExperimentConfig& config);

struct GradCheckRow {
    std::string network;
    nn::GradCheckResult result;
};

/// Gradient self-test of the default SRCNN on one 33x33 texture patch and of a
/// freshly stacked SAE on one 1089-vector, `samples` parameters each.
std::vector<GradCheckRow> run_gradcheck(std::size_t samples, double eps, std::uint64_t seed);

} // namespace irissr

#include "irissr/error.hpp"
#include "irissr/harness.hpp"
#include "irissr/image_io.hpp"
#include "irissr/synthetic.hpp"

#include <doctest.h>

#include <fstream>
#include <sstream>

using namespace irissr;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name)
{
    const auto dir = fs::temp_directory_path() / ("irissr_test_harness_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

// Cached 10-user corpus, one eye each, three captures per eye.
const fs::path& corpus_dir()
{
    static const fs::path dir = [] {
        const auto d = scratch_dir("corpus");
        write_synthetic_corpus(d, {10, 1, 3, 1});
        return d;
    }();
    return dir;
}

void write_text(const fs::path& p, const std::string& text)
{
    std::ofstream out(p);
    out << text;
}

ExperimentConfig bicubic_config()
{
    ExperimentConfig cfg;
    cfg.methods = {"bicubic"};
    cfg.factors = {2, 8};
    return cfg;
}

std::string csv_of(const ExperimentReport& r)
{
    std::ostringstream out;
    write_report_csv(out, r);
    return out.str();
}

} // namespace

TEST_CASE("ingest splits users by sorted order")
{
    const auto corpus = ingest(corpus_dir(), corpus_dir() / "annotations.csv");
    CHECK(corpus.entries.size() == 30);
    CHECK(corpus.rejects.empty());
    CHECK(corpus.user_count(Split::train) == 4);
    CHECK(corpus.user_count(Split::test) == 6);
    for (const auto* e : corpus.split(Split::train)) {
        CHECK(e->user_id <= "S1004L");
    }
    CHECK_NOTHROW(corpus.validate());
    CHECK(corpus.entries[0].user_id == corpus.entries[0].eye_id);
}

TEST_CASE("ingest infers eye ids and reports rejects")
{
    const auto dir = scratch_dir("infer");
    const auto eye = render_synthetic_eye(3);
    fs::create_directories(dir / "001" / "L");
    fs::create_directories(dir / "odd");
    write_image(dir / "001" / "L" / "S1001L01.png", eye.image);
    write_image(dir / "odd" / "capture7.png", eye.image);
    write_text(dir / "broken.png", "not an image");
    const auto& a = eye.annotation;
    std::ostringstream row;
    row << ',' << a.pupil.cx << ',' << a.pupil.cy << ',' << a.pupil.r << ',' << a.sclera.cx << ',' << a.sclera.cy
        << ',' << a.sclera.r << '\n';
    write_text(dir / "ann.csv", "image_id,pupil_cx,pupil_cy,pupil_r,sclera_cx,sclera_cy,sclera_r\n"
                                "S1001L01" + row.str() + "capture7" + row.str() + "missing01" + row.str() +
                                    "broken" + row.str());
    const auto corpus = ingest(dir, dir / "ann.csv");
    REQUIRE(corpus.entries.size() == 2);
    CHECK(corpus.entries[0].eye_id == "S1001L");
    CHECK(corpus.entries[1].eye_id == "odd");
    REQUIRE(corpus.rejects.size() == 2);
    CHECK(corpus.rejects[0].image_id == "missing01");
    CHECK(corpus.rejects[1].image_id == "broken");
    std::ostringstream rej;
    write_rejects_csv(rej, corpus);
    CHECK(rej.str().find("missing01,image not found") != std::string::npos);
}

TEST_CASE("ingest validation errors")
{
    const auto dir = scratch_dir("invalid");
    const auto eye = render_synthetic_eye(4);
    write_image(dir / "a1.png", eye.image);
    write_image(dir / "a2.png", eye.image);
    const std::string head = "image_id,pupil_cx,pupil_cy,pupil_r,sclera_cx,sclera_cy,sclera_r,eye_id,split\n";
    const std::string geom = ",160,140,35,160,140,95,";

    write_text(dir / "dup.csv", head + "a1" + geom + "E1,train\n" + "a1" + geom + "E1,train\n");
    try {
        ingest(dir, dir / "dup.csv");
        FAIL("duplicate id accepted");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("a1") != std::string::npos);
    }

    write_text(dir / "both.csv", head + "a1" + geom + "E1,train\n" + "a2" + geom + "E1,test\n");
    CHECK_THROWS_AS(ingest(dir, dir / "both.csv"), ValidationError);

    write_text(dir / "ok.csv", head + "a1" + geom + "E1,train\n" + "a2" + geom + "E2,test\n");
    const auto corpus = ingest(dir, dir / "ok.csv");
    CHECK(corpus.user_count(Split::train) == 1);
    CHECK(corpus.user_count(Split::test) == 1);

    write_text(dir / "short.csv", head + "a1,160,140\n");
    CHECK_THROWS_AS(ingest(dir, dir / "short.csv"), ValidationError);
    write_text(dir / "nan.csv", head + "a1,abc,140,35,160,140,95,E1,train\n");
    CHECK_THROWS_AS(ingest(dir, dir / "nan.csv"), ValidationError);
    write_text(dir / "nocol.csv", "image_id,pupil_cx\n");
    CHECK_THROWS_AS(ingest(dir, dir / "nocol.csv"), ValidationError);
    CHECK_THROWS_AS(ingest(dir, dir / "absent.csv"), ValidationError);
}

TEST_CASE("split assignment uses floor of the user fraction")
{
    auto corpus = ingest(corpus_dir(), corpus_dir() / "annotations.csv");
    assign_split(corpus, 0.5);
    CHECK(corpus.user_count(Split::train) == 5);
    assign_split(corpus, 0.0);
    CHECK(corpus.user_count(Split::train) == 0);
    assign_split(corpus, 0.19);
    CHECK(corpus.user_count(Split::train) == 1);
    CHECK_THROWS_AS(assign_split(corpus, 1.5), std::invalid_argument);
}

TEST_CASE("config parsing")
{
    std::istringstream ini(R"([experiment]
methods = bicubic, srcnn-fs, sae
factors = 2, 4
train_factors = 2
scenarios = 2
regions = strip
seed = 9
threads = 2
max_train_pairs = 500

[srcnn]
learning_rate = 0.01
iterations = 300
init = gaussian

[sae]
epochs = 12
pretrain_epochs = 3
stride = 5

[iris]
max_shift = 10
wavelength = 16

[weights]
base-x2 = /tmp/base.nnw
)");
    const auto cfg = parse_config(ini);
    CHECK(cfg.methods == std::vector<std::string>{"bicubic", "srcnn-fs", "sae"});
    CHECK(cfg.factors == std::vector<int>{2, 4});
    CHECK(cfg.scenarios == std::vector<int>{2});
    CHECK(cfg.regions == std::vector<Region>{Region::strip});
    CHECK(cfg.seed == 9);
    CHECK(cfg.srcnn.seed == 9);
    CHECK(cfg.threads == 2);
    CHECK(cfg.max_train_pairs == 500);
    CHECK(cfg.srcnn.sgd.learning_rate == 0.01);
    CHECK(cfg.srcnn.sgd.iterations == 300);
    CHECK(cfg.srcnn_init.scheme == SrcnnInit::Scheme::gaussian);
    CHECK(cfg.sae_fine_tune.epochs == 12);
    CHECK(cfg.sae_pretrain.epochs == 3);
    CHECK(cfg.sae_stride == 5);
    CHECK(cfg.verification.max_shift == 10);
    CHECK(cfg.verification.log_gabor.wavelength == 16);
    CHECK(cfg.weights.at("base-x2") == fs::path("/tmp/base.nnw"));

    auto parse = [](const std::string& text) {
        std::istringstream in(text);
        return parse_config(in);
    };
    CHECK_THROWS_AS(parse("[experiment]\nmethods =\n"), ValidationError);
    CHECK_THROWS_AS(parse("[experiment]\nfactors =\n"), ValidationError);
    CHECK_THROWS_AS(parse("[experiment]\nmethods = pca\n"), ValidationError);
    CHECK_THROWS_AS(parse("[experiment]\nfactors = 3\n"), ValidationError);
    CHECK_THROWS_AS(parse("[experiment]\nfactor = 2\n"), ValidationError);
    CHECK_THROWS_AS(parse("[extra]\nx = 1\n"), ValidationError);
    CHECK_THROWS_AS(parse("[srcnn]\nbatch_size = 0\n"), ValidationError);
    CHECK_NOTHROW(parse(""));
}

TEST_CASE("cells mark unreachable factor combinations absent")
{
    ExperimentConfig cfg;
    cfg.methods = {"bicubic", "srcnn-fs"};
    cfg.factors = {2, 4, 8, 16};
    cfg.train_factors = {2, 4};
    const auto cells = experiment_cells(cfg);
    CHECK(cells.size() == 12);
    int absent = 0;
    for (const auto& c : cells) {
        if (!c.reachable) {
            ++absent;
            CHECK(c.method == "srcnn-fs");
            CHECK(*c.train_factor == 4);
        }
    }
    // Factor-4 models cannot reach 2 or 8 with whole passes.
    CHECK(absent == 2);
}

TEST_CASE("bicubic quality run needs no training")
{
    const auto corpus = ingest(corpus_dir(), corpus_dir() / "annotations.csv");
    const auto report = run_quality_experiment(corpus, bicubic_config());
    CHECK(report.rows.size() == 2 * 6);
    for (const char* m : {"psnr", "ssim", "vif", "psnr_strip", "ssim_strip", "vif_strip"}) {
        for (int f : {2, 8}) {
            const auto* row = report.find("bicubic", std::nullopt, f, m);
            REQUIRE(row != nullptr);
            REQUIRE(row->value.has_value());
        }
    }
    CHECK(report.find("bicubic", std::nullopt, 2, "psnr")->value > report.find("bicubic", std::nullopt, 8, "psnr")->value);
    CHECK(report.find("bicubic", std::nullopt, 2, "ssim")->value > report.find("bicubic", std::nullopt, 8, "ssim")->value);
    const auto csv = csv_of(report);
    CHECK(csv.rfind("method,train_factor,eval_factor,metric,value\nbicubic,-,2,psnr,", 0) == 0);

    auto parallel = bicubic_config();
    parallel.threads = 3;
    CHECK(csv_of(run_quality_experiment(corpus, parallel)) == csv);
}

TEST_CASE("learned methods without weights")
{
    const auto corpus = ingest(corpus_dir(), corpus_dir() / "annotations.csv");
    auto cfg = bicubic_config();
    cfg.methods = {"srcnn-tl"};
    CHECK_THROWS_AS(run_quality_experiment(corpus, cfg), MissingWeightsError);
    cfg.methods = {"srcnn-ft"};
    CHECK_THROWS_AS(run_quality_experiment(corpus, cfg), MissingWeightsError);
    cfg.methods = {"srcnn-fs"};
    cfg.train_missing = false;
    CHECK_THROWS_AS(run_quality_experiment(corpus, cfg), MissingWeightsError);
    cfg.methods = {"sae"};
    CHECK_THROWS_AS(run_recognition_experiment(corpus, cfg), MissingWeightsError);
}

TEST_CASE("learned methods train, save and reload")
{
    auto corpus = ingest(corpus_dir(), corpus_dir() / "annotations.csv");
    assign_split(corpus, 0.8);
    const auto out = scratch_dir("weights");
    auto cfg = bicubic_config();
    cfg.methods = {"srcnn-fs", "srcnn-tl", "srcnn-ft"};
    cfg.factors = {2};
    cfg.train_factors = {2, 4};
    cfg.regions = {Region::full};
    cfg.srcnn.sgd.iterations = 10;
    cfg.max_train_pairs = 64;
    cfg.weights_out_dir = out;
    // Foreign weights for TL/FT: an untrained model stands in.
    save_srcnn(build_default_srcnn(2, 5), out / "base2.nnw");
    save_srcnn(build_default_srcnn(4, 6), out / "base4.nnw");
    cfg.weights["base-x2"] = out / "base2.nnw";
    cfg.weights["base-x4"] = out / "base4.nnw";

    const auto report = run_quality_experiment(corpus, cfg);
    CHECK(fs::exists(out / "srcnn-fs-x2.nnw"));
    CHECK(fs::exists(out / "srcnn-ft-x2.nnw"));
    CHECK_FALSE(fs::exists(out / "srcnn-fs-x4.nnw"));
    CHECK_FALSE(fs::exists(out / "srcnn-tl-x2.nnw"));
    const auto* absent = report.find("srcnn-fs", 4, 2, "psnr");
    REQUIRE(absent != nullptr);
    CHECK_FALSE(absent->value.has_value());
    CHECK(csv_of(report).find("srcnn-fs,4,2,psnr,-\n") != std::string::npos);
    REQUIRE(report.find("srcnn-ft", 2, 2, "psnr")->value.has_value());

    auto reload = cfg;
    reload.weights_out_dir.reset();
    reload.train_missing = false;
    for (const char* m : {"srcnn-fs", "srcnn-ft"}) {
        for (int f : {2}) {
            const std::string key = std::string(m) + "-x" + std::to_string(f);
            reload.weights[key] = out / (key + ".nnw");
        }
    }
    CHECK(csv_of(run_quality_experiment(corpus, reload)) == csv_of(report));
}

TEST_CASE("recognition experiment")
{
    const auto corpus = ingest(corpus_dir(), corpus_dir() / "annotations.csv");
    auto cfg = bicubic_config();
    cfg.factors = {2, 8};
    const auto report = run_recognition_experiment(corpus, cfg);
    CHECK(report.rows.size() == 2 + 2 * 2);

    std::vector<IrisSample> samples;
    for (const auto* e : corpus.split(Split::test)) {
        samples.push_back(load_sample(*e));
    }
    const auto baseline = run_verification(1, samples, [](const Image& x) { return x; });
    const auto* control = report.find("none", std::nullopt, 1, "eer_s1");
    REQUIRE(control != nullptr);
    CHECK(*control->value == doctest::Approx(100.0 * baseline.result.eer));
    const auto* control2 = report.find("none", std::nullopt, 1, "eer_s2");
    CHECK(*control2->value == *control->value);

    const double f2 = *report.find("bicubic", std::nullopt, 2, "eer_s2")->value;
    const double f8 = *report.find("bicubic", std::nullopt, 8, "eer_s2")->value;
    MESSAGE("scenario 2 EER x2 " << f2 << " x8 " << f8);
    CHECK(f2 <= f8);

    const auto scores = scratch_dir("scores");
    cfg.scores_dir = scores;
    cfg.include_control = false;
    cfg.scenarios = {1};
    cfg.factors = {2};
    const auto small = run_recognition_experiment(corpus, cfg);
    CHECK(small.rows.size() == 1);
    CHECK(fs::exists(scores / "bicubic_f2_s1.csv"));
}

// irissr: train, super-resolve, and evaluate iris super-resolution methods.

#include "irissr/error.hpp"
#include "irissr/harness.hpp"
#include "irissr/image_io.hpp"
#include "irissr/quality.hpp"
#include "irissr/synthetic.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

using namespace irissr;
namespace fs = std::filesystem;

namespace {

struct CorpusArgs {
    fs::path root;
    fs::path annotations;
    std::optional<fs::path> config;
    std::optional<fs::path> rejects;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    bool deterministic = false;
};

void add_corpus_options(CLI::App* cmd, CorpusArgs& a)
{
    cmd->add_option("--corpus", a.root, "Image root directory")->required()->check(CLI::ExistingDirectory);
    cmd->add_option("--annotations", a.annotations, "Annotation CSV")->required()->check(CLI::ExistingFile);
    cmd->add_option("--config", a.config, "Experiment INI file")->check(CLI::ExistingFile);
    cmd->add_option("--rejects", a.rejects, "Write rejected images to this CSV");
    cmd->add_option("--seed", a.seed, "Seed for every random choice");
    cmd->add_option("--threads", a.threads, "Worker threads for independent cells");
    cmd->add_flag("--deterministic", a.deterministic, "Serialise all work");
}

ExperimentConfig load(const CorpusArgs& a)
{
    ExperimentConfig cfg = a.config ? load_config(*a.config) : ExperimentConfig{};
    if (a.seed) {
        cfg.seed = *a.seed;
        cfg.srcnn.seed = *a.seed;
        cfg.sae_pretrain.seed = *a.seed;
        cfg.sae_fine_tune.seed = *a.seed + 1;
    }
    if (a.threads) {
        cfg.threads = *a.threads;
    }
    if (a.deterministic) {
        cfg.threads = 1;
    }
    cfg.validate();
    return cfg;
}

Corpus open_corpus(const CorpusArgs& a, const ExperimentConfig& cfg)
{
    IngestOptions opt;
    opt.train_user_fraction = cfg.train_user_fraction;
    auto corpus = ingest(a.root, a.annotations, opt);
    if (a.rejects) {
        std::ofstream out(*a.rejects);
        write_rejects_csv(out, corpus);
    }
    std::cerr << "corpus: " << corpus.entries.size() << " images, " << corpus.user_count(Split::train)
              << " train users, " << corpus.user_count(Split::test) << " test users, " << corpus.rejects.size()
              << " rejected\n";
    return corpus;
}

// Writes to the file when given, else stdout.
template <typename Fn>
void emit(const std::optional<fs::path>& path, Fn fn)
{
    if (path) {
        std::ofstream out(*path);
        if (!out) {
            throw ValidationError("cannot write " + path->string());
        }
        fn(out);
    } else {
        fn(std::cout);
    }
}

int run_train(const CorpusArgs& a, const std::string& method, int factor, const fs::path& out,
              const std::optional<fs::path>& base, const std::optional<fs::path>& log)
{
    const auto cfg = load(a);
    const auto corpus = open_corpus(a, cfg);
    if (method == "sae") {
        const auto pairs = training_pairs(corpus, cfg, factor);
        std::vector<std::vector<float>> inputs;
        for (const auto& p : pairs) {
            inputs.push_back(p.input);
        }
        std::cerr << "sae: pretraining on " << pairs.size() << " patches\n";
        const auto layers = pretrain_stack(inputs, cfg.sae_pretrain);
        std::vector<double> mse;
        auto model = stack_and_fine_tune(layers, pairs, cfg.sae_fine_tune, &mse);
        model.trained_factor = factor;
        save_sae(model, out);
        emit(log, [&](std::ostream& os) {
            os << "epoch,mse\n";
            for (std::size_t i = 0; i < mse.size(); ++i) {
                os << i + 1 << ',' << format_metric(mse[i]) << '\n';
            }
        });
        return 0;
    }
    TrainRegime regime;
    regime.mode = regime_from_string(method.substr(std::string("srcnn-").size()));
    regime.factor = factor;
    regime.config = cfg.srcnn;
    if (regime.mode != Regime::from_scratch) {
        if (!base) {
            throw MissingWeightsError(method + " needs --base weights");
        }
        regime.base_weights = base;
    }
    std::vector<TrainPair> pairs;
    if (regime.mode != Regime::transfer) {
        pairs = training_pairs(corpus, cfg, factor);
        std::cerr << method << ": training on " << pairs.size() << " patches\n";
    }
    const auto result = train_srcnn(build_default_srcnn(factor, cfg.seed, cfg.srcnn_init), pairs, regime);
    save_srcnn(result.model, out);
    emit(log, [&](std::ostream& os) {
        os << "iteration,mse\n";
        for (const auto& r : result.history) {
            os << r.iteration << ',' << format_metric(r.mean_mse) << '\n';
        }
    });
    return 0;
}

struct SrArgs {
    std::string method = "bicubic";
    std::optional<fs::path> weights;
    int trained_factor = 2;
    int factor = 2;
    fs::path in;
    fs::path out;
    bool degrade_first = false;
    int sae_stride = kDefaultSaeStride;
};

int run_sr(const SrArgs& a)
{
    const Image input = read_image(a.in);
    const Image lr = a.degrade_first ? downscale(input, a.factor) : input;
    CascadeStats stats;
    Image sr;
    if (a.method == "bilinear" || a.method == "bicubic") {
        sr = resize(lr, lr.width * a.factor, lr.height * a.factor,
                    a.method == "bilinear" ? Kernel::bilinear : Kernel::bicubic);
    } else {
        if (!a.weights) {
            throw MissingWeightsError(a.method + " needs --weights");
        }
        if (a.method == "srcnn") {
            const auto model = load_srcnn(*a.weights, a.trained_factor, Provenance::scratch);
            sr = super_resolve(lr, a.factor, model, &stats);
        } else {
            const auto model = load_sae(*a.weights, a.trained_factor);
            sr = super_resolve_sae(lr, a.factor, model, a.sae_stride, &stats);
        }
    }
    write_image(a.out, sr);
    std::cout << "input,output,method,factor,passes,width,height";
    const bool scored = a.degrade_first && sr.width == input.width && sr.height == input.height;
    std::cout << (scored ? ",psnr,ssim,vif\n" : "\n");
    std::cout << a.in.string() << ',' << a.out.string() << ',' << a.method << ',' << a.factor << ',' << stats.passes
              << ',' << sr.width << ',' << sr.height;
    if (scored) {
        const auto q = score_all(input, sr);
        std::cout << ',' << format_metric(q.psnr) << ',' << format_metric(q.ssim) << ',' << format_metric(q.vif);
    }
    std::cout << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Iris super-resolution toolkit"};
    app.require_subcommand(1);

    CorpusArgs train_args;
    std::string train_method;
    int train_factor = 2;
    fs::path train_out;
    std::optional<fs::path> train_base;
    std::optional<fs::path> train_log;
    auto* train = app.add_subcommand("train", "Train a learned method on the corpus training split");
    add_corpus_options(train, train_args);
    train->add_option("--method", train_method, "srcnn-fs, srcnn-tl, srcnn-ft or sae")
        ->required()
        ->check(CLI::IsMember({"srcnn-fs", "srcnn-tl", "srcnn-ft", "sae"}));
    train->add_option("--factor", train_factor, "Training factor")->check(CLI::IsMember({2, 4, 8, 16}));
    train->add_option("--out", train_out, "Output weight file")->required();
    train->add_option("--base", train_base, "Foreign weights for transfer and fine-tuning")->check(CLI::ExistingFile);
    train->add_option("--log", train_log, "Loss history CSV (default stdout)");

    SrArgs sr_args;
    auto* sr = app.add_subcommand("sr", "Super-resolve one image");
    sr->add_option("--method", sr_args.method, "bilinear, bicubic, srcnn or sae")
        ->check(CLI::IsMember({"bilinear", "bicubic", "srcnn", "sae"}));
    sr->add_option("--weights", sr_args.weights, "Weight file for srcnn or sae")->check(CLI::ExistingFile);
    sr->add_option("--trained-factor", sr_args.trained_factor, "Factor the model was trained at")
        ->check(CLI::IsMember({2, 4, 8, 16}));
    sr->add_option("--factor", sr_args.factor, "Upscaling factor")->check(CLI::IsMember({2, 4, 8, 16}));
    sr->add_option("--in", sr_args.in, "Input image")->required()->check(CLI::ExistingFile);
    sr->add_option("--out", sr_args.out, "Output image")->required();
    sr->add_flag("--degrade", sr_args.degrade_first, "Treat the input as HR: downscale first and score the result");
    sr->add_option("--sae-stride", sr_args.sae_stride, "Patch stride for sae");

    CorpusArgs quality_args;
    std::optional<fs::path> quality_out;
    auto* quality = app.add_subcommand("quality", "Image quality of each method and factor on the test split");
    add_corpus_options(quality, quality_args);
    quality->add_option("--out", quality_out, "Report CSV (default stdout)");

    CorpusArgs verify_args;
    std::optional<fs::path> verify_out;
    std::optional<fs::path> verify_scores;
    auto* verify = app.add_subcommand("verify", "Verification EER of each method, factor and scenario");
    add_corpus_options(verify, verify_args);
    verify->add_option("--out", verify_out, "Report CSV (default stdout)");
    verify->add_option("--scores-dir", verify_scores, "Write per-cell score CSVs here");

    fs::path synth_out;
    SyntheticCorpusSpec synth_spec;
    auto* synth = app.add_subcommand("synth", "Render a synthetic annotated eye corpus");
    synth->add_option("--out", synth_out, "Output directory")->required();
    synth->add_option("--users", synth_spec.users, "Number of users");
    synth->add_option("--eyes", synth_spec.eyes_per_user, "Eyes per user (1 or 2)");
    synth->add_option("--images", synth_spec.images_per_eye, "Captures per eye");
    synth->add_option("--seed", synth_spec.seed, "Seed");

    std::size_t gc_samples = 200;
    double gc_eps = 1e-4;
    double gc_tolerance = 1e-3;
    std::uint64_t gc_seed = 1;
    auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of SRCNN and SAE gradients");
    gradcheck->add_option("--samples", gc_samples, "Parameters checked per network");
    gradcheck->add_option("--eps", gc_eps, "Finite-difference step");
    gradcheck->add_option("--tolerance", gc_tolerance, "Largest accepted relative error");
    gradcheck->add_option("--seed", gc_seed, "Seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*train) {
            return run_train(train_args, train_method, train_factor, train_out, train_base, train_log);
        }
        if (*sr) {
            return run_sr(sr_args);
        }
        if (*quality) {
            const auto cfg = load(quality_args);
            const auto corpus = open_corpus(quality_args, cfg);
            const auto report = run_quality_experiment(corpus, cfg);
            emit(quality_out, [&](std::ostream& os) { write_report_csv(os, report); });
            return 0;
        }
        if (*verify) {
            auto cfg = load(verify_args);
            if (verify_scores) {
                cfg.scores_dir = verify_scores;
            }
            const auto corpus = open_corpus(verify_args, cfg);
            const auto report = run_recognition_experiment(corpus, cfg);
            emit(verify_out, [&](std::ostream& os) { write_report_csv(os, report); });
            return 0;
        }
        if (*synth) {
            const auto csv = write_synthetic_corpus(synth_out, synth_spec);
            std::cout << "annotations,images\n"
                      << csv.string() << ',' << synth_spec.users * synth_spec.eyes_per_user * synth_spec.images_per_eye
                      << '\n';
            return 0;
        }
        if (*gradcheck) {
            const auto rows = run_gradcheck(gc_samples, gc_eps, gc_seed);
            bool ok = true;
            std::cout << "network,checked,skipped_kinks,max_relative_error,status\n";
            for (const auto& r : rows) {
                const bool pass = r.result.max_relative_error <= gc_tolerance && r.result.checked > 0;
                ok = ok && pass;
                std::cout << r.network << ',' << r.result.checked << ',' << r.result.skipped_kinks << ','
                          << r.result.max_relative_error << ',' << (pass ? "pass" : "fail") << '\n';
            }
            return ok ? 0 : 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}

#include "irissr/harness.hpp"

#include "irissr/error.hpp"
#include "irissr/image_io.hpp"
#include "irissr/quality.hpp"
#include "irissr/synthetic.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <random>
#include <regex>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_map>

namespace irissr {

namespace {

std::string trim(std::string s)
{
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, sep)) {
        out.push_back(trim(item));
    }
    if (!s.empty() && s.back() == sep) {
        out.emplace_back();
    }
    return out;
}

double parse_double(const std::string& s, const std::string& what)
{
    double v = 0.0;
    const auto t = trim(s);
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || ptr != t.data() + t.size() || t.empty()) {
        throw ValidationError(what + ": not a number: '" + s + "'");
    }
    return v;
}

long long parse_int(const std::string& s, const std::string& what)
{
    long long v = 0;
    const auto t = trim(s);
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || ptr != t.data() + t.size() || t.empty()) {
        throw ValidationError(what + ": not an integer: '" + s + "'");
    }
    return v;
}

bool parse_bool(const std::string& s, const std::string& what)
{
    std::string t = trim(s);
    std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
    if (t == "true" || t == "1" || t == "yes" || t == "on") {
        return true;
    }
    if (t == "false" || t == "0" || t == "no" || t == "off") {
        return false;
    }
    throw ValidationError(what + ": not a boolean: '" + s + "'");
}

std::string infer_eye_id(const std::string& image_id, const std::filesystem::path& path)
{
    static const std::regex casia(R"((S\d{4}[LR])\d*)");
    std::smatch m;
    const std::string stem = std::filesystem::path(image_id).stem().string();
    if (std::regex_match(stem, m, casia)) {
        return m[1].str();
    }
    if (!path.empty() && path.has_parent_path()) {
        return path.parent_path().filename().string();
    }
    return stem;
}

bool is_image_file(const std::filesystem::path& p)
{
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

double mean(const std::vector<double>& v)
{
    double s = 0.0;
    for (double x : v) {
        s += x;
    }
    return v.empty() ? std::nan("") : s / static_cast<double>(v.size());
}

// Runs fn(i) for i in [0, n) on `threads` workers; the first exception is rethrown.
template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn fn)
{
    if (threads <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::jthread> pool;
    const auto workers = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) {
                        error = std::current_exception();
                    }
                }
            }
        });
    }
    pool.clear();
    if (error) {
        std::rethrow_exception(error);
    }
}

Regime regime_of(const std::string& method)
{
    if (method == "srcnn-fs") {
        return Regime::from_scratch;
    }
    if (method == "srcnn-tl") {
        return Regime::transfer;
    }
    return Regime::fine_tune;
}

} // namespace

const char* to_string(Split s) { return s == Split::train ? "train" : "test"; }

void Corpus::validate() const
{
    std::set<std::string> ids;
    std::map<std::string, Split> user_split;
    for (const auto& e : entries) {
        if (!ids.insert(e.image_id).second) {
            throw ValidationError("duplicate image id '" + e.image_id + "'");
        }
        const auto [it, inserted] = user_split.emplace(e.user_id, e.split);
        if (!inserted && it->second != e.split) {
            throw ValidationError("user '" + e.user_id + "' appears in both the train and test splits");
        }
    }
}

std::vector<const CorpusEntry*> Corpus::split(Split s) const
{
    std::vector<const CorpusEntry*> out;
    for (const auto& e : entries) {
        if (e.split == s) {
            out.push_back(&e);
        }
    }
    return out;
}

std::size_t Corpus::user_count(Split s) const
{
    std::set<std::string> users;
    for (const auto& e : entries) {
        if (e.split == s) {
            users.insert(e.user_id);
        }
    }
    return users.size();
}

void assign_split(Corpus& corpus, double train_user_fraction)
{
    if (!(train_user_fraction >= 0.0 && train_user_fraction <= 1.0)) {
        throw std::invalid_argument("train user fraction must lie in [0, 1]");
    }
    std::set<std::string> users;
    for (const auto& e : corpus.entries) {
        users.insert(e.user_id);
    }
    const auto n_train = static_cast<std::size_t>(std::floor(train_user_fraction * static_cast<double>(users.size())));
    std::set<std::string> train;
    for (const auto& u : users) {
        if (train.size() == n_train) {
            break;
        }
        train.insert(u);
    }
    for (auto& e : corpus.entries) {
        e.split = train.count(e.user_id) ? Split::train : Split::test;
    }
}

Corpus ingest(const std::filesystem::path& root_dir, const std::filesystem::path& annotation_file,
              const IngestOptions& options)
{
    std::ifstream in(annotation_file);
    if (!in) {
        throw ValidationError("cannot open annotation file " + annotation_file.string());
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw ValidationError("annotation file is empty: " + annotation_file.string());
    }
    const auto header = split_list(line, ',');
    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i) {
        col[header[i]] = i;
    }
    for (const char* required :
         {"image_id", "pupil_cx", "pupil_cy", "pupil_r", "sclera_cx", "sclera_cy", "sclera_r"}) {
        if (!col.count(required)) {
            throw ValidationError(std::string("annotation file lacks column '") + required + "'");
        }
    }
    const bool has_eye = col.count("eye_id") > 0;
    const bool has_split = col.count("split") > 0;

    std::unordered_map<std::string, std::filesystem::path> by_stem;
    if (std::filesystem::is_directory(root_dir)) {
        for (const auto& de : std::filesystem::recursive_directory_iterator(root_dir)) {
            if (de.is_regular_file() && is_image_file(de.path())) {
                by_stem.emplace(de.path().stem().string(), de.path());
            }
        }
    }

    Corpus corpus;
    std::set<std::string> seen;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        const auto cells = split_list(line, ',');
        if (cells.size() != header.size()) {
            throw ValidationError("annotation line " + std::to_string(line_no) + " has " +
                                  std::to_string(cells.size()) + " fields, expected " + std::to_string(header.size()));
        }
        const std::string where = "annotation line " + std::to_string(line_no);
        CorpusEntry e;
        e.image_id = cells[col["image_id"]];
        if (e.image_id.empty()) {
            throw ValidationError(where + ": empty image_id");
        }
        if (!seen.insert(e.image_id).second) {
            throw ValidationError("duplicate image id '" + e.image_id + "' in " + annotation_file.string());
        }
        auto num = [&](const char* name) { return parse_double(cells[col[name]], where + " " + name); };
        e.annotation.pupil = {num("pupil_cx"), num("pupil_cy"), num("pupil_r")};
        e.annotation.sclera = {num("sclera_cx"), num("sclera_cy"), num("sclera_r")};

        if (std::filesystem::is_regular_file(root_dir / e.image_id)) {
            e.path = root_dir / e.image_id;
        } else if (auto it = by_stem.find(std::filesystem::path(e.image_id).stem().string()); it != by_stem.end()) {
            e.path = it->second;
        } else {
            corpus.rejects.push_back({e.image_id, "image not found"});
            continue;
        }
        try {
            e.annotation.validate();
        } catch (const InvalidAnnotationError& err) {
            corpus.rejects.push_back({e.image_id, err.what()});
            continue;
        }
        if (options.check_decode) {
            try {
                (void)read_image(e.path);
            } catch (const std::exception& err) {
                corpus.rejects.push_back({e.image_id, std::string("unreadable image: ") + err.what()});
                continue;
            }
        }
        e.eye_id = has_eye && !cells[col["eye_id"]].empty()
                       ? cells[col["eye_id"]]
                       : infer_eye_id(e.image_id, std::filesystem::relative(e.path, root_dir));
        e.user_id = e.eye_id;
        if (has_split) {
            const auto& s = cells[col["split"]];
            if (s == "train") {
                e.split = Split::train;
            } else if (s == "test") {
                e.split = Split::test;
            } else {
                throw ValidationError(where + ": split must be 'train' or 'test', got '" + s + "'");
            }
        }
        corpus.entries.push_back(std::move(e));
    }
    if (!has_split) {
        assign_split(corpus, options.train_user_fraction);
    }
    corpus.validate();
    for (const auto& r : corpus.rejects) {
        std::cerr << "warning: rejected " << r.image_id << ": " << r.reason << '\n';
    }
    return corpus;
}

void write_rejects_csv(std::ostream& out, const Corpus& corpus)
{
    out << "image_id,reason\n";
    for (const auto& r : corpus.rejects) {
        std::string reason = r.reason;
        std::replace(reason.begin(), reason.end(), ',', ';');
        out << r.image_id << ',' << reason << '\n';
    }
}

IrisSample load_sample(const CorpusEntry& entry)
{
    return {entry.image_id, entry.eye_id, read_image(entry.path), entry.annotation};
}

bool is_learned_method(const std::string& method)
{
    return method == "srcnn-fs" || method == "srcnn-tl" || method == "srcnn-ft" || method == "sae";
}

void ExperimentConfig::validate() const
{
    if (methods.empty()) {
        throw ValidationError("config needs at least one method");
    }
    if (factors.empty()) {
        throw ValidationError("config needs at least one factor");
    }
    for (const auto& m : methods) {
        if (std::find(std::begin(kMethodNames), std::end(kMethodNames), m) == std::end(kMethodNames)) {
            throw ValidationError("unknown method '" + m + "'");
        }
    }
    for (int f : factors) {
        if (!is_supported_factor(f)) {
            throw ValidationError("unsupported factor " + std::to_string(f) + " (use 2, 4, 8 or 16)");
        }
    }
    for (int f : train_factors) {
        if (!is_supported_factor(f)) {
            throw ValidationError("unsupported training factor " + std::to_string(f));
        }
    }
    if (train_factors.empty() &&
        std::any_of(methods.begin(), methods.end(), [](const auto& m) { return is_learned_method(m); })) {
        throw ValidationError("learned methods need at least one training factor");
    }
    for (int s : scenarios) {
        if (s != 1 && s != 2) {
            throw ValidationError("scenario must be 1 or 2");
        }
    }
    if (threads < 1) {
        throw ValidationError("threads must be >= 1");
    }
    if (!(train_user_fraction >= 0.0 && train_user_fraction <= 1.0)) {
        throw ValidationError("train_user_fraction must lie in [0, 1]");
    }
    if (patch_stride < 1 || sae_stride < 1) {
        throw ValidationError("strides must be >= 1");
    }
    try {
        srcnn.sgd.validate();
        sae_pretrain.validate();
        sae_fine_tune.validate();
    } catch (const std::invalid_argument& e) {
        throw ValidationError(e.what());
    }
}

ExperimentConfig parse_config(std::istream& in)
{
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ValidationError(std::string("config: ") + e.what());
    }
    ExperimentConfig cfg;
    auto int_list = [](const std::string& v, const std::string& what) {
        std::vector<int> out;
        for (const auto& s : split_list(v, ',')) {
            out.push_back(static_cast<int>(parse_int(s, what)));
        }
        return out;
    };
    auto activation = [](const std::string& v, const std::string& what) {
        if (v == "sigmoid") {
            return nn::Activation::sigmoid;
        }
        if (v == "relu") {
            return nn::Activation::relu;
        }
        if (v == "linear") {
            return nn::Activation::linear;
        }
        throw ValidationError(what + ": unknown activation '" + v + "'");
    };
    auto sae_key = [&](SaeTrainConfig& c, const std::string& k, const std::string& v, const std::string& what) {
        if (k == "learning_rate") {
            c.learning_rate = parse_double(v, what);
        } else if (k == "epochs") {
            c.epochs = static_cast<int>(parse_int(v, what));
        } else if (k == "batch_size") {
            c.batch_size = static_cast<int>(parse_int(v, what));
        } else if (k == "momentum") {
            c.momentum = parse_double(v, what);
        } else if (k == "min_relative_improvement") {
            c.min_relative_improvement = parse_double(v, what);
        } else if (k == "hidden_activation") {
            c.hidden_activation = activation(v, what);
        } else if (k == "decoder_activation") {
            c.decoder_activation = activation(v, what);
        } else if (k == "output_activation") {
            c.output_activation = activation(v, what);
        } else {
            return false;
        }
        return true;
    };

    for (const auto& [section, body] : tree) {
        for (const auto& [key, node] : body) {
            const std::string v = trim(node.data());
            const std::string what = "config [" + section + "] " + key;
            bool known = true;
            if (section == "experiment") {
                if (key == "methods") {
                    cfg.methods = split_list(v, ',');
                } else if (key == "factors") {
                    cfg.factors = int_list(v, what);
                } else if (key == "train_factors") {
                    cfg.train_factors = int_list(v, what);
                } else if (key == "scenarios") {
                    cfg.scenarios = int_list(v, what);
                } else if (key == "regions") {
                    cfg.regions.clear();
                    for (const auto& r : split_list(v, ',')) {
                        if (r == "full") {
                            cfg.regions.push_back(Region::full);
                        } else if (r == "strip") {
                            cfg.regions.push_back(Region::strip);
                        } else {
                            throw ValidationError(what + ": unknown region '" + r + "'");
                        }
                    }
                } else if (key == "include_control") {
                    cfg.include_control = parse_bool(v, what);
                } else if (key == "seed") {
                    cfg.seed = static_cast<std::uint64_t>(parse_int(v, what));
                } else if (key == "threads") {
                    cfg.threads = static_cast<int>(parse_int(v, what));
                } else if (key == "train_user_fraction") {
                    cfg.train_user_fraction = parse_double(v, what);
                } else if (key == "patch_stride") {
                    cfg.patch_stride = static_cast<int>(parse_int(v, what));
                } else if (key == "max_train_pairs") {
                    cfg.max_train_pairs = static_cast<std::size_t>(parse_int(v, what));
                } else if (key == "train_missing") {
                    cfg.train_missing = parse_bool(v, what);
                } else if (key == "weights_out_dir") {
                    cfg.weights_out_dir = v;
                } else if (key == "scores_dir") {
                    cfg.scores_dir = v;
                } else {
                    known = false;
                }
            } else if (section == "srcnn") {
                if (key == "learning_rate") {
                    cfg.srcnn.sgd.learning_rate = parse_double(v, what);
                } else if (key == "momentum") {
                    cfg.srcnn.sgd.momentum = parse_double(v, what);
                } else if (key == "batch_size") {
                    cfg.srcnn.sgd.batch_size = static_cast<int>(parse_int(v, what));
                } else if (key == "iterations") {
                    cfg.srcnn.sgd.iterations = static_cast<int>(parse_int(v, what));
                } else if (key == "last_layer_lr_scale") {
                    cfg.srcnn.last_layer_lr_scale = parse_double(v, what);
                } else if (key == "log_interval") {
                    cfg.srcnn.log_interval = static_cast<int>(parse_int(v, what));
                } else if (key == "init") {
                    if (v == "he") {
                        cfg.srcnn_init.scheme = SrcnnInit::Scheme::he;
                    } else if (v == "gaussian") {
                        cfg.srcnn_init.scheme = SrcnnInit::Scheme::gaussian;
                    } else {
                        throw ValidationError(what + ": init must be 'he' or 'gaussian'");
                    }
                } else if (key == "init_stddev") {
                    cfg.srcnn_init.stddev = parse_double(v, what);
                } else {
                    known = false;
                }
            } else if (section == "sae") {
                if (key == "stride") {
                    cfg.sae_stride = static_cast<int>(parse_int(v, what));
                } else if (key.rfind("pretrain_", 0) == 0) {
                    known = sae_key(cfg.sae_pretrain, key.substr(9), v, what);
                } else {
                    known = sae_key(cfg.sae_fine_tune, key, v, what);
                }
            } else if (section == "iris") {
                if (key == "target_sclera_radius") {
                    cfg.verification.target_sclera_radius = parse_double(v, what);
                } else if (key == "max_shift") {
                    cfg.verification.max_shift = static_cast<int>(parse_int(v, what));
                } else if (key == "wavelength") {
                    cfg.verification.log_gabor.wavelength = parse_double(v, what);
                } else if (key == "sigma_on_f") {
                    cfg.verification.log_gabor.sigma_on_f = parse_double(v, what);
                } else if (key == "magnitude_floor") {
                    cfg.verification.log_gabor.magnitude_floor = parse_double(v, what);
                } else {
                    known = false;
                }
            } else if (section == "weights") {
                cfg.weights[key] = v;
            } else {
                throw ValidationError("config: unknown section [" + section + "]");
            }
            if (!known) {
                throw ValidationError("config: unknown key " + key + " in [" + section + "]");
            }
        }
    }
    cfg.srcnn.seed = cfg.seed;
    cfg.sae_pretrain.seed = cfg.seed;
    cfg.sae_fine_tune.seed = cfg.seed + 1;
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open config " + path.string());
    }
    return parse_config(in);
}

const ReportRow* ExperimentReport::find(const std::string& method, std::optional<int> train_factor, int eval_factor,
                                        const std::string& metric) const
{
    for (const auto& r : rows) {
        if (r.method == method && r.train_factor == train_factor && r.eval_factor == eval_factor && r.metric == metric) {
            return &r;
        }
    }
    return nullptr;
}

void write_report_csv(std::ostream& out, const ExperimentReport& report)
{
    out << "method,train_factor,eval_factor,metric,value\n";
    for (const auto& r : report.rows) {
        out << r.method << ',' << (r.train_factor ? std::to_string(*r.train_factor) : "-") << ',' << r.eval_factor
            << ',' << r.metric << ',' << (r.value ? format_metric(*r.value) : "-") << '\n';
    }
}

std::vector<TrainPair> training_pairs(const Corpus& corpus, const ExperimentConfig& config, int factor)
{
    std::vector<Image> crops;
    for (const auto* e : corpus.split(Split::train)) {
        const auto pre = preprocess(read_image(e->path), e->annotation, config.verification.target_sclera_radius);
        if (pre) {
            crops.push_back(pre->image);
        }
    }
    if (crops.empty()) {
        throw ValidationError("the training split has no usable image");
    }
    auto pairs = make_training_set(crops, factor, config.patch_stride);
    if (config.max_train_pairs > 0 && pairs.size() > config.max_train_pairs) {
        std::mt19937_64 rng(config.seed + 7);
        std::shuffle(pairs.begin(), pairs.end(), rng);
        pairs.resize(config.max_train_pairs);
    }
    return pairs;
}

ModelStore::ModelStore(const Corpus& corpus, const ExperimentConfig& config) : corpus_(corpus), config_(config) {}

std::optional<std::filesystem::path> ModelStore::weight_path(const std::string& key) const
{
    if (auto it = config_.weights.find(key); it != config_.weights.end()) {
        return it->second;
    }
    return std::nullopt;
}

const std::vector<TrainPair>& ModelStore::pairs(int factor)
{
    auto it = pairs_.find(factor);
    if (it != pairs_.end()) {
        return it->second;
    }
    return pairs_.emplace(factor, training_pairs(corpus_, config_, factor)).first->second;
}

const SrcnnModel& ModelStore::srcnn(Regime regime, int train_factor)
{
    std::lock_guard lock(mutex_);
    const auto key = std::make_pair(regime, train_factor);
    if (auto it = srcnn_.find(key); it != srcnn_.end()) {
        return *it->second;
    }
    const std::string method = regime == Regime::from_scratch ? "srcnn-fs"
                               : regime == Regime::transfer   ? "srcnn-tl"
                                                              : "srcnn-ft";
    const std::string suffix = "-x" + std::to_string(train_factor);
    const auto ready = weight_path(method + suffix);
    const auto base = weight_path("base" + suffix);
    const auto provenance = regime == Regime::from_scratch ? Provenance::scratch
                            : regime == Regime::transfer   ? Provenance::transfer
                                                           : Provenance::fine_tuned;
    std::unique_ptr<SrcnnModel> model;
    if (ready) {
        model = std::make_unique<SrcnnModel>(load_srcnn(*ready, train_factor, provenance));
    } else if (regime == Regime::transfer) {
        if (!base) {
            throw MissingWeightsError(method + " needs foreign weights (key base" + suffix + ")");
        }
        model = std::make_unique<SrcnnModel>(load_srcnn(*base, train_factor, Provenance::transfer));
    } else {
        if (!config_.train_missing) {
            throw MissingWeightsError("no weights for " + method + suffix + " and training is disabled");
        }
        if (regime == Regime::fine_tune && !base) {
            throw MissingWeightsError(method + " needs foreign weights (key base" + suffix + ")");
        }
        TrainRegime tr;
        tr.mode = regime;
        if (regime == Regime::fine_tune) {
            tr.base_weights = base;
        }
        tr.factor = train_factor;
        tr.config = config_.srcnn;
        const auto initial = build_default_srcnn(train_factor, config_.seed, config_.srcnn_init);
        auto result = train_srcnn(initial, pairs(train_factor), tr);
        model = std::make_unique<SrcnnModel>(std::move(result.model));
        if (config_.weights_out_dir) {
            std::filesystem::create_directories(*config_.weights_out_dir);
            save_srcnn(*model, *config_.weights_out_dir / (method + suffix + ".nnw"));
        }
    }
    return *srcnn_.emplace(key, std::move(model)).first->second;
}

const SaeModel& ModelStore::sae(int train_factor)
{
    std::lock_guard lock(mutex_);
    if (auto it = sae_.find(train_factor); it != sae_.end()) {
        return *it->second;
    }
    const std::string suffix = "-x" + std::to_string(train_factor);
    std::unique_ptr<SaeModel> model;
    if (const auto ready = weight_path("sae" + suffix)) {
        model = std::make_unique<SaeModel>(load_sae(*ready, train_factor));
    } else {
        if (!config_.train_missing) {
            throw MissingWeightsError("no weights for sae" + suffix + " and training is disabled");
        }
        const auto& p = pairs(train_factor);
        std::vector<std::vector<float>> inputs;
        inputs.reserve(p.size());
        for (const auto& pair : p) {
            inputs.push_back(pair.input);
        }
        const auto layers = pretrain_stack(inputs, config_.sae_pretrain);
        model = std::make_unique<SaeModel>(stack_and_fine_tune(layers, p, config_.sae_fine_tune));
        model->trained_factor = train_factor;
        if (config_.weights_out_dir) {
            std::filesystem::create_directories(*config_.weights_out_dir);
            save_sae(*model, *config_.weights_out_dir / ("sae" + suffix + ".nnw"));
        }
    }
    return *sae_.emplace(train_factor, std::move(model)).first->second;
}

Image ModelStore::reconstruct(const std::string& method, std::optional<int> train_factor, int eval_factor,
                              const Image& hr)
{
    if (method == "none") {
        return hr;
    }
    if (method == "bilinear") {
        return resize(downscale(hr, eval_factor), hr.width, hr.height, Kernel::bilinear);
    }
    const Image upscaled = degrade(hr, eval_factor);
    if (method == "bicubic") {
        return upscaled;
    }
    if (!train_factor) {
        throw std::invalid_argument(method + " needs a training factor");
    }
    if (method == "sae") {
        return refine_sae(upscaled, eval_factor, sae(*train_factor), config_.sae_stride);
    }
    if (method == "srcnn-fs" || method == "srcnn-tl" || method == "srcnn-ft") {
        return refine(upscaled, eval_factor, srcnn(regime_of(method), *train_factor));
    }
    throw std::invalid_argument("unknown method '" + method + "'");
}

std::vector<Cell> experiment_cells(const ExperimentConfig& config)
{
    std::vector<Cell> cells;
    for (int f : config.factors) {
        for (const auto& m : config.methods) {
            if (!is_learned_method(m)) {
                cells.push_back({m, std::nullopt, f, true});
                continue;
            }
            for (int tf : config.train_factors) {
                bool reachable = true;
                try {
                    (void)cascade_passes(f, tf);
                } catch (const std::invalid_argument&) {
                    reachable = false;
                }
                cells.push_back({m, tf, f, reachable});
            }
        }
    }
    return cells;
}

namespace {

struct TestCrop {
    Image hr;
    SegmentationAnnotation annotation;
    Image hr_strip;
};

std::vector<TestCrop> load_test_crops(const Corpus& corpus, const ExperimentConfig& config)
{
    std::vector<TestCrop> out;
    for (const auto* e : corpus.split(Split::test)) {
        const auto pre = preprocess(read_image(e->path), e->annotation, config.verification.target_sclera_radius);
        if (!pre) {
            std::cerr << "warning: dropping " << e->image_id << " (231x231 crop leaves the image)\n";
            continue;
        }
        out.push_back({pre->image, pre->annotation, unwrap(pre->image, pre->annotation).as_image()});
    }
    if (out.empty()) {
        throw ValidationError("the test split has no usable image");
    }
    return out;
}

// Trains the models of every reachable learned cell up front, in order, so
// parallel evaluation only reads them.
void prepare_models(const std::vector<Cell>& cells, ModelStore& models)
{
    for (const auto& c : cells) {
        if (!c.reachable || !c.train_factor) {
            continue;
        }
        if (c.method == "sae") {
            (void)models.sae(*c.train_factor);
        } else if (is_learned_method(c.method)) {
            (void)models.srcnn(regime_of(c.method), *c.train_factor);
        }
    }
}

} // namespace

ExperimentReport run_quality_experiment(const Corpus& corpus, const ExperimentConfig& config, ModelStore& models)
{
    config.validate();
    corpus.validate();
    const auto crops = load_test_crops(corpus, config);
    const auto cells = experiment_cells(config);
    prepare_models(cells, models);

    std::vector<std::string> metrics;
    for (auto region : config.regions) {
        const std::string suffix = region == Region::strip ? "_strip" : "";
        for (const char* m : {"psnr", "ssim", "vif"}) {
            metrics.push_back(m + suffix);
        }
    }
    std::vector<std::vector<std::optional<double>>> values(cells.size());
    parallel_for(cells.size(), config.threads, [&](std::size_t i) {
        const auto& c = cells[i];
        values[i].assign(metrics.size(), std::nullopt);
        if (!c.reachable) {
            return;
        }
        std::vector<std::vector<double>> acc(metrics.size());
        for (const auto& t : crops) {
            const Image sr = models.reconstruct(c.method, c.train_factor, c.eval_factor, t.hr);
            std::size_t k = 0;
            for (auto region : config.regions) {
                QualityScore q;
                if (region == Region::full) {
                    q = score_all(t.hr, sr);
                } else {
                    q = score_all(t.hr_strip, unwrap(sr, t.annotation).as_image());
                }
                acc[k++].push_back(q.psnr);
                acc[k++].push_back(q.ssim);
                acc[k++].push_back(q.vif);
            }
        }
        for (std::size_t k = 0; k < metrics.size(); ++k) {
            values[i][k] = mean(acc[k]);
        }
    });

    ExperimentReport report;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        for (std::size_t k = 0; k < metrics.size(); ++k) {
            report.rows.push_back({cells[i].method, cells[i].train_factor, cells[i].eval_factor, metrics[k], values[i][k]});
        }
    }
    return report;
}

ExperimentReport run_quality_experiment(const Corpus& corpus, const ExperimentConfig& config)
{
    ModelStore models(corpus, config);
    return run_quality_experiment(corpus, config, models);
}

ExperimentReport run_recognition_experiment(const Corpus& corpus, const ExperimentConfig& config, ModelStore& models)
{
    config.validate();
    corpus.validate();
    std::vector<IrisSample> samples;
    for (const auto* e : corpus.split(Split::test)) {
        samples.push_back(load_sample(*e));
    }
    if (samples.empty()) {
        throw ValidationError("the test split is empty");
    }
    auto cells = experiment_cells(config);
    prepare_models(cells, models);
    if (config.include_control) {
        cells.insert(cells.begin(), Cell{"none", std::nullopt, 1, true});
    }

    struct Job {
        std::size_t cell;
        int scenario;
    };
    std::vector<Job> jobs;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        for (int s : config.scenarios) {
            jobs.push_back({i, s});
        }
    }
    std::vector<std::optional<double>> values(jobs.size());
    parallel_for(jobs.size(), config.threads, [&](std::size_t j) {
        const auto& c = cells[jobs[j].cell];
        if (!c.reachable) {
            return;
        }
        const auto run = run_verification(
            jobs[j].scenario, samples,
            [&](const Image& hr) { return models.reconstruct(c.method, c.train_factor, c.eval_factor, hr); },
            config.verification);
        values[j] = 100.0 * run.result.eer;
        if (config.scores_dir) {
            std::filesystem::create_directories(*config.scores_dir);
            const std::string name = c.method + (c.train_factor ? "-x" + std::to_string(*c.train_factor) : "") +
                                     "_f" + std::to_string(c.eval_factor) + "_s" + std::to_string(jobs[j].scenario) +
                                     ".csv";
            std::ofstream out(*config.scores_dir / name);
            write_scores_csv(out, run.scores);
        }
    });

    ExperimentReport report;
    for (std::size_t j = 0; j < jobs.size(); ++j) {
        const auto& c = cells[jobs[j].cell];
        report.rows.push_back(
            {c.method, c.train_factor, c.eval_factor, "eer_s" + std::to_string(jobs[j].scenario), values[j]});
    }
    return report;
}

ExperimentReport run_recognition_experiment(const Corpus& corpus, const ExperimentConfig& config)
{
    ModelStore models(corpus, config);
    return run_recognition_experiment(corpus, config, models);
}

std::vector<GradCheckRow> run_gradcheck(std::size_t samples, double eps, std::uint64_t seed)
{
    std::vector<Image> images;
    for (std::uint64_t i = 0; i < 2; ++i) {
        images.push_back(synthetic_texture(40, 40, seed + i));
    }
    const auto pairs = make_training_set(images, 2, 7);
    std::vector<GradCheckRow> rows;

    const auto srcnn = build_default_srcnn(2, seed);
    const nn::Tensor<float> x(1, kInputPatch, kInputPatch, 1, pairs[0].input);
    const nn::Tensor<float> t(1, kOutputPatch, kOutputPatch, 1, pairs[0].target);
    rows.push_back({"srcnn", nn::grad_check(srcnn.net, x, t, eps, samples, seed + 11)});

    auto cfg = SaeTrainConfig::desk_scale(1);
    cfg.seed = seed;
    std::vector<std::vector<float>> inputs;
    for (const auto& p : pairs) {
        inputs.push_back(p.input);
    }
    const auto sae = stack_encoders(pretrain_stack(inputs, cfg), cfg);
    rows.push_back({"sae", nn::grad_check(sae.net, nn::Tensor<float>::flat(pairs[0].input),
                                          nn::Tensor<float>::flat(pairs[0].target), eps, samples, seed + 12)});
    return rows;
}

} // namespace irissr

#include "irissr/cascade.hpp"
#include "irissr/error.hpp"
#include "irissr/harness.hpp"
#include "irissr/image.hpp"
#include "irissr/image_io.hpp"
#include "irissr/iris.hpp"
#include "irissr/quality.hpp"
#include "irissr/sae.hpp"
#include "irissr/srcnn.hpp"
#include "irissr/synthetic.hpp"
#include "irissr/training_data.hpp"

#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <algorithm>
#include <cstring>

namespace py = pybind11;
using namespace irissr;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;
using ByteArray = py::array_t<std::uint8_t, py::array::c_style>;

// Images cross the boundary as 2-D float32 arrays (rows, cols).
Image to_image(const FloatArray& a)
{
    if (a.ndim() != 2) {
        throw std::invalid_argument("expected a 2-D array");
    }
    Image img(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
    std::memcpy(img.data.data(), a.data(), img.data.size() * sizeof(float));
    return img;
}

FloatArray to_array(const Image& img)
{
    FloatArray a({img.height, img.width});
    std::memcpy(a.mutable_data(), img.data.data(), img.data.size() * sizeof(float));
    return a;
}

template <typename T>
ByteArray bytes(const std::vector<T>& v, std::vector<py::ssize_t> shape)
{
    ByteArray a(shape);
    std::copy(v.begin(), v.end(), a.mutable_data());
    return a;
}

std::vector<std::uint8_t> from_bytes(const ByteArray& a, std::size_t n, const char* what)
{
    if (static_cast<std::size_t>(a.size()) != n) {
        throw std::invalid_argument(std::string(what) + " has the wrong number of entries");
    }
    return {a.data(), a.data() + n};
}

py::list report_rows(const ExperimentReport& r)
{
    py::list rows;
    for (const auto& row : r.rows) {
        rows.append(py::make_tuple(row.method, row.train_factor, row.eval_factor, row.metric, row.value));
    }
    return rows;
}

} // namespace

PYBIND11_MODULE(_irissr, m)
{
    m.doc() = "Iris super-resolution: SRCNN/SAE reconstruction, quality metrics and iris verification.";

    py::register_exception<InvalidAnnotationError>(m, "InvalidAnnotationError", PyExc_ValueError);
    py::register_exception<IncomparableError>(m, "IncomparableError", PyExc_ValueError);
    py::register_exception<MissingWeightsError>(m, "MissingWeightsError", PyExc_RuntimeError);
    py::register_exception<CorruptWeightsError>(m, "CorruptWeightsError", PyExc_RuntimeError);
    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);

    // image-core
    m.def("read_image", [](const std::filesystem::path& p) { return to_array(read_image(p)); }, py::arg("path"));
    m.def("write_image", [](const std::filesystem::path& p, const FloatArray& a) { write_image(p, to_image(a)); },
          py::arg("path"), py::arg("image"));
    m.def("resize",
          [](const FloatArray& a, int w, int h, const std::string& kernel) {
              if (kernel != "bicubic" && kernel != "bilinear") {
                  throw std::invalid_argument("kernel must be 'bicubic' or 'bilinear'");
              }
              return to_array(resize(to_image(a), w, h, kernel == "bicubic" ? Kernel::bicubic : Kernel::bilinear));
          },
          py::arg("image"), py::arg("width"), py::arg("height"), py::arg("kernel") = "bicubic");
    m.def("degrade", [](const FloatArray& a, int f) { return to_array(degrade(to_image(a), f)); }, py::arg("image"),
          py::arg("factor"));
    m.def("downscale", [](const FloatArray& a, int f) { return to_array(downscale(to_image(a), f)); },
          py::arg("image"), py::arg("factor"));
    m.def("cascade_passes", &cascade_passes, py::arg("target_factor"), py::arg("trained_factor"));

    // quality-metrics
    m.def("psnr", [](const FloatArray& r, const FloatArray& t) { return psnr(to_image(r), to_image(t)); },
          py::arg("reference"), py::arg("test"));
    m.def("ssim", [](const FloatArray& r, const FloatArray& t) { return ssim(to_image(r), to_image(t)); },
          py::arg("reference"), py::arg("test"));
    m.def("vif", [](const FloatArray& r, const FloatArray& t) { return vif(to_image(r), to_image(t)); },
          py::arg("reference"), py::arg("test"));

    // srcnn
    py::class_<SrcnnModel>(m, "Srcnn")
        .def_static("default", [](int factor, std::uint64_t seed) { return build_default_srcnn(factor, seed); },
                    py::arg("factor") = 2, py::arg("seed") = 0)
        .def_static("load",
                    [](const std::filesystem::path& p, int factor) {
                        return load_srcnn(p, factor, Provenance::scratch);
                    },
                    py::arg("path"), py::arg("trained_factor") = 2)
        .def("save", [](const SrcnnModel& s, const std::filesystem::path& p) { save_srcnn(s, p); }, py::arg("path"))
        .def_property_readonly("trained_factor", [](const SrcnnModel& s) { return s.trained_factor; })
        .def_property_readonly("parameter_count", [](const SrcnnModel& s) { return s.net.parameter_count(); })
        .def("apply", [](const SrcnnModel& s, const FloatArray& a) { return to_array(apply_srcnn(s, to_image(a))); },
             py::arg("image"))
        .def("predict_patch",
             [](const SrcnnModel& s, const FloatArray& a) {
                 if (a.size() != kInputPatch * kInputPatch) {
                     throw std::invalid_argument("expected a 33x33 patch");
                 }
                 const auto out = predict_patch(s, std::span<const float>(a.data(), a.size()));
                 FloatArray r({kOutputPatch, kOutputPatch});
                 std::copy(out.begin(), out.end(), r.mutable_data());
                 return r;
             },
             py::arg("patch"))
        .def("super_resolve",
             [](const SrcnnModel& s, const FloatArray& lr, int factor) {
                 CascadeStats stats;
                 auto out = to_array(super_resolve(to_image(lr), factor, s, &stats));
                 return py::make_tuple(out, stats.passes);
             },
             py::arg("lr"), py::arg("factor"), "Returns (image, passes).")
        .def("refine",
             [](const SrcnnModel& s, const FloatArray& up, int factor) {
                 CascadeStats stats;
                 auto out = to_array(refine(to_image(up), factor, s, &stats));
                 return py::make_tuple(out, stats.passes);
             },
             py::arg("upscaled"), py::arg("factor"), "Returns (image, passes).");

    m.def("train_srcnn",
          [](const std::vector<FloatArray>& hr, int factor, int iterations, int stride, std::uint64_t seed) {
              std::vector<Image> images;
              for (const auto& a : hr) {
                  images.push_back(to_image(a));
              }
              const auto pairs = make_training_set(images, factor, stride);
              TrainRegime regime;
              regime.factor = factor;
              regime.config.sgd.iterations = iterations;
              regime.config.seed = seed;
              py::gil_scoped_release release;
              return train_srcnn(build_default_srcnn(factor, seed), pairs, regime).model;
          },
          py::arg("images"), py::arg("factor") = 2, py::arg("iterations") = 2000, py::arg("stride") = 14,
          py::arg("seed") = 0, "Train an SRCNN from scratch on HR images.");

    py::class_<SaeModel>(m, "Sae")
        .def_static("load", [](const std::filesystem::path& p, int f) { return load_sae(p, f); }, py::arg("path"),
                    py::arg("trained_factor") = 2)
        .def("save", [](const SaeModel& s, const std::filesystem::path& p) { save_sae(s, p); }, py::arg("path"))
        .def("super_resolve",
             [](const SaeModel& s, const FloatArray& lr, int factor, int stride) {
                 return to_array(super_resolve_sae(to_image(lr), factor, s, stride));
             },
             py::arg("lr"), py::arg("factor"), py::arg("stride") = kDefaultSaeStride);

    // iris-recognition
    py::class_<Circle>(m, "Circle")
        .def(py::init([](double cx, double cy, double r) { return Circle{cx, cy, r}; }), py::arg("cx"), py::arg("cy"),
             py::arg("r"))
        .def_readwrite("cx", &Circle::cx)
        .def_readwrite("cy", &Circle::cy)
        .def_readwrite("r", &Circle::r)
        .def("__repr__", [](const Circle& c) {
            return "Circle(" + std::to_string(c.cx) + ", " + std::to_string(c.cy) + ", " + std::to_string(c.r) + ")";
        });
    py::class_<SegmentationAnnotation>(m, "Annotation")
        .def(py::init([](Circle p, Circle s) { return SegmentationAnnotation{p, s}; }), py::arg("pupil"),
             py::arg("sclera"))
        .def_readwrite("pupil", &SegmentationAnnotation::pupil)
        .def_readwrite("sclera", &SegmentationAnnotation::sclera)
        .def("validate", &SegmentationAnnotation::validate);

    py::class_<IrisCode>(m, "IrisCode")
        .def(py::init([](const ByteArray& bits, const ByteArray& mask) {
                 IrisCode c;
                 c.bits = from_bytes(bits, kCodeBits, "bits");
                 c.mask = from_bytes(mask, kStripSamples, "mask");
                 return c;
             }),
             py::arg("bits"), py::arg("mask"))
        .def_property_readonly("bits", [](const IrisCode& c) { return bytes(c.bits, {kCodeBits}); })
        .def_property_readonly("mask", [](const IrisCode& c) { return bytes(c.mask, {kStripRows, kStripCols}); })
        .def("valid_count", &IrisCode::valid_count)
        .def("shifted", &shift_columns, py::arg("shift"));

    m.def("preprocess",
          [](const FloatArray& a, const SegmentationAnnotation& ann, double target) -> py::object {
              const auto pre = preprocess(to_image(a), ann, target);
              if (!pre) {
                  return py::none();
              }
              return py::make_tuple(to_array(pre->image), pre->annotation, pre->scale);
          },
          py::arg("image"), py::arg("annotation"), py::arg("target_sclera_radius") = kDefaultScleraRadius,
          "Returns (crop, annotation, scale) or None when the 231x231 crop leaves the image.");
    m.def("unwrap",
          [](const FloatArray& a, const SegmentationAnnotation& ann) {
              const auto n = unwrap(to_image(a), ann);
              return py::make_tuple(to_array(n.as_image()), bytes(n.valid, {kStripRows, kStripCols}));
          },
          py::arg("image"), py::arg("annotation"), "Returns (strip 20x240, valid mask).");
    m.def("encode",
          [](const FloatArray& strip, std::optional<ByteArray> valid, double wavelength, double sigma_on_f,
             double floor) {
              auto n = NormalizedIris::from_image(to_image(strip));
              if (valid) {
                  n.valid = from_bytes(*valid, kStripSamples, "valid");
              }
              return log_gabor_encode(n, {wavelength, sigma_on_f, floor});
          },
          py::arg("strip"), py::arg("valid") = py::none(), py::arg("wavelength") = 18.0, py::arg("sigma_on_f") = 0.5,
          py::arg("magnitude_floor") = 1e-4);
    m.def("hamming_distance",
          py::overload_cast<const IrisCode&, const IrisCode&, int>(&hamming_distance), py::arg("a"), py::arg("b"),
          py::arg("max_shift") = kDefaultMaxShift);
    m.def("compute_eer",
          [](const std::vector<double>& g, const std::vector<double>& i) {
              const auto r = compute_eer(g, i);
              return py::dict(py::arg("eer") = r.eer, py::arg("threshold") = r.threshold_at_eer,
                              py::arg("genuine_count") = r.genuine_count, py::arg("impostor_count") = r.impostor_count);
          },
          py::arg("genuine"), py::arg("impostor"));

    // synthetic data
    m.def("synthetic_texture",
          [](int w, int h, std::uint64_t seed) { return to_array(synthetic_texture(w, h, seed)); }, py::arg("width"),
          py::arg("height"), py::arg("seed") = 0);
    m.def("synthetic_eye",
          [](std::uint64_t eye_seed, std::optional<std::uint64_t> capture_seed) {
              const auto eye =
                  render_synthetic_eye(eye_seed, capture_seed ? random_capture(*capture_seed) : CaptureVariation{});
              return py::make_tuple(to_array(eye.image), eye.annotation);
          },
          py::arg("eye_seed"), py::arg("capture_seed") = py::none(), "Returns (image, annotation).");
    m.def("write_synthetic_corpus",
          [](const std::filesystem::path& dir, int users, int eyes, int images, std::uint64_t seed) {
              return write_synthetic_corpus(dir, {users, eyes, images, seed});
          },
          py::arg("directory"), py::arg("users") = 10, py::arg("eyes_per_user") = 1, py::arg("images_per_eye") = 3,
          py::arg("seed") = 1, "Returns the annotation CSV path.");

    // harness
    m.def("run_quality_experiment",
          [](const std::filesystem::path& root, const std::filesystem::path& ann,
             std::optional<std::filesystem::path> config) {
              const auto cfg = config ? load_config(*config) : ExperimentConfig{};
              IngestOptions opt;
              opt.train_user_fraction = cfg.train_user_fraction;
              const auto corpus = ingest(root, ann, opt);
              py::gil_scoped_release release;
              auto report = run_quality_experiment(corpus, cfg);
              py::gil_scoped_acquire acquire;
              return report_rows(report);
          },
          py::arg("root"), py::arg("annotations"), py::arg("config") = py::none(),
          "Rows of (method, train_factor, eval_factor, metric, value); None marks absent values.");
    m.def("run_recognition_experiment",
          [](const std::filesystem::path& root, const std::filesystem::path& ann,
             std::optional<std::filesystem::path> config) {
              const auto cfg = config ? load_config(*config) : ExperimentConfig{};
              IngestOptions opt;
              opt.train_user_fraction = cfg.train_user_fraction;
              const auto corpus = ingest(root, ann, opt);
              py::gil_scoped_release release;
              auto report = run_recognition_experiment(corpus, cfg);
              py::gil_scoped_acquire acquire;
              return report_rows(report);
          },
          py::arg("root"), py::arg("annotations"), py::arg("config") = py::none());
}

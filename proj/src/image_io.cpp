#include "irissr/image_io.hpp"

#include <png.h>
#include <jpeglib.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <string>

namespace irissr {

namespace {

std::string lower_extension(const std::filesystem::path& path)
{
    auto ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext;
}

struct FileCloser {
    void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode)
{
    FilePtr f(std::fopen(path.string().c_str(), mode));
    if (!f) {
        throw std::runtime_error("cannot open " + path.string());
    }
    return f;
}

float luma(float r, float g, float b) { return 0.299f * r + 0.587f * g + 0.114f * b; }

Image read_png(const std::filesystem::path& path)
{
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.string().c_str())) {
        throw std::runtime_error("cannot decode PNG " + path.string() + ": " + image.message);
    }
    // libpng's simplified API performs the colour-to-gray conversion with
    // its own coefficients; decode RGB and apply BT.601 ourselves instead.
    image.format = PNG_FORMAT_RGB;
    std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
        png_image_free(&image);
        throw std::runtime_error("cannot decode PNG " + path.string() + ": " + image.message);
    }
    const int w = static_cast<int>(image.width);
    const int h = static_cast<int>(image.height);
    Image out(w, h);
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        const float r = buffer[3 * i] / 255.0f;
        const float g = buffer[3 * i + 1] / 255.0f;
        const float b = buffer[3 * i + 2] / 255.0f;
        out.data[i] = (r == g && g == b) ? r : luma(r, g, b);
    }
    out.clamp();
    return out;
}

void write_png(const std::filesystem::path& path, const Image& img)
{
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(img.width);
    image.height = static_cast<png_uint_32>(img.height);
    image.format = PNG_FORMAT_GRAY;
    const auto bytes = to_gray8(img);
    if (!png_image_write_to_file(&image, path.string().c_str(), 0, bytes.data(), 0, nullptr)) {
        throw std::runtime_error("cannot write PNG " + path.string() + ": " + image.message);
    }
}

void skip_pnm_space(std::istream& in)
{
    while (true) {
        const int c = in.peek();
        if (c == '#') {
            std::string line;
            std::getline(in, line);
        } else if (std::isspace(c)) {
            in.get();
        } else {
            return;
        }
    }
}

Image read_pgm(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    std::string magic;
    in >> magic;
    if (magic != "P5" && magic != "P6") {
        throw std::runtime_error(path.string() + ": only binary P5/P6 netpbm files are supported");
    }
    int w = 0, h = 0, maxval = 0;
    skip_pnm_space(in);
    in >> w;
    skip_pnm_space(in);
    in >> h;
    skip_pnm_space(in);
    in >> maxval;
    in.get();
    if (!in || w < 1 || h < 1 || maxval < 1 || maxval > 255) {
        throw std::runtime_error(path.string() + ": malformed or 16-bit netpbm header");
    }
    const int channels = magic == "P6" ? 3 : 1;
    std::vector<unsigned char> raw(static_cast<std::size_t>(w) * h * channels);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!in) {
        throw std::runtime_error(path.string() + ": truncated pixel data");
    }
    Image out(w, h);
    const float scale = 1.0f / static_cast<float>(maxval);
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        out.data[i] = channels == 1 ? raw[i] * scale
                                    : luma(raw[3 * i] * scale, raw[3 * i + 1] * scale, raw[3 * i + 2] * scale);
    }
    out.clamp();
    return out;
}

void write_pgm(const std::filesystem::path& path, const Image& img)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    out << "P5\n" << img.width << ' ' << img.height << "\n255\n";
    const auto bytes = to_gray8(img);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

struct JpegError {
    jpeg_error_mgr mgr;
    std::jmp_buf jump;
};

void on_jpeg_error(j_common_ptr cinfo)
{
    auto* err = reinterpret_cast<JpegError*>(cinfo->err);
    std::longjmp(err->jump, 1);
}

Image read_jpeg(const std::filesystem::path& path)
{
    auto file = open_file(path, "rb");
    jpeg_decompress_struct cinfo{};
    JpegError err{};
    cinfo.err = jpeg_std_error(&err.mgr);
    err.mgr.error_exit = on_jpeg_error;
    std::vector<unsigned char> pixels;
    int w = 0, h = 0, channels = 0;
    if (setjmp(err.jump)) {
        jpeg_destroy_decompress(&cinfo);
        throw std::runtime_error("cannot decode JPEG " + path.string());
    }
    jpeg_create_decompress(&cinfo);
    jpeg_stdio_src(&cinfo, file.get());
    jpeg_read_header(&cinfo, TRUE);
    if (cinfo.jpeg_color_space != JCS_GRAYSCALE) {
        cinfo.out_color_space = JCS_RGB;
    }
    jpeg_start_decompress(&cinfo);
    w = static_cast<int>(cinfo.output_width);
    h = static_cast<int>(cinfo.output_height);
    channels = cinfo.output_components;
    pixels.resize(static_cast<std::size_t>(w) * h * channels);
    while (cinfo.output_scanline < cinfo.output_height) {
        JSAMPROW row = &pixels[static_cast<std::size_t>(cinfo.output_scanline) * w * channels];
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);

    Image out(w, h);
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        out.data[i] = channels == 1 ? pixels[i] / 255.0f
                                    : luma(pixels[3 * i] / 255.0f, pixels[3 * i + 1] / 255.0f,
                                           pixels[3 * i + 2] / 255.0f);
    }
    out.clamp();
    return out;
}

} // namespace

std::vector<std::uint8_t> to_gray8(const Image& img)
{
    std::vector<std::uint8_t> bytes(img.data.size());
    std::transform(img.data.begin(), img.data.end(), bytes.begin(), [](float v) {
        return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
    });
    return bytes;
}

Image from_gray8(int width, int height, const std::vector<std::uint8_t>& bytes)
{
    std::vector<float> px(bytes.size());
    std::transform(bytes.begin(), bytes.end(), px.begin(), [](std::uint8_t b) { return b / 255.0f; });
    return Image(width, height, std::move(px));
}

Image read_image(const std::filesystem::path& path)
{
    const auto ext = lower_extension(path);
    if (ext == ".png") {
        return read_png(path);
    }
    if (ext == ".pgm" || ext == ".pnm" || ext == ".ppm") {
        return read_pgm(path);
    }
    if (ext == ".jpg" || ext == ".jpeg") {
        return read_jpeg(path);
    }
    throw std::runtime_error("unsupported image format: " + path.string());
}

void write_image(const std::filesystem::path& path, const Image& img)
{
    const auto ext = lower_extension(path);
    if (ext == ".png") {
        write_png(path, img);
    } else if (ext == ".pgm") {
        write_pgm(path, img);
    } else {
        throw std::runtime_error("unsupported output format (use .png or .pgm): " + path.string());
    }
}

} // namespace irissr

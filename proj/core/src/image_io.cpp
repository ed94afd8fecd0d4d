#include "sandbox3d/image_io.hpp"

#include "sandbox3d/errors.hpp"

#include <cctype>
#include <cstring>
#include <fstream>
#include <sstream>

#ifdef SANDBOX3D_HAVE_PNG
#include <png.h>
#endif

namespace sandbox3d {

bool png_supported() {
#ifdef SANDBOX3D_HAVE_PNG
    return true;
#else
    return false;
#endif
}

#ifdef SANDBOX3D_HAVE_PNG
std::vector<std::uint8_t> encode_png(const RgbImage& image) {
    png_image img;
    std::memset(&img, 0, sizeof(img));
    img.version = PNG_IMAGE_VERSION;
    img.width = static_cast<png_uint_32>(image.width);
    img.height = static_cast<png_uint_32>(image.height);
    img.format = PNG_FORMAT_RGB;
    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&img, nullptr, &size, 0, image.data.data(), 0, nullptr))
        throw Error(std::string("png encode: ") + img.message);
    std::vector<std::uint8_t> out(size);
    if (!png_image_write_to_memory(&img, out.data(), &size, 0, image.data.data(), 0, nullptr))
        throw Error(std::string("png encode: ") + img.message);
    out.resize(size);
    return out;
}

RgbImage decode_png(const std::vector<std::uint8_t>& bytes) {
    png_image img;
    std::memset(&img, 0, sizeof(img));
    img.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&img, bytes.data(), bytes.size()))
        throw Error(std::string("png decode: ") + img.message);
    img.format = PNG_FORMAT_RGB;
    RgbImage out(static_cast<int>(img.width), static_cast<int>(img.height));
    if (!png_image_finish_read(&img, nullptr, out.data.data(), 0, nullptr)) {
        png_image_free(&img);
        throw Error(std::string("png decode: ") + img.message);
    }
    return out;
}
#else
std::vector<std::uint8_t> encode_png(const RgbImage&) { throw Error("built without PNG support"); }
RgbImage decode_png(const std::vector<std::uint8_t>&) { throw Error("built without PNG support"); }
#endif

std::vector<std::uint8_t> encode_ppm(const RgbImage& image) {
    const std::string header = "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), image.data.begin(), image.data.end());
    return out;
}

RgbImage decode_ppm(const std::vector<std::uint8_t>& bytes) {
    std::size_t pos = 0;
    auto next_token = [&]() {
        std::string tok;
        while (pos < bytes.size()) {
            const char c = static_cast<char>(bytes[pos]);
            if (c == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                if (!tok.empty()) break;
                ++pos;
            } else {
                tok += c;
                ++pos;
            }
        }
        return tok;
    };
    if (next_token() != "P6") throw Error("ppm decode: not a binary P6 file");
    int w = 0, h = 0, maxval = 0;
    try {
        w = std::stoi(next_token());
        h = std::stoi(next_token());
        maxval = std::stoi(next_token());
    } catch (const std::exception&) {
        throw Error("ppm decode: malformed header");
    }
    if (maxval != 255 || w <= 0 || h <= 0) throw Error("ppm decode: only 8-bit rasters are supported");
    ++pos;  // single whitespace after maxval
    const std::size_t need = static_cast<std::size_t>(w) * h * 3;
    if (bytes.size() < pos + need) throw Error("ppm decode: truncated pixel data");
    RgbImage out(w, h);
    std::memcpy(out.data.data(), bytes.data() + pos, need);
    return out;
}

void write_image(const std::filesystem::path& path, const RgbImage& image) {
    const auto ext = path.extension().string();
    if (ext == ".png")
        write_file_bytes(path, encode_png(image));
    else if (ext == ".ppm")
        write_file_bytes(path, encode_ppm(image));
    else
        throw Error("unsupported image extension: " + path.string());
}

RgbImage read_image(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    if (bytes.size() >= 8 && bytes[0] == 0x89 && bytes[1] == 'P' && bytes[2] == 'N' && bytes[3] == 'G')
        return decode_png(bytes);
    return decode_ppm(bytes);
}

std::string default_image_extension() { return png_supported() ? ".png" : ".ppm"; }

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    write_file_bytes(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

std::string read_text_file(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    return {bytes.begin(), bytes.end()};
}

}  // namespace sandbox3d

#include "docres/image.hpp"

#include <png.h>

#include <cstdio>
#include <cstring>
#include <fstream>

#include "docres/errors.hpp"

namespace docres {

namespace {

std::vector<uint8_t> read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for reading: " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                               std::istreambuf_iterator<char>());
    if (f.bad()) throw IoError("read failed: " + path);
    return bytes;
}

struct MemReader {
    const uint8_t* data;
    size_t size;
    size_t pos;
};

void png_mem_read(png_structp png, png_bytep out, png_size_t n) {
    auto* r = static_cast<MemReader*>(png_get_io_ptr(png));
    if (r->pos + n > r->size)
        png_error(png, "unexpected end of PNG stream");
    std::memcpy(out, r->data + r->pos, n);
    r->pos += n;
}

void png_silent_error(png_structp png, png_const_charp) { longjmp(png_jmpbuf(png), 1); }
void png_silent_warn(png_structp, png_const_charp) {}

Image decode_png(const std::vector<uint8_t>& bytes, const std::string& path) {
    MemReader reader{bytes.data(), bytes.size(), 0};
    std::vector<uint8_t> interleaved;   // 8-bit, channels from libpng
    std::vector<png_bytep> row_ptrs;
    png_uint_32 w = 0, h = 0;
    int bit_depth = 0, color_type = 0, out_channels = 0;

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                             png_silent_error, png_silent_warn);
    if (!png) throw FormatError("libpng init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw FormatError("libpng init failed");
    }

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw FormatError("corrupt or truncated PNG: " + path);
    }

    png_set_read_fn(png, &reader, png_mem_read);
    png_read_info(png, info);
    png_get_IHDR(png, info, &w, &h, &bit_depth, &color_type, nullptr, nullptr, nullptr);

    if (bit_depth == 16) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw FormatError("16-bit PNG unsupported: " + path);
    }
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8)
        png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    png_read_update_info(png, info);

    out_channels = png_get_channels(png, info);
    interleaved.resize(size_t(h) * png_get_rowbytes(png, info));
    row_ptrs.resize(h);
    for (png_uint_32 i = 0; i < h; ++i)
        row_ptrs[i] = interleaved.data() + size_t(i) * png_get_rowbytes(png, info);
    png_read_image(png, row_ptrs.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    const bool has_alpha = out_channels == 2 || out_channels == 4;
    const int base = has_alpha ? out_channels - 1 : out_channels;
    if (base != 1 && base != 3)
        throw FormatError("unsupported PNG channel layout: " + path);

    Image img(int(h), int(w), base);
    const size_t n = size_t(h) * w;
    for (size_t p = 0; p < n; ++p) {
        const uint8_t* px = interleaved.data() + p * out_channels;
        if (has_alpha) {
            // Composite over white before dropping alpha.
            const float a = px[base] / 255.0f;
            for (int c = 0; c < base; ++c)
                img.data[p * base + c] = a * (px[c] / 255.0f) + (1.0f - a);
        } else {
            for (int c = 0; c < base; ++c)
                img.data[p * base + c] = px[c] / 255.0f;
        }
    }
    return img;
}

// P5/P6, binary, maxval 255.
Image decode_pnm(const std::vector<uint8_t>& bytes, const std::string& path) {
    size_t pos = 0;
    auto peek = [&]() -> int { return pos < bytes.size() ? bytes[pos] : -1; };
    auto next_token = [&]() -> std::string {
        for (;;) {
            while (pos < bytes.size() && std::isspace(peek())) ++pos;
            if (peek() == '#') {
                while (pos < bytes.size() && peek() != '\n') ++pos;
                continue;
            }
            break;
        }
        std::string tok;
        while (pos < bytes.size() && !std::isspace(peek())) tok.push_back(char(bytes[pos++]));
        if (tok.empty()) throw FormatError("truncated PNM header: " + path);
        return tok;
    };

    const std::string magic = next_token();
    const int channels = magic == "P5" ? 1 : 3;
    int w = 0, h = 0, maxval = 0;
    try {
        w = std::stoi(next_token());
        h = std::stoi(next_token());
        maxval = std::stoi(next_token());
    } catch (const std::exception&) {
        throw FormatError("bad PNM header: " + path);
    }
    if (w < 1 || h < 1) throw FormatError("bad PNM extents: " + path);
    if (maxval != 255) throw FormatError("PNM maxval must be 255: " + path);
    ++pos;  // single whitespace after maxval

    const size_t need = size_t(h) * w * channels;
    if (bytes.size() - pos < need) throw FormatError("truncated PNM payload: " + path);

    Image img(h, w, channels);
    for (size_t i = 0; i < need; ++i) img.data[i] = bytes[pos + i] / 255.0f;
    return img;
}

void write_file(const std::string& path, const void* data, size_t size) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open for writing: " + path);
    f.write(static_cast<const char*>(data), std::streamsize(size));
    if (!f) throw IoError("write failed: " + path);
}

void encode_png(const Image& img, const std::string& path) {
    std::vector<uint8_t> bytes(img.data.size());
    for (size_t i = 0; i < img.data.size(); ++i) bytes[i] = float_to_byte(img.data[i]);

    FILE* fp = std::fopen(path.c_str(), "wb");
    if (!fp) throw IoError("cannot open for writing: " + path);

    std::vector<png_bytep> row_ptrs(img.height);
    const size_t stride = size_t(img.width) * img.channels;
    for (int i = 0; i < img.height; ++i) row_ptrs[i] = bytes.data() + i * stride;

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                              png_silent_error, png_silent_warn);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
        std::fclose(fp);
        throw IoError("libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        throw IoError("PNG encode failed: " + path);
    }
    png_init_io(png, fp);
    png_set_IHDR(png, info, png_uint_32(img.width), png_uint_32(img.height), 8,
                 img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, row_ptrs.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    if (std::fclose(fp) != 0) throw IoError("write failed: " + path);
}

void encode_pnm(const Image& img, const std::string& path, bool color) {
    const int ch = color ? 3 : 1;
    std::string out = color ? "P6" : "P5";
    out += "\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
    const size_t header = out.size();
    out.resize(header + img.pixel_count() * ch);
    auto* payload = reinterpret_cast<uint8_t*>(out.data() + header);
    for (size_t p = 0; p < img.pixel_count(); ++p)
        for (int c = 0; c < ch; ++c) {
            const int src = img.channels == ch ? c : 0;
            payload[p * ch + c] = float_to_byte(img.data[p * img.channels + src]);
        }
    write_file(path, out.data(), out.size());
}

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() &&
           s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

Image load_image(const std::string& path) {
    const std::vector<uint8_t> bytes = read_file(path);
    static const uint8_t png_sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    if (bytes.size() >= 8 && std::memcmp(bytes.data(), png_sig, 8) == 0)
        return decode_png(bytes, path);
    if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '5' || bytes[1] == '6'))
        return decode_pnm(bytes, path);
    throw FormatError("not a PNG or binary PGM/PPM file: " + path);
}

void save_image(const Image& img, const std::string& path) {
    if (img.height < 1 || img.width < 1 || (img.channels != 1 && img.channels != 3))
        throw InvalidParam("save_image: malformed image");
    if (ends_with(path, ".png")) return encode_png(img, path);
    if (ends_with(path, ".pgm")) {
        if (img.channels != 1) throw InvalidParam("PGM requires a 1-channel image");
        return encode_pnm(img, path, false);
    }
    if (ends_with(path, ".ppm")) return encode_pnm(img, path, true);
    throw InvalidParam("unsupported image extension (want .png/.pgm/.ppm): " + path);
}

}  // namespace docres

#include "docres/tensor.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>

#include "docres/errors.hpp"

namespace docres {

Tensor::Tensor(std::vector<uint32_t> s, float fill) : shape(std::move(s)) {
    data.assign(numel(), fill);
}

size_t Tensor::numel() const {
    size_t n = 1;
    for (uint32_t e : shape) n *= e;
    return n;
}

namespace {

static_assert(sizeof(float) == 4);

void put_u32_le(std::string& out, uint32_t v) {
    out.push_back(char(v & 0xff));
    out.push_back(char((v >> 8) & 0xff));
    out.push_back(char((v >> 16) & 0xff));
    out.push_back(char((v >> 24) & 0xff));
}

uint32_t get_u32_le(const uint8_t* p) {
    return uint32_t(p[0]) | (uint32_t(p[1]) << 8) | (uint32_t(p[2]) << 16) |
           (uint32_t(p[3]) << 24);
}

}  // namespace

void write_tensor(const Tensor& t, const std::string& path) {
    if (t.shape.size() > 8) throw InvalidParam("write_tensor: ndim > 8");
    if (t.numel() != t.data.size())
        throw ShapeMismatch("write_tensor: shape/data length mismatch");

    std::string out = "DRT1";
    out.push_back(char(0));                 // dtype f32
    out.push_back(char(t.shape.size()));
    for (uint32_t e : t.shape) put_u32_le(out, e);

    const size_t header = out.size();
    out.resize(header + t.data.size() * 4);
    if constexpr (std::endian::native == std::endian::little) {
        std::memcpy(out.data() + header, t.data.data(), t.data.size() * 4);
    } else {
        for (size_t i = 0; i < t.data.size(); ++i) {
            uint32_t bits;
            std::memcpy(&bits, &t.data[i], 4);
            out[header + i * 4 + 0] = char(bits & 0xff);
            out[header + i * 4 + 1] = char((bits >> 8) & 0xff);
            out[header + i * 4 + 2] = char((bits >> 16) & 0xff);
            out[header + i * 4 + 3] = char((bits >> 24) & 0xff);
        }
    }

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open for writing: " + path);
    f.write(out.data(), std::streamsize(out.size()));
    if (!f) throw IoError("write failed: " + path);
}

Tensor read_tensor(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for reading: " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                               std::istreambuf_iterator<char>());

    if (bytes.size() < 6 || std::memcmp(bytes.data(), "DRT1", 4) != 0)
        throw FormatError("bad DRT1 magic: " + path);
    if (bytes[4] != 0) throw FormatError("unsupported DRT1 dtype: " + path);
    const int ndim = bytes[5];
    if (ndim > 8) throw FormatError("DRT1 ndim > 8: " + path);
    if (bytes.size() < 6 + size_t(ndim) * 4)
        throw FormatError("truncated DRT1 header: " + path);

    Tensor t;
    uint64_t numel = 1;
    for (int d = 0; d < ndim; ++d) {
        const uint32_t e = get_u32_le(bytes.data() + 6 + size_t(d) * 4);
        t.shape.push_back(e);
        numel *= e;
        if (numel > (uint64_t(1) << 34))
            throw FormatError("DRT1 extents overflow: " + path);
    }
    const size_t payload = 6 + size_t(ndim) * 4;
    if (bytes.size() != payload + numel * 4)
        throw FormatError("DRT1 payload size mismatch: " + path);

    t.data.resize(numel);
    if constexpr (std::endian::native == std::endian::little) {
        std::memcpy(t.data.data(), bytes.data() + payload, numel * 4);
    } else {
        for (size_t i = 0; i < numel; ++i) {
            const uint32_t bits = get_u32_le(bytes.data() + payload + i * 4);
            std::memcpy(&t.data[i], &bits, 4);
        }
    }
    return t;
}

}  // namespace docres

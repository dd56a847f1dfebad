#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace docres {

// N-dim row-major float array with an optional gradient buffer.
struct Tensor {
    std::vector<uint32_t> shape;
    std::vector<float> data;
    std::optional<std::vector<float>> grad;

    Tensor() = default;
    explicit Tensor(std::vector<uint32_t> s, float fill = 0.0f);

    size_t numel() const;
};

// DRT1 container: "DRT1" | dtype u8 (0 = f32) | ndim u8 | ndim x u32 LE
// extents | row-major f32 LE payload. No padding anywhere.
void write_tensor(const Tensor& t, const std::string& path);
Tensor read_tensor(const std::string& path);

}  // namespace docres

#pragma once

#include <vector>

#include "docres/image.hpp"
#include "docres/task.hpp"
#include "docres/tensor.hpp"

namespace docres::prompt {

// Radii are calibrated for the 256-px scale and are rescaled by
// min(h,w)/256 (floor 1) so morphological text removal tracks stroke width.
struct PromptConfig {
    int bg_dilate_radius = 5;
    int bg_median_radius = 7;
    int sauvola_radius = 12;
    float sauvola_k = 0.2f;
    float sauvola_R = 0.5f;
    float mask_blur_sigma = 2.0f;
};

// Three unit-interval planes matching the source extents, whatever the task.
struct DTSPrompt {
    int height = 0;
    int width = 0;
    TaskKind task = TaskKind::Dewarp;
    std::vector<float> planes;  // [3, h, w]

    DTSPrompt() = default;
    DTSPrompt(int h, int w, TaskKind t)
        : height(h), width(w), task(t), planes(3 * size_t(h) * size_t(w), 0.0f) {}

    float* plane(int p) { return planes.data() + size_t(p) * height * width; }
    const float* plane(int p) const { return planes.data() + size_t(p) * height * width; }
    float at(int p, int i, int j) const {
        return planes[(size_t(p) * height + i) * width + j];
    }
};

// Normalized pixel coordinates: x follows columns, y follows rows; a
// degenerate extent of 1 yields an all-zero plane.
void coord_channels(int h, int w, std::vector<float>& plane_x, std::vector<float>& plane_y);

struct MaskResult {
    std::vector<float> plane;  // {0,1} floats, h*w
    bool degenerate = false;   // constant input; mask is all ones
};
// Classical document segmentation: blur, Otsu, center-polarity pick, largest
// 8-connected component, hole fill.
MaskResult document_mask(const Image& img, const PromptConfig& cfg = {});

// Shadowed document background: per-channel dilation (removes dark text)
// followed by a median filter (smooths leftovers).
Image background(const Image& img, const PromptConfig& cfg = {});

// 1 - |img - bg| elementwise; white where the image equals its background.
Image diff_map(const Image& img, const Image& bg);

// The prompt generator: task-specific prior planes from the input image.
//   dewarp     -> [mask, coord_x, coord_y]
//   deshadow   -> background RGB
//   appearance -> diff_map RGB
//   deblur     -> [gradient, gradient, gradient]
//   binarize   -> [sauvola binary, sauvola threshold, gradient]
DTSPrompt generate(const Image& img, TaskKind task, const PromptConfig& cfg = {});

// [6, h, w]: channels 0-2 the prompt planes, channels 3-5 the image RGB.
Tensor fuse(const DTSPrompt& prompt, const Image& img);

// Image-independent constant planes, equally spaced per task:
// dewarp 0.00, deshadow 0.25, appearance 0.50, deblur 0.75, binarize 1.00.
DTSPrompt fixed_prompt(TaskKind task, int h, int w);

}  // namespace docres::prompt

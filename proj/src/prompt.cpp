#include "docres/prompt.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "docres/errors.hpp"
#include "docres/imgproc.hpp"

namespace docres::prompt {

using imgproc::Kernel2D;

namespace {

int scaled_radius(int radius_at_256, int h, int w) {
    const float scale = float(std::min(h, w)) / 256.0f;
    return std::max(1, int(std::lround(radius_at_256 * scale)));
}

Image to_rgb(const Image& img) {
    if (img.channels == 3) return img;
    Image out(img.height, img.width, 3);
    for (size_t p = 0; p < img.pixel_count(); ++p)
        for (int c = 0; c < 3; ++c) out.data[p * 3 + c] = img.data[p];
    return out;
}

void copy_channel(const Image& img, int c, float* dst) {
    for (size_t p = 0; p < img.pixel_count(); ++p)
        dst[p] = img.data[p * img.channels + c];
}

}  // namespace

void coord_channels(int h, int w, std::vector<float>& plane_x, std::vector<float>& plane_y) {
    if (h < 1 || w < 1) throw InvalidParam("coord_channels: extents must be >= 1");
    plane_x.assign(size_t(h) * w, 0.0f);
    plane_y.assign(size_t(h) * w, 0.0f);
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j) {
            plane_x[size_t(i) * w + j] = w > 1 ? float(j) / float(w - 1) : 0.0f;
            plane_y[size_t(i) * w + j] = h > 1 ? float(i) / float(h - 1) : 0.0f;
        }
}

MaskResult document_mask(const Image& img, const PromptConfig& cfg) {
    const int h = img.height, w = img.width;
    const Image gray = imgproc::to_grayscale(img);
    const Image smooth = imgproc::gaussian_blur(gray, cfg.mask_blur_sigma);
    const auto otsu = imgproc::otsu_threshold(smooth);

    MaskResult res;
    res.plane.assign(size_t(h) * w, 1.0f);
    if (otsu.degenerate) {
        res.degenerate = true;
        return res;
    }

    // Foreground polarity: the side the image center falls on.
    const bool center_bright = smooth.at(h / 2, w / 2) > otsu.threshold;
    BinaryMap fg(h, w);
    for (size_t p = 0; p < smooth.data.size(); ++p) {
        const bool bright = smooth.data[p] > otsu.threshold;
        fg.data[p] = bright == center_bright ? 1 : 0;
    }

    const auto comps = imgproc::connected_components(fg);
    int32_t largest = 1;
    for (int32_t k = 2; k <= comps.count; ++k)
        if (comps.sizes[k - 1] > comps.sizes[largest - 1]) largest = k;
    BinaryMap doc(h, w);
    for (size_t p = 0; p < doc.data.size(); ++p)
        doc.data[p] = comps.labels[p] == largest ? 1 : 0;

    // Fill holes: any inverse component not touching the border is interior.
    BinaryMap inv(h, w);
    for (size_t p = 0; p < inv.data.size(); ++p) inv.data[p] = doc.data[p] ? 0 : 1;
    const auto inv_comps = imgproc::connected_components(inv);
    std::vector<bool> touches_border(size_t(inv_comps.count) + 1, false);
    for (int i = 0; i < h; ++i) {
        if (auto l = inv_comps.labels[size_t(i) * w]; l) touches_border[l] = true;
        if (auto l = inv_comps.labels[size_t(i) * w + w - 1]; l) touches_border[l] = true;
    }
    for (int j = 0; j < w; ++j) {
        if (auto l = inv_comps.labels[j]; l) touches_border[l] = true;
        if (auto l = inv_comps.labels[size_t(h - 1) * w + j]; l) touches_border[l] = true;
    }
    for (size_t p = 0; p < res.plane.size(); ++p) {
        const auto l = inv_comps.labels[p];
        res.plane[p] = (doc.data[p] || (l && !touches_border[l])) ? 1.0f : 0.0f;
    }
    return res;
}

Image background(const Image& img, const PromptConfig& cfg) {
    const Image rgb = to_rgb(img);
    const Kernel2D dil{scaled_radius(cfg.bg_dilate_radius, rgb.height, rgb.width)};
    const Kernel2D med{scaled_radius(cfg.bg_median_radius, rgb.height, rgb.width)};
    return imgproc::median_filter(imgproc::dilate(rgb, dil), med);
}

Image diff_map(const Image& img, const Image& bg) {
    if (!img.same_extent(bg) || img.channels != bg.channels)
        throw ShapeMismatch("diff_map: extent/channel mismatch");
    Image out(img.height, img.width, img.channels);
    for (size_t i = 0; i < img.data.size(); ++i)
        out.data[i] = 1.0f - std::fabs(img.data[i] - bg.data[i]);
    return out;
}

DTSPrompt generate(const Image& img, TaskKind task, const PromptConfig& cfg) {
    const int h = img.height, w = img.width;
    DTSPrompt out(h, w, task);
    switch (task) {
        case TaskKind::Dewarp: {
            const MaskResult mask = document_mask(img, cfg);
            std::vector<float> px, py;
            coord_channels(h, w, px, py);
            std::memcpy(out.plane(0), mask.plane.data(), mask.plane.size() * 4);
            std::memcpy(out.plane(1), px.data(), px.size() * 4);
            std::memcpy(out.plane(2), py.data(), py.size() * 4);
            break;
        }
        case TaskKind::Deshadow: {
            const Image bg = background(img, cfg);
            for (int c = 0; c < 3; ++c) copy_channel(bg, c, out.plane(c));
            break;
        }
        case TaskKind::Appearance: {
            const Image rgb = to_rgb(img);
            const Image diff = diff_map(rgb, background(rgb, cfg));
            for (int c = 0; c < 3; ++c) copy_channel(diff, c, out.plane(c));
            break;
        }
        case TaskKind::Deblur: {
            const Image grad = imgproc::sobel_gradient(imgproc::to_grayscale(img));
            for (int c = 0; c < 3; ++c)
                std::memcpy(out.plane(c), grad.data.data(), grad.data.size() * 4);
            break;
        }
        case TaskKind::Binarize: {
            const Image gray = imgproc::to_grayscale(img);
            const auto sau = imgproc::sauvola(gray, cfg.sauvola_radius, cfg.sauvola_k,
                                              cfg.sauvola_R);
            const Image grad = imgproc::sobel_gradient(gray);
            for (size_t p = 0; p < gray.pixel_count(); ++p)
                out.plane(0)[p] = float(sau.binary.data[p]);
            std::memcpy(out.plane(1), sau.threshold.data.data(),
                        sau.threshold.data.size() * 4);
            std::memcpy(out.plane(2), grad.data.data(), grad.data.size() * 4);
            break;
        }
    }
    return out;
}

Tensor fuse(const DTSPrompt& prompt, const Image& img) {
    if (prompt.height != img.height || prompt.width != img.width)
        throw ShapeMismatch("fuse: prompt/image extent mismatch");
    const Image rgb = to_rgb(img);
    const uint32_t h = uint32_t(img.height), w = uint32_t(img.width);
    Tensor t({6, h, w});
    std::memcpy(t.data.data(), prompt.planes.data(), prompt.planes.size() * 4);
    float* image_part = t.data.data() + 3 * size_t(h) * w;
    for (int c = 0; c < 3; ++c) copy_channel(rgb, c, image_part + size_t(c) * h * w);
    return t;
}

DTSPrompt fixed_prompt(TaskKind task, int h, int w) {
    if (h < 1 || w < 1) throw InvalidParam("fixed_prompt: extents must be >= 1");
    DTSPrompt out(h, w, task);
    const float value = 0.25f * float(int(task));
    std::fill(out.planes.begin(), out.planes.end(), value);
    return out;
}

}  // namespace docres::prompt

#include "docres/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "docres/errors.hpp"
#include "docres/imgproc.hpp"
#include "docres/manifest.hpp"
#include "docres/tensor.hpp"

namespace docres::synth {

namespace {

float gauss_draw(Rng& rng, float std_dev) {
    // Box-Muller, one value per call; the discarded half keeps draw order simple.
    const double u1 = std::max(rng.next_f64(), 1e-12);
    const double u2 = rng.next_f64();
    return float(std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2) * std_dev);
}

void fill_rect(Image& img, BinaryMap& ink, int y0, int x0, int y1, int x1, float value) {
    y0 = std::max(y0, 0); x0 = std::max(x0, 0);
    y1 = std::min(y1, img.height); x1 = std::min(x1, img.width);
    for (int i = y0; i < y1; ++i)
        for (int j = x0; j < x1; ++j) {
            for (int c = 0; c < 3; ++c) img.at(i, j, c) = value;
            ink.at(i, j) = 1;
        }
}

// Soft {0..1} occluder plane: union of half-planes and ellipses, blurred.
Image soft_blob(int size, int count, Rng& rng, bool first_is_halfplane) {
    Image blob(size, size, 1, 0.0f);
    for (int n = 0; n < count; ++n) {
        const bool halfplane = (n == 0 && first_is_halfplane) ? true : rng.next_range(2) == 0;
        if (halfplane) {
            // Line through a central point; one side shadowed.
            const double py = rng.uniform(0.25, 0.75) * size;
            const double px = rng.uniform(0.25, 0.75) * size;
            const double theta = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
            const double ny = std::cos(theta), nx = std::sin(theta);
            for (int i = 0; i < size; ++i)
                for (int j = 0; j < size; ++j)
                    if ((i - py) * ny + (j - px) * nx > 0.0) blob.at(i, j) = 1.0f;
        } else {
            const double cy = rng.uniform(0.1, 0.9) * size;
            const double cx = rng.uniform(0.1, 0.9) * size;
            const double ry = rng.uniform(size / 5.0, size / 2.0);
            const double rx = rng.uniform(size / 5.0, size / 2.0);
            for (int i = 0; i < size; ++i)
                for (int j = 0; j < size; ++j) {
                    const double dy = (i - cy) / ry, dx = (j - cx) / rx;
                    if (dy * dy + dx * dx <= 1.0) blob.at(i, j) = 1.0f;
                }
        }
    }
    return imgproc::gaussian_blur(blob, float(size) / 16.0f);
}

Image multiply_field(const Image& page, const Image& field1ch) {
    Image out = page;
    for (size_t p = 0; p < page.pixel_count(); ++p)
        for (int c = 0; c < page.channels; ++c)
            out.data[p * page.channels + c] *= field1ch.data[p];
    return out;
}

}  // namespace

PageRender render_page(const SynthConfig& cfg, Rng& rng) {
    if (cfg.page_size < 64) throw InvalidParam("render_page: page_size must be >= 64");
    const int S = cfg.page_size;
    PageRender out{Image(S, S, 3), BinaryMap(S, S)};

    const float base = float(rng.uniform(0.87, 0.98));
    for (int c = 0; c < 3; ++c) {
        const float tint = std::clamp(base + float(rng.uniform(-0.02, 0.02)), 0.85f, 1.0f);
        for (size_t p = 0; p < out.page.pixel_count(); ++p) out.page.data[p * 3 + c] = tint;
    }

    const int margin = std::max(4, S / 16);
    int y = margin + int(rng.next_range(uint64_t(margin)));
    while (true) {
        const int line_h = 7 + int(rng.next_range(7));  // 7..13
        if (y + line_h >= S - margin) break;
        if (rng.next_f64() < 0.12) {
            // horizontal rule
            const int thick = 1 + int(rng.next_range(2));
            const float v = float(rng.uniform(0.02, 0.22));
            fill_rect(out.page, out.ink, y + line_h / 2, margin, y + line_h / 2 + thick,
                      S - margin, v);
        } else {
            int x = margin + int(rng.next_range(6));
            while (x < S - margin - 6) {
                const int word_w = std::min(8 + int(rng.next_range(21)), S - margin - x);
                const float v = float(rng.uniform(0.02, 0.22));
                int gx = x;
                while (gx < x + word_w - 1) {
                    const int stroke_w = 1 + int(rng.next_range(3));
                    const int stroke_h = line_h / 2 + int(rng.next_range(uint64_t(line_h / 2 + 1)));
                    const int top = y + int(rng.next_range(uint64_t(line_h - stroke_h + 1)));
                    fill_rect(out.page, out.ink, top, gx, top + stroke_h, gx + stroke_w, v);
                    gx += stroke_w + 2 + int(rng.next_range(3));
                }
                x += word_w + 3 + int(rng.next_range(6));
            }
        }
        y += line_h + 4 + int(rng.next_range(6));
    }
    return out;
}

WarpFields gen_warp(const SynthConfig& cfg, Rng& rng) {
    const int S = cfg.page_size, g = cfg.warp_scale;
    std::vector<float> grid_dy(size_t(g + 1) * (g + 1)), grid_dx(grid_dy.size());
    for (size_t n = 0; n < grid_dy.size(); ++n) {
        grid_dy[n] = float(rng.uniform(-cfg.warp_amplitude, cfg.warp_amplitude));
        grid_dx[n] = float(rng.uniform(-cfg.warp_amplitude, cfg.warp_amplitude));
    }

    WarpFields out{FlowField(S, S), BackwardMap(S, S)};
    for (int i = 0; i < S; ++i)
        for (int j = 0; j < S; ++j) {
            const float u = S > 1 ? float(i) / float(S - 1) * g : 0.0f;
            const float v = S > 1 ? float(j) / float(S - 1) * g : 0.0f;
            const int u0 = std::min(int(u), g - 1), v0 = std::min(int(v), g - 1);
            const float fu = u - u0, fv = v - v0;
            auto sample = [&](const std::vector<float>& grid) {
                const float a = grid[size_t(u0) * (g + 1) + v0];
                const float b = grid[size_t(u0) * (g + 1) + v0 + 1];
                const float c = grid[size_t(u0 + 1) * (g + 1) + v0];
                const float d = grid[size_t(u0 + 1) * (g + 1) + v0 + 1];
                return (a * (1 - fv) + b * fv) * (1 - fu) + (c * (1 - fv) + d * fv) * fu;
            };
            const size_t p = size_t(i) * S + j;
            out.forward.dy[p] = sample(grid_dy);
            out.forward.dx[p] = sample(grid_dx);
            out.bm.row[p] = float(i) + out.forward.dy[p];
            out.bm.col[p] = float(j) + out.forward.dx[p];
        }
    return out;
}

BackwardMap invert_displacement(const FlowField& fwd, int iterations) {
    const int h = fwd.height, w = fwd.width;
    auto sample = [&](const std::vector<float>& f, float i, float j) {
        i = std::clamp(i, 0.0f, float(h - 1));
        j = std::clamp(j, 0.0f, float(w - 1));
        const int i0 = int(i), j0 = int(j);
        const int i1 = std::min(i0 + 1, h - 1), j1 = std::min(j0 + 1, w - 1);
        const float fi = i - i0, fj = j - j0;
        const float top = f[size_t(i0) * w + j0] * (1 - fj) + f[size_t(i0) * w + j1] * fj;
        const float bot = f[size_t(i1) * w + j0] * (1 - fj) + f[size_t(i1) * w + j1] * fj;
        return top * (1 - fi) + bot * fi;
    };
    BackwardMap inv(h, w);
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j) {
            float yi = float(i), yj = float(j);
            for (int it = 0; it < iterations; ++it) {
                yi = float(i) - sample(fwd.dy, yi, yj);
                yj = float(j) - sample(fwd.dx, yi, yj);
            }
            inv.row[size_t(i) * w + j] = yi;
            inv.col[size_t(i) * w + j] = yj;
        }
    return inv;
}

ImagePair gen_shadow(const Image& page, const SynthConfig& cfg, Rng& rng) {
    if (page.channels != 3) throw ShapeMismatch("gen_shadow: 3-channel page expected");
    const int count = 1 + int(rng.next_range(3));
    const Image blob = soft_blob(page.height, count, rng, /*first_is_halfplane=*/true);
    Image field(page.height, page.width, 1);
    for (size_t p = 0; p < field.data.size(); ++p)
        field.data[p] = 1.0f - cfg.shadow_strength * std::clamp(blob.data[p], 0.0f, 1.0f);
    return {multiply_field(page, field), page};
}

ImagePair gen_illum(const Image& page, const SynthConfig& cfg, Rng& rng) {
    if (page.channels != 3) throw ShapeMismatch("gen_illum: 3-channel page expected");
    const int count = 1 + int(rng.next_range(2));
    const Image blob = soft_blob(page.height, count, rng, false);
    // Weaker than a cast shadow, with an ambient floor so every sample is
    // measurably degraded.
    const float strength = 0.35f * cfg.shadow_strength;
    Image out = page;
    float gain[3];
    for (int c = 0; c < 3; ++c) gain[c] = float(rng.uniform(0.92, 1.05));
    for (size_t p = 0; p < page.pixel_count(); ++p) {
        const float field =
            1.0f - strength * (0.3f + 0.7f * std::clamp(blob.data[p], 0.0f, 1.0f));
        for (int c = 0; c < 3; ++c) {
            float v = page.data[p * 3 + c] * field * gain[c];
            if (cfg.noise_std > 0.0f) v += gauss_draw(rng, cfg.noise_std);
            out.data[p * 3 + c] = std::clamp(v, 0.0f, 1.0f);
        }
    }
    return {out, page};
}

ImagePair gen_blur(const Image& page, const SynthConfig& cfg, Rng& rng) {
    if (page.channels != 3) throw ShapeMismatch("gen_blur: 3-channel page expected");
    Image out;
    if (rng.next_f64() < cfg.blur_motion_prob) {
        // 1D motion kernel: bilinear splat of L samples along a random angle.
        const int length = 3 + int(rng.next_range(7));
        const double theta = rng.uniform(0.0, 3.14159265358979323846);
        const double dy = std::sin(theta), dx = std::cos(theta);
        const int r = (length + 1) / 2;
        const int side = 2 * r + 1;
        std::vector<float> kernel(size_t(side) * side, 0.0f);
        for (int s = 0; s < length; ++s) {
            const double t = s - (length - 1) / 2.0;
            const double ky = r + t * dy, kx = r + t * dx;
            const int y0 = int(std::floor(ky)), x0 = int(std::floor(kx));
            const double fy = ky - y0, fx = kx - x0;
            kernel[size_t(y0) * side + x0] += float((1 - fy) * (1 - fx));
            kernel[size_t(y0) * side + x0 + 1] += float((1 - fy) * fx);
            kernel[size_t(y0 + 1) * side + x0] += float(fy * (1 - fx));
            kernel[size_t(y0 + 1) * side + x0 + 1] += float(fy * fx);
        }
        float ksum = 0.0f;
        for (float v : kernel) ksum += v;
        for (float& v : kernel) v /= ksum;

        out = Image(page.height, page.width, 3);
        for (int i = 0; i < page.height; ++i)
            for (int j = 0; j < page.width; ++j)
                for (int c = 0; c < 3; ++c) {
                    float acc = 0.0f;
                    for (int ki = -r; ki <= r; ++ki)
                        for (int kj = -r; kj <= r; ++kj) {
                            const int si = std::clamp(i + ki, 0, page.height - 1);
                            const int sj = std::clamp(j + kj, 0, page.width - 1);
                            acc += kernel[size_t(ki + r) * side + (kj + r)] * page.at(si, sj, c);
                        }
                    out.at(i, j, c) = acc;
                }
    } else {
        const float sigma = float(rng.uniform(cfg.blur_sigma_min, cfg.blur_sigma_max));
        out = imgproc::gaussian_blur(page, std::max(sigma, 1e-4f));
    }
    if (cfg.deblur_noise_std > 0.0f)
        for (float& v : out.data)
            v = std::clamp(v + gauss_draw(rng, cfg.deblur_noise_std), 0.0f, 1.0f);
    return {out, page};
}

BinarizeSample gen_binarize_input(const Image& page, const BinaryMap& ink,
                                  const SynthConfig& cfg, Rng& rng) {
    const int S = page.height;
    Image out = page;

    const int span = cfg.stain_count_max - cfg.stain_count_min;
    const int stains = cfg.stain_count_min + (span > 0 ? int(rng.next_range(uint64_t(span) + 1)) : 0);
    for (int n = 0; n < stains; ++n) {
        const double cy = rng.uniform(0.0, 1.0) * S, cx = rng.uniform(0.0, 1.0) * S;
        const double ry = rng.uniform(S / 16.0, S / 5.0), rx = rng.uniform(S / 16.0, S / 5.0);
        const float drop = float(rng.uniform(0.15, 0.5));
        for (int i = 0; i < S; ++i)
            for (int j = 0; j < S; ++j) {
                const double d2 = ((i - cy) / ry) * ((i - cy) / ry) + ((j - cx) / rx) * ((j - cx) / rx);
                if (d2 > 4.0) continue;
                const float falloff = float(std::exp(-1.5 * d2));
                for (int c = 0; c < 3; ++c) out.at(i, j, c) *= 1.0f - drop * falloff;
            }
    }

    if (cfg.bleed_strength > 0.0f) {
        // Faint mirrored copy of a second page's ink showing through the
        // paper; diffusion through the sheet leaves it slightly blurred.
        const PageRender verso = render_page(cfg, rng);
        Image ghost(S, S, 1, 0.0f);
        for (int i = 0; i < S; ++i)
            for (int j = 0; j < S; ++j)
                if (verso.ink.at(i, S - 1 - j))
                    ghost.at(i, j) = 1.0f - verso.page.at(i, S - 1 - j, 0) * 0.5f;
        ghost = imgproc::gaussian_blur(ghost, 0.8f);
        for (size_t p = 0; p < ghost.data.size(); ++p) {
            const float a = cfg.bleed_strength * ghost.data[p];
            for (int c = 0; c < 3; ++c)
                out.data[p * 3 + c] = (1.0f - a) * out.data[p * 3 + c] + a * 0.1f;
        }
    }

    if (cfg.contrast_max > 0.0f) {
        const float f = float(rng.uniform(0.0, cfg.contrast_max));
        for (float& v : out.data) v = v * (1.0f - f) + 0.6f * f;
    }
    if (cfg.binarize_noise_std > 0.0f)
        for (float& v : out.data) v += gauss_draw(rng, cfg.binarize_noise_std);
    for (float& v : out.data) v = std::clamp(v, 0.0f, 1.0f);
    return {out, ink};
}

DewarpSample gen_dewarp_sample(const SynthConfig& cfg, Rng& rng) {
    const int S = cfg.page_size;
    const int margin = int(std::lround(0.12 * S));
    const int inner = S - 2 * margin;

    const PageRender full = render_page(cfg, rng);
    const Image page = imgproc::resize_bilinear(full.page, inner, inner);

    DewarpSample out;
    out.flat = Image(S, S, 3);
    const float backdrop = float(rng.uniform(0.05, 0.35));
    for (int c = 0; c < 3; ++c) {
        const float tint = std::clamp(backdrop + float(rng.uniform(-0.03, 0.03)), 0.0f, 1.0f);
        for (size_t p = 0; p < out.flat.pixel_count(); ++p) out.flat.data[p * 3 + c] = tint;
    }
    Image rect(S, S, 1, 0.0f);
    for (int i = 0; i < inner; ++i)
        for (int j = 0; j < inner; ++j) {
            for (int c = 0; c < 3; ++c)
                out.flat.at(margin + i, margin + j, c) = page.at(i, j, c);
            rect.at(margin + i, margin + j) = 1.0f;
        }

    const WarpFields fields = gen_warp(cfg, rng);
    const BackwardMap to_flat = invert_displacement(fields.forward);
    out.distorted = imgproc::remap_bilinear(out.flat, to_flat);
    const Image warped_rect = imgproc::remap_bilinear(rect, to_flat);
    out.mask = BinaryMap(S, S);
    for (size_t p = 0; p < warped_rect.data.size(); ++p)
        out.mask.data[p] = warped_rect.data[p] > 0.5f ? 1 : 0;
    out.bm = fields.bm;
    return out;
}

std::string make_dataset(const SynthConfig& cfg, int n_per_task, const std::string& out_dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create dataset directory: " + out_dir);

    Manifest manifest;
    manifest.base_dir = out_dir;
    char name[64];

    for (int ti = 0; ti < kTaskCount; ++ti) {
        const TaskKind task = kAllTasks[size_t(ti)];
        for (int i = 0; i < n_per_task; ++i) {
            Rng rng(Rng::mix(cfg.seed, uint64_t(ti), uint64_t(i)));
            ManifestRecord rec;
            rec.task = task;
            std::snprintf(name, sizeof name, "%s_%04d", task_name(task), i);
            const std::string stem = fs::path(out_dir) / name;

            switch (task) {
                case TaskKind::Dewarp: {
                    const DewarpSample s = gen_dewarp_sample(cfg, rng);
                    save_image(s.distorted, stem + "_in.png");
                    Tensor bm({2, uint32_t(s.bm.height), uint32_t(s.bm.width)});
                    std::copy(s.bm.row.begin(), s.bm.row.end(), bm.data.begin());
                    std::copy(s.bm.col.begin(), s.bm.col.end(),
                              bm.data.begin() + ptrdiff_t(s.bm.row.size()));
                    write_tensor(bm, stem + "_bm.drt1");
                    save_image(binary_to_image(s.mask), stem + "_mask.png");
                    rec.input = std::string(name) + "_in.png";
                    rec.target = std::string(name) + "_bm.drt1";
                    rec.aux = std::string(name) + "_mask.png";
                    break;
                }
                case TaskKind::Deshadow:
                case TaskKind::Appearance:
                case TaskKind::Deblur: {
                    const PageRender page = render_page(cfg, rng);
                    const ImagePair pair = task == TaskKind::Deshadow
                                               ? gen_shadow(page.page, cfg, rng)
                                               : task == TaskKind::Appearance
                                                     ? gen_illum(page.page, cfg, rng)
                                                     : gen_blur(page.page, cfg, rng);
                    save_image(pair.degraded, stem + "_in.png");
                    save_image(pair.clean, stem + "_gt.png");
                    rec.input = std::string(name) + "_in.png";
                    rec.target = std::string(name) + "_gt.png";
                    break;
                }
                case TaskKind::Binarize: {
                    const PageRender page = render_page(cfg, rng);
                    const BinarizeSample s = gen_binarize_input(page.page, page.ink, cfg, rng);
                    save_image(s.degraded, stem + "_in.png");
                    save_image(binary_to_image(s.target), stem + "_gt.png");
                    rec.input = std::string(name) + "_in.png";
                    rec.target = std::string(name) + "_gt.png";
                    break;
                }
            }
            manifest.records.push_back(rec);
        }
    }
    const std::string manifest_path = fs::path(out_dir) / "manifest.tsv";
    manifest.save(manifest_path);
    return manifest_path;
}

}  // namespace docres::synth

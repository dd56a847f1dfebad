#include "docres/imgproc.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "docres/errors.hpp"

namespace docres::imgproc {

namespace {

inline int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

void require_gray(const Image& img, const char* op) {
    if (img.channels != 1)
        throw ShapeMismatch(std::string(op) + ": expected a 1-channel image");
}

// Horizontal then vertical running extremum; equals the 2D windowed extremum
// for square windows with replicate padding.
template <typename Cmp>
Image rank_separable(const Image& img, int radius, Cmp better) {
    Image tmp(img.height, img.width, img.channels);
    for (int c = 0; c < img.channels; ++c) {
        for (int i = 0; i < img.height; ++i)
            for (int j = 0; j < img.width; ++j) {
                float best = img.at(i, clampi(j - radius, 0, img.width - 1), c);
                for (int d = -radius + 1; d <= radius; ++d) {
                    const float v = img.at(i, clampi(j + d, 0, img.width - 1), c);
                    if (better(v, best)) best = v;
                }
                tmp.at(i, j, c) = best;
            }
    }
    Image out(img.height, img.width, img.channels);
    for (int c = 0; c < img.channels; ++c) {
        for (int i = 0; i < img.height; ++i)
            for (int j = 0; j < img.width; ++j) {
                float best = tmp.at(clampi(i - radius, 0, img.height - 1), j, c);
                for (int d = -radius + 1; d <= radius; ++d) {
                    const float v = tmp.at(clampi(i + d, 0, img.height - 1), j, c);
                    if (better(v, best)) best = v;
                }
                out.at(i, j, c) = best;
            }
    }
    return out;
}

}  // namespace

Image to_grayscale(const Image& img) {
    if (img.channels == 1) return img;
    if (img.channels != 3) throw ShapeMismatch("to_grayscale: expected 1 or 3 channels");
    Image out(img.height, img.width, 1);
    for (size_t p = 0; p < img.pixel_count(); ++p) {
        const float* px = &img.data[p * 3];
        out.data[p] = 0.299f * px[0] + 0.587f * px[1] + 0.114f * px[2];
    }
    return out;
}

Image sobel_gradient(const Image& gray) {
    require_gray(gray, "sobel_gradient");
    const int h = gray.height, w = gray.width;
    Image out(h, w, 1);
    // max |gx| = |gy| = 4 on unit-interval input, so magnitude <= 4*sqrt(2)
    const float norm = 1.0f / (4.0f * std::sqrt(2.0f));
    for (int i = 0; i < h; ++i) {
        const int im = clampi(i - 1, 0, h - 1), ip = clampi(i + 1, 0, h - 1);
        for (int j = 0; j < w; ++j) {
            const int jm = clampi(j - 1, 0, w - 1), jp = clampi(j + 1, 0, w - 1);
            const float a = gray.at(im, jm), b = gray.at(im, j), c = gray.at(im, jp);
            const float d = gray.at(i, jm), f = gray.at(i, jp);
            const float g = gray.at(ip, jm), hh = gray.at(ip, j), k = gray.at(ip, jp);
            const float gx = (c + 2.0f * f + k) - (a + 2.0f * d + g);
            const float gy = (g + 2.0f * hh + k) - (a + 2.0f * b + c);
            out.at(i, j) = std::sqrt(gx * gx + gy * gy) * norm;
        }
    }
    return out;
}

Image dilate(const Image& img, Kernel2D k) {
    if (k.radius < 1) throw InvalidParam("dilate: radius must be >= 1");
    return rank_separable(img, k.radius, [](float a, float b) { return a > b; });
}

Image erode(const Image& img, Kernel2D k) {
    if (k.radius < 1) throw InvalidParam("erode: radius must be >= 1");
    return rank_separable(img, k.radius, [](float a, float b) { return a < b; });
}

Image median_filter(const Image& img, Kernel2D k) {
    if (k.radius < 1) throw InvalidParam("median_filter: radius must be >= 1");
    const int r = k.radius, h = img.height, w = img.width;
    const int side = 2 * r + 1;
    Image out(h, w, img.channels);
    std::vector<float> window(size_t(side) * side);
    for (int c = 0; c < img.channels; ++c)
        for (int i = 0; i < h; ++i)
            for (int j = 0; j < w; ++j) {
                size_t n = 0;
                for (int di = -r; di <= r; ++di)
                    for (int dj = -r; dj <= r; ++dj)
                        window[n++] = img.at(clampi(i + di, 0, h - 1),
                                             clampi(j + dj, 0, w - 1), c);
                auto mid = window.begin() + n / 2;
                std::nth_element(window.begin(), mid, window.begin() + n);
                out.at(i, j, c) = *mid;
            }
    return out;
}

double IntegralTables::window_sum(int i0, int j0, int i1, int j1) const {
    const int W = width + 1;
    return sum[size_t(i1 + 1) * W + (j1 + 1)] - sum[size_t(i0) * W + (j1 + 1)] -
           sum[size_t(i1 + 1) * W + j0] + sum[size_t(i0) * W + j0];
}

double IntegralTables::window_sq_sum(int i0, int j0, int i1, int j1) const {
    const int W = width + 1;
    return sq[size_t(i1 + 1) * W + (j1 + 1)] - sq[size_t(i0) * W + (j1 + 1)] -
           sq[size_t(i1 + 1) * W + j0] + sq[size_t(i0) * W + j0];
}

IntegralTables integral_images(const Image& gray) {
    require_gray(gray, "integral_images");
    IntegralTables t;
    t.height = gray.height;
    t.width = gray.width;
    const int W = gray.width + 1;
    t.sum.assign(size_t(gray.height + 1) * W, 0.0);
    t.sq.assign(size_t(gray.height + 1) * W, 0.0);
    for (int i = 0; i < gray.height; ++i) {
        double row = 0.0, row_sq = 0.0;
        for (int j = 0; j < gray.width; ++j) {
            const double v = gray.at(i, j);
            row += v;
            row_sq += v * v;
            t.sum[size_t(i + 1) * W + (j + 1)] = t.sum[size_t(i) * W + (j + 1)] + row;
            t.sq[size_t(i + 1) * W + (j + 1)] = t.sq[size_t(i) * W + (j + 1)] + row_sq;
        }
    }
    return t;
}

SauvolaResult sauvola(const Image& gray, int radius, float k, float R) {
    require_gray(gray, "sauvola");
    if (k <= 0.0f || R <= 0.0f) throw InvalidParam("sauvola: k and R must be > 0");
    const int h = gray.height, w = gray.width, r = radius;

    // Replicate-pad so every window has the full (2r+1)^2 support.
    Image padded(h + 2 * r, w + 2 * r, 1);
    for (int i = 0; i < padded.height; ++i)
        for (int j = 0; j < padded.width; ++j)
            padded.at(i, j) = gray.at(clampi(i - r, 0, h - 1), clampi(j - r, 0, w - 1));
    const IntegralTables tables = integral_images(padded);

    const double count = double(2 * r + 1) * (2 * r + 1);
    SauvolaResult res{BinaryMap(h, w), Image(h, w, 1)};
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j) {
            const int pi = i + r, pj = j + r;
            const double s1 = tables.window_sum(pi - r, pj - r, pi + r, pj + r);
            const double s2 = tables.window_sq_sum(pi - r, pj - r, pi + r, pj + r);
            const double mean = s1 / count;
            const double var = std::max(0.0, s2 / count - mean * mean);
            const double stddev = std::sqrt(var);
            const double t = mean * (1.0 + k * (stddev / R - 1.0));
            res.binary.at(i, j) = gray.at(i, j) < t ? 1 : 0;
            res.threshold.at(i, j) = float(std::clamp(t, 0.0, 1.0));
        }
    return res;
}

OtsuResult otsu_threshold(const Image& gray) {
    require_gray(gray, "otsu_threshold");
    uint64_t hist[256] = {0};
    for (float v : gray.data) ++hist[float_to_byte(v)];

    const uint64_t total = gray.pixel_count();
    double weighted_total = 0.0;
    int lo = 255, hi = 0;
    for (int b = 0; b < 256; ++b) {
        weighted_total += double(b) * hist[b];
        if (hist[b]) { lo = std::min(lo, b); hi = std::max(hi, b); }
    }
    if (lo == hi) return {float(lo) / 255.0f, true};

    double best_var = -1.0;
    int best_t = 0;
    uint64_t n0 = 0;
    double sum0 = 0.0;
    for (int t = 0; t < 256; ++t) {
        n0 += hist[t];
        sum0 += double(t) * hist[t];
        const uint64_t n1 = total - n0;
        if (n0 == 0 || n1 == 0) continue;
        const double mu0 = sum0 / n0;
        const double mu1 = (weighted_total - sum0) / n1;
        const double between = double(n0) * double(n1) * (mu0 - mu1) * (mu0 - mu1);
        if (between > best_var) {  // strict: smallest maximizer wins ties
            best_var = between;
            best_t = t;
        }
    }
    return {float(best_t) / 255.0f, false};
}

Image gaussian_blur(const Image& img, float sigma) {
    if (sigma <= 0.0f) throw InvalidParam("gaussian_blur: sigma must be > 0");
    const int r = int(std::ceil(3.0f * sigma));
    std::vector<float> kernel(2 * r + 1);
    double ksum = 0.0;
    for (int d = -r; d <= r; ++d) {
        kernel[d + r] = float(std::exp(-0.5 * double(d) * d / (double(sigma) * sigma)));
        ksum += kernel[d + r];
    }
    for (float& v : kernel) v = float(v / ksum);

    const int h = img.height, w = img.width, ch = img.channels;
    Image tmp(h, w, ch), out(h, w, ch);
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j)
            for (int c = 0; c < ch; ++c) {
                float acc = 0.0f;
                for (int d = -r; d <= r; ++d)
                    acc += kernel[d + r] * img.at(i, clampi(j + d, 0, w - 1), c);
                tmp.at(i, j, c) = acc;
            }
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j)
            for (int c = 0; c < ch; ++c) {
                float acc = 0.0f;
                for (int d = -r; d <= r; ++d)
                    acc += kernel[d + r] * tmp.at(clampi(i + d, 0, h - 1), j, c);
                out.at(i, j, c) = acc;
            }
    return out;
}

Image remap_bilinear(const Image& img, const BackwardMap& bm) {
    const int h = bm.height, w = bm.width, ch = img.channels;
    Image out(h, w, ch);
    const float max_i = float(img.height - 1), max_j = float(img.width - 1);
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j) {
            const size_t p = size_t(i) * w + j;
            float si = std::clamp(bm.row[p], 0.0f, max_i);
            float sj = std::clamp(bm.col[p], 0.0f, max_j);
            const int i0 = int(si), j0 = int(sj);
            const int i1 = std::min(i0 + 1, img.height - 1);
            const int j1 = std::min(j0 + 1, img.width - 1);
            const float fi = si - float(i0), fj = sj - float(j0);
            for (int c = 0; c < ch; ++c) {
                const float top = img.at(i0, j0, c) * (1.0f - fj) + img.at(i0, j1, c) * fj;
                const float bot = img.at(i1, j0, c) * (1.0f - fj) + img.at(i1, j1, c) * fj;
                out.at(i, j, c) = top * (1.0f - fi) + bot * fi;
            }
        }
    return out;
}

Image resize_bilinear(const Image& img, int h2, int w2) {
    if (h2 < 1 || w2 < 1) throw InvalidParam("resize_bilinear: extents must be >= 1");
    BackwardMap bm(h2, w2);
    const float si = h2 > 1 ? float(img.height - 1) / float(h2 - 1) : 0.0f;
    const float sj = w2 > 1 ? float(img.width - 1) / float(w2 - 1) : 0.0f;
    for (int i = 0; i < h2; ++i)
        for (int j = 0; j < w2; ++j) {
            bm.row[size_t(i) * w2 + j] = float(i) * si;
            bm.col[size_t(i) * w2 + j] = float(j) * sj;
        }
    return remap_bilinear(img, bm);
}

Components connected_components(const BinaryMap& bm) {
    const int h = bm.height, w = bm.width;
    Components comp;
    comp.labels.assign(size_t(h) * w, 0);
    std::vector<size_t> stack;
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j) {
            const size_t p = size_t(i) * w + j;
            if (!bm.data[p] || comp.labels[p]) continue;
            const int32_t label = ++comp.count;
            size_t size = 0;
            stack.push_back(p);
            comp.labels[p] = label;
            while (!stack.empty()) {
                const size_t q = stack.back();
                stack.pop_back();
                ++size;
                const int qi = int(q / w), qj = int(q % w);
                for (int di = -1; di <= 1; ++di)
                    for (int dj = -1; dj <= 1; ++dj) {
                        const int ni = qi + di, nj = qj + dj;
                        if (ni < 0 || ni >= h || nj < 0 || nj >= w) continue;
                        const size_t np = size_t(ni) * w + nj;
                        if (bm.data[np] && !comp.labels[np]) {
                            comp.labels[np] = label;
                            stack.push_back(np);
                        }
                    }
            }
            comp.sizes.push_back(size);
        }
    return comp;
}

BinaryMap skeletonize(const BinaryMap& bm) {
    const int h = bm.height, w = bm.width;
    BinaryMap img = bm;
    auto px = [&](int i, int j) -> int {
        if (i < 0 || i >= h || j < 0 || j >= w) return 0;
        return img.at(i, j);
    };
    std::vector<size_t> marks;
    bool changed = true;
    while (changed) {
        changed = false;
        for (int phase = 0; phase < 2; ++phase) {
            marks.clear();
            for (int i = 0; i < h; ++i)
                for (int j = 0; j < w; ++j) {
                    if (!img.at(i, j)) continue;
                    // neighbors p2..p9: N, NE, E, SE, S, SW, W, NW
                    const int p[8] = {px(i - 1, j), px(i - 1, j + 1), px(i, j + 1),
                                      px(i + 1, j + 1), px(i + 1, j), px(i + 1, j - 1),
                                      px(i, j - 1), px(i - 1, j - 1)};
                    int b = 0, a = 0;
                    for (int n = 0; n < 8; ++n) {
                        b += p[n];
                        if (p[n] == 0 && p[(n + 1) % 8] == 1) ++a;
                    }
                    if (b < 2 || b > 6 || a != 1) continue;
                    const bool ok = phase == 0
                        ? (p[0] * p[2] * p[4] == 0 && p[2] * p[4] * p[6] == 0)
                        : (p[0] * p[2] * p[6] == 0 && p[0] * p[4] * p[6] == 0);
                    if (ok) marks.push_back(size_t(i) * w + j);
                }
            for (size_t m : marks) img.data[m] = 0;
            if (!marks.empty()) changed = true;
        }
    }
    return img;
}

}  // namespace docres::imgproc

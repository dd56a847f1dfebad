#include "docres/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "docres/errors.hpp"
#include "docres/imgproc.hpp"

namespace docres::metrics {

namespace {

void require_same_extent(const Image& a, const Image& b, const char* op) {
    if (!a.same_extent(b) || a.channels != b.channels)
        throw ShapeMismatch(std::string(op) + ": extent/channel mismatch");
}

// 11-tap Gaussian window, sigma 1.5, replicate padding ('same' extents).
Image ssim_window_filter(const Image& img) {
    constexpr int R = 5;
    static const std::vector<float> kernel = [] {
        std::vector<float> k(2 * R + 1);
        double sum = 0.0;
        for (int d = -R; d <= R; ++d) {
            k[size_t(d + R)] = float(std::exp(-0.5 * d * d / (1.5 * 1.5)));
            sum += k[size_t(d + R)];
        }
        for (float& v : k) v = float(v / sum);
        return k;
    }();

    const int h = img.height, w = img.width;
    Image tmp(h, w, 1), out(h, w, 1);
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j) {
            float acc = 0.0f;
            for (int d = -R; d <= R; ++d)
                acc += kernel[size_t(d + R)] * img.at(i, std::clamp(j + d, 0, w - 1));
            tmp.at(i, j) = acc;
        }
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j) {
            float acc = 0.0f;
            for (int d = -R; d <= R; ++d)
                acc += kernel[size_t(d + R)] * tmp.at(std::clamp(i + d, 0, h - 1), j);
            out.at(i, j) = acc;
        }
    return out;
}

Image elementwise_mul(const Image& a, const Image& b) {
    Image out(a.height, a.width, 1);
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = a.data[i] * b.data[i];
    return out;
}

double ssim_gray(const Image& x, const Image& y) {
    constexpr double C1 = 0.01 * 0.01, C2 = 0.03 * 0.03;  // L = 1
    const Image mu_x = ssim_window_filter(x);
    const Image mu_y = ssim_window_filter(y);
    const Image xx = ssim_window_filter(elementwise_mul(x, x));
    const Image yy = ssim_window_filter(elementwise_mul(y, y));
    const Image xy = ssim_window_filter(elementwise_mul(x, y));

    double acc = 0.0;
    for (size_t p = 0; p < x.data.size(); ++p) {
        const double mx = mu_x.data[p], my = mu_y.data[p];
        const double sx = xx.data[p] - mx * mx;
        const double sy = yy.data[p] - my * my;
        const double sxy = xy.data[p] - mx * my;
        acc += ((2.0 * mx * my + C1) * (2.0 * sxy + C2)) /
               ((mx * mx + my * my + C1) * (sx + sy + C2));
    }
    return acc / double(x.data.size());
}

// Gaussian prefilter + 2x2 average pool.
Image downsample2(const Image& img) {
    const Image smooth = imgproc::gaussian_blur(img, 1.0f);
    const int h = img.height / 2, w = img.width / 2;
    Image out(h, w, img.channels);
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j)
            for (int c = 0; c < img.channels; ++c)
                out.at(i, j, c) = 0.25f * (smooth.at(2 * i, 2 * j, c) +
                                           smooth.at(2 * i, 2 * j + 1, c) +
                                           smooth.at(2 * i + 1, 2 * j, c) +
                                           smooth.at(2 * i + 1, 2 * j + 1, c));
    return out;
}

std::pair<Image, Image> resize_to_eval(const Image& dewarped, const Image& gt) {
    require_same_extent(dewarped, gt, "dewarping evaluation");
    const double scale = 512.0 / std::max(dewarped.height, dewarped.width);
    const int h = std::max(1, int(std::lround(dewarped.height * scale)));
    const int w = std::max(1, int(std::lround(dewarped.width * scale)));
    return {imgproc::resize_bilinear(dewarped, h, w), imgproc::resize_bilinear(gt, h, w)};
}

// Least-squares fit v(i,j) ~ a + b*i + c*j over listed pixels.
std::array<double, 3> fit_affine_1d(const std::vector<float>& v, int h, int w,
                                    int border) {
    double A[3][3] = {{0}}, rhs[3] = {0};
    for (int i = border; i < h - border; ++i)
        for (int j = border; j < w - border; ++j) {
            const double basis[3] = {1.0, double(i), double(j)};
            const double val = v[size_t(i) * w + j];
            for (int r = 0; r < 3; ++r) {
                for (int c = 0; c < 3; ++c) A[r][c] += basis[r] * basis[c];
                rhs[r] += basis[r] * val;
            }
        }
    // 3x3 Gaussian elimination with partial pivoting
    int perm[3] = {0, 1, 2};
    for (int col = 0; col < 3; ++col) {
        int piv = col;
        for (int r = col + 1; r < 3; ++r)
            if (std::fabs(A[perm[r]][col]) > std::fabs(A[perm[piv]][col])) piv = r;
        std::swap(perm[col], perm[piv]);
        const double d = A[perm[col]][col];
        if (std::fabs(d) < 1e-12) return {0.0, 0.0, 0.0};
        for (int r = col + 1; r < 3; ++r) {
            const double f = A[perm[r]][col] / d;
            for (int c = col; c < 3; ++c) A[perm[r]][c] -= f * A[perm[col]][c];
            rhs[perm[r]] -= f * rhs[perm[col]];
        }
    }
    std::array<double, 3> out{};
    for (int col = 2; col >= 0; --col) {
        double s = rhs[perm[col]];
        for (int c = col + 1; c < 3; ++c) s -= A[perm[col]][c] * out[size_t(c)];
        out[size_t(col)] = s / A[perm[col]][col];
    }
    return out;
}

std::string format_metric(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

}  // namespace

double psnr(const Image& a, const Image& b) {
    require_same_extent(a, b, "psnr");
    double mse = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) {
        const double d = double(a.data[i]) - b.data[i];
        mse += d * d;
    }
    mse /= double(a.data.size());
    if (mse <= 0.0) return 99.0;
    return std::min(99.0, 10.0 * std::log10(1.0 / mse));
}

double ssim(const Image& a, const Image& b) {
    if (!a.same_extent(b)) throw ShapeMismatch("ssim: extent mismatch");
    return ssim_gray(imgproc::to_grayscale(a), imgproc::to_grayscale(b));
}

MsSsimResult ms_ssim(const Image& a, const Image& b) {
    if (!a.same_extent(b)) throw ShapeMismatch("ms_ssim: extent mismatch");
    static const double weights[5] = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};

    // Standard 5 scales need min extent >= 176 = 11 * 2^4.
    int scales = 1;
    while (scales < 5 && std::min(a.height, a.width) >= 11 * (1 << scales)) ++scales;

    double wsum = 0.0;
    for (int s = 0; s < scales; ++s) wsum += weights[s];

    MsSsimResult resimpl;
    resimpl.scales = scales;
    Image xa = imgproc::to_grayscale(a), xb = imgproc::to_grayscale(b);
    double value = 1.0;
    for (int s = 0; s < scales; ++s) {
        const double level = std::max(ssim_gray(xa, xb), 1e-6);
        value *= std::pow(level, weights[s] / wsum);
        if (s + 1 < scales) {
            xa = downsample2(xa);
            xb = downsample2(xb);
        }
    }
    resimpl.value = value;
    return resimpl;
}

FMeasure f_measure(const BinaryMap& pred, const BinaryMap& gt) {
    if (pred.height != gt.height || pred.width != gt.width)
        throw ShapeMismatch("f_measure: extent mismatch");
    size_t tp = 0, fp = 0, fn = 0;
    for (size_t i = 0; i < pred.data.size(); ++i) {
        if (pred.data[i] && gt.data[i]) ++tp;
        else if (pred.data[i]) ++fp;
        else if (gt.data[i]) ++fn;
    }
    FMeasure r;
    r.precision = fp == 0 ? 1.0 : double(tp) / double(tp + fp);
    r.recall = fn == 0 ? 1.0 : double(tp) / double(tp + fn);
    r.fm = r.precision + r.recall == 0.0
               ? 0.0
               : 2.0 * r.precision * r.recall / (r.precision + r.recall);
    return r;
}

double pseudo_f_measure(const BinaryMap& pred, const BinaryMap& gt) {
    const BinaryMap skel = imgproc::skeletonize(gt);
    const size_t skel_px = skel.count_ones();
    if (skel_px == 0) throw DegenerateInput("pseudo_f_measure: empty ground-truth skeleton");
    size_t hit = 0;
    for (size_t i = 0; i < skel.data.size(); ++i)
        if (skel.data[i] && pred.data[i]) ++hit;
    const double p_recall = double(hit) / double(skel_px);
    const double precision = f_measure(pred, gt).precision;
    if (precision + p_recall == 0.0) return 0.0;
    return 2.0 * precision * p_recall / (precision + p_recall);
}

FlowField dense_flow(const Image& a, const Image& b, const FlowConfig& cfg) {
    if (!a.same_extent(b)) throw ShapeMismatch("dense_flow: extent mismatch");
    std::vector<Image> pyr_a{imgproc::to_grayscale(a)}, pyr_b{imgproc::to_grayscale(b)};
    for (int l = 1; l < cfg.pyramid; ++l) {
        if (std::min(pyr_a.back().height, pyr_a.back().width) < 2 * cfg.block) break;
        pyr_a.push_back(downsample2(pyr_a.back()));
        pyr_b.push_back(downsample2(pyr_b.back()));
    }

    FlowField flow;  // per-pixel, at current pyramid level
    for (int level = int(pyr_a.size()) - 1; level >= 0; --level) {
        const Image& la = pyr_a[size_t(level)];
        const Image& lb = pyr_b[size_t(level)];
        const int h = la.height, w = la.width, B = std::min({cfg.block, h, w});
        const int nby = (h + B - 1) / B, nbx = (w + B - 1) / B;

        // Prior per-pixel flow from the coarser level, upsampled and doubled.
        FlowField prior(h, w);
        if (level < int(pyr_a.size()) - 1) {
            Image fy(flow.height, flow.width, 1), fx(flow.height, flow.width, 1);
            fy.data = flow.dy;
            fx.data = flow.dx;
            const Image uy = imgproc::resize_bilinear(fy, h, w);
            const Image ux = imgproc::resize_bilinear(fx, h, w);
            for (size_t p = 0; p < prior.dy.size(); ++p) {
                prior.dy[p] = 2.0f * uy.data[p];
                prior.dx[p] = 2.0f * ux.data[p];
            }
        }

        std::vector<float> block_dy(size_t(nby) * nbx), block_dx(block_dy.size());
        std::vector<int> cy(nby, 0);
        std::vector<int> cx(nbx, 0);
        for (int by = 0; by < nby; ++by)
            for (int bx = 0; bx < nbx; ++bx) {
                const int y0 = std::min(by * B, h - B), x0 = std::min(bx * B, w - B);
                cy[size_t(by)] = y0 + B / 2;
                cx[size_t(bx)] = x0 + B / 2;
                const size_t cpx = size_t(y0 + B / 2) * w + (x0 + B / 2);
                int py = int(std::lround(prior.dy[cpx]));
                int px = int(std::lround(prior.dx[cpx]));
                py = std::clamp(py, -(y0), h - B - y0);
                px = std::clamp(px, -(x0), w - B - x0);

                auto sad = [&](int dy, int dx) {
                    double s = 0.0;
                    for (int i = 0; i < B; ++i)
                        for (int j = 0; j < B; ++j)
                            s += std::fabs(double(la.at(y0 + i, x0 + j)) -
                                           lb.at(y0 + dy + i, x0 + dx + j));
                    return s;
                };
                int best_y = py, best_x = px;
                double best = sad(py, px);
                for (int dy = py - cfg.search; dy <= py + cfg.search; ++dy) {
                    if (y0 + dy < 0 || y0 + dy + B > h) continue;
                    for (int dx = px - cfg.search; dx <= px + cfg.search; ++dx) {
                        if (x0 + dx < 0 || x0 + dx + B > w) continue;
                        const double s = sad(dy, dx);
                        if (s < best) {
                            best = s;
                            best_y = dy;
                            best_x = dx;
                        }
                    }
                }
                block_dy[size_t(by) * nbx + bx] = float(best_y);
                block_dx[size_t(by) * nbx + bx] = float(best_x);
            }

        // Bilinear interpolation between (possibly irregular) block centers.
        flow = FlowField(h, w);
        for (int i = 0; i < h; ++i) {
            int by = 0;
            while (by + 1 < nby && cy[size_t(by) + 1] <= i) ++by;
            const int by1 = std::min(by + 1, nby - 1);
            const float fy = by1 == by ? 0.0f
                                       : std::clamp(float(i - cy[size_t(by)]) /
                                                        float(cy[size_t(by1)] - cy[size_t(by)]),
                                                    0.0f, 1.0f);
            for (int j = 0; j < w; ++j) {
                int bx = 0;
                while (bx + 1 < nbx && cx[size_t(bx) + 1] <= j) ++bx;
                const int bx1 = std::min(bx + 1, nbx - 1);
                const float fx = bx1 == bx
                                     ? 0.0f
                                     : std::clamp(float(j - cx[size_t(bx)]) /
                                                      float(cx[size_t(bx1)] - cx[size_t(bx)]),
                                                  0.0f, 1.0f);
                auto lerp2 = [&](const std::vector<float>& f) {
                    const float a00 = f[size_t(by) * nbx + bx], a01 = f[size_t(by) * nbx + bx1];
                    const float a10 = f[size_t(by1) * nbx + bx], a11 = f[size_t(by1) * nbx + bx1];
                    return (a00 * (1 - fx) + a01 * fx) * (1 - fy) +
                           (a10 * (1 - fx) + a11 * fx) * fy;
                };
                flow.dy[size_t(i) * w + j] = lerp2(block_dy);
                flow.dx[size_t(i) * w + j] = lerp2(block_dx);
            }
        }
    }
    return flow;
}

double local_distortion(const Image& dewarped, const Image& gt) {
    const auto [dw, ref] = resize_to_eval(dewarped, gt);
    const FlowField flow = dense_flow(dw, ref);
    const int border = 8;
    double acc = 0.0;
    size_t n = 0;
    for (int i = border; i < flow.height - border; ++i)
        for (int j = border; j < flow.width - border; ++j) {
            const size_t p = size_t(i) * flow.width + j;
            acc += std::sqrt(double(flow.dy[p]) * flow.dy[p] +
                             double(flow.dx[p]) * flow.dx[p]);
            ++n;
        }
    return n ? acc / double(n) : 0.0;
}

double align_distortion(const Image& dewarped, const Image& gt) {
    const auto [dw, ref] = resize_to_eval(dewarped, gt);
    const FlowField flow = dense_flow(dw, ref);
    const int border = 8, h = flow.height, w = flow.width;

    const auto ay = fit_affine_1d(flow.dy, h, w, border);
    const auto ax = fit_affine_1d(flow.dx, h, w, border);

    const Image grad = imgproc::sobel_gradient(imgproc::to_grayscale(ref));
    double wsum = 0.0;
    for (int i = border; i < h - border; ++i)
        for (int j = border; j < w - border; ++j) wsum += grad.at(i, j);
    if (wsum <= 0.0) return 0.0;  // textureless reference carries no signal

    const double diag = std::sqrt(double(h) * h + double(w) * w);
    double acc = 0.0;
    for (int i = border; i < h - border; ++i)
        for (int j = border; j < w - border; ++j) {
            const size_t p = size_t(i) * w + j;
            const double ry = flow.dy[p] - (ay[0] + ay[1] * i + ay[2] * j);
            const double rx = flow.dx[p] - (ax[0] + ax[1] * i + ax[2] * j);
            acc += grad.at(i, j) / wsum * std::sqrt(ry * ry + rx * rx);
        }
    return acc / diag;
}

std::string MetricReport::to_text() const {
    std::string out;
    for (const auto& [name, value] : metrics)
        out += name + "\t" + format_metric(value) + "\n";
    for (const auto& note : notes) out += "# " + note + "\n";
    return out;
}

double MetricReport::get(const std::string& name) const {
    for (const auto& [n, v] : metrics)
        if (n == name) return v;
    throw InvalidParam("metric not in report: " + name);
}

MetricReport evaluate(TaskKind task, const std::vector<Image>& preds,
                      const std::vector<Image>& gts) {
    if (task == TaskKind::Dewarp || task == TaskKind::Binarize)
        throw InvalidParam("evaluate: image overload is for deshadow/appearance/deblur");
    if (preds.empty() || preds.size() != gts.size())
        throw ShapeMismatch("evaluate: empty or mismatched sample lists");
    double s = 0.0, p = 0.0;
    for (size_t i = 0; i < preds.size(); ++i) {
        s += ssim(preds[i], gts[i]);
        p += psnr(preds[i], gts[i]);
    }
    MetricReport rep;
    rep.samples = int(preds.size());
    rep.metrics = {{"ssim", s / double(preds.size())}, {"psnr", p / double(preds.size())}};
    return rep;
}

MetricReport evaluate(const std::vector<BinaryMap>& preds, const std::vector<BinaryMap>& gts) {
    if (preds.empty() || preds.size() != gts.size())
        throw ShapeMismatch("evaluate: empty or mismatched sample lists");
    double fm = 0.0, pfm = 0.0, p = 0.0;
    for (size_t i = 0; i < preds.size(); ++i) {
        fm += f_measure(preds[i], gts[i]).fm;
        pfm += pseudo_f_measure(preds[i], gts[i]);
        p += psnr(binary_to_image(preds[i]), binary_to_image(gts[i]));
    }
    MetricReport rep;
    rep.samples = int(preds.size());
    rep.metrics = {{"fm", fm / double(preds.size())},
                   {"pfm", pfm / double(preds.size())},
                   {"psnr", p / double(preds.size())}};
    return rep;
}

MetricReport evaluate(const std::vector<Image>& inputs, const std::vector<BackwardMap>& bms,
                      const std::vector<Image>& flat_refs) {
    if (inputs.empty() || inputs.size() != bms.size() || inputs.size() != flat_refs.size())
        throw ShapeMismatch("evaluate: empty or mismatched sample lists");
    double ms = 0.0, ld = 0.0, ad = 0.0;
    int min_scales = 5;
    for (size_t i = 0; i < inputs.size(); ++i) {
        const Image dewarped = imgproc::remap_bilinear(inputs[i], bms[i]);
        const MsSsimResult m = ms_ssim(dewarped, flat_refs[i]);
        min_scales = std::min(min_scales, m.scales);
        ms += m.value;
        ld += local_distortion(dewarped, flat_refs[i]);
        ad += align_distortion(dewarped, flat_refs[i]);
    }
    MetricReport rep;
    rep.samples = int(inputs.size());
    rep.metrics = {{"msssim", ms / double(inputs.size())},
                   {"ld", ld / double(inputs.size())},
                   {"ad", ad / double(inputs.size())}};
    if (min_scales < 5)
        rep.notes.push_back("msssim used " + std::to_string(min_scales) +
                            " scales (small images)");
    return rep;
}

}  // namespace docres::metrics

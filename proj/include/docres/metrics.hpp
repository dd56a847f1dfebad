#pragma once

#include <string>
#include <utility>
#include <vector>

#include "docres/image.hpp"
#include "docres/task.hpp"

namespace docres::metrics {

// 10*log10(1/MSE) on unit-interval data, capped at 99.0 dB.
double psnr(const Image& a, const Image& b);

// Grayscale SSIM, 11x11 Gaussian window sigma 1.5, K1=0.01 K2=0.03, L=1.
double ssim(const Image& a, const Image& b);

struct MsSsimResult {
    double value = 0.0;
    int scales = 5;  // < 5 when the image is too small for the standard pyramid
};
// Product over scales of per-scale SSIM raised to the Wang et al. exponents
// (renormalized when fewer scales fit).
MsSsimResult ms_ssim(const Image& a, const Image& b);

struct FMeasure {
    double fm = 0.0, precision = 0.0, recall = 0.0;
};
FMeasure f_measure(const BinaryMap& pred, const BinaryMap& gt);

// F-measure with recall replaced by skeleton pseudo-recall.
double pseudo_f_measure(const BinaryMap& pred, const BinaryMap& gt);

struct FlowConfig {
    int block = 8;
    int search = 10;
    int pyramid = 3;
};
// Coarse-to-fine block matching; per-block integer SAD minimum refined around
// the upsampled coarser flow, bilinearly interpolated between block centers.
FlowField dense_flow(const Image& a, const Image& b, const FlowConfig& cfg = {});

// Mean flow magnitude between dewarped and ground truth, 8-px border and
// resize-to-512 convention.
double local_distortion(const Image& dewarped, const Image& gt);

// Local distortion with a fitted global affine removed and residuals weighted
// by ground-truth gradient magnitude, normalized by the image diagonal.
double align_distortion(const Image& dewarped, const Image& gt);

struct MetricReport {
    std::vector<std::pair<std::string, double>> metrics;
    int samples = 0;
    std::vector<std::string> notes;

    std::string to_text() const;  // "metric<TAB>value" lines, 6 decimals
    double get(const std::string& name) const;
};

// Table-style per-task metric sets, averaged over samples.
MetricReport evaluate(TaskKind task, const std::vector<Image>& preds,
                      const std::vector<Image>& gts);                      // SSIM / PSNR
MetricReport evaluate(const std::vector<BinaryMap>& preds,
                      const std::vector<BinaryMap>& gts);                  // FM / pFM / PSNR
MetricReport evaluate(const std::vector<Image>& inputs,
                      const std::vector<BackwardMap>& bms,
                      const std::vector<Image>& flat_refs);                // MS-SSIM / LD / AD

}  // namespace docres::metrics

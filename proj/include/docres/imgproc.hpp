#pragma once

#include <vector>

#include "docres/image.hpp"

namespace docres::imgproc {

// Square structuring element of side 2*radius+1.
struct Kernel2D {
    int radius = 1;
};

// Per-pixel Sauvola threshold, clamped to [0,1].
using ThresholdMap = Image;

Image to_grayscale(const Image& img);

// Sobel magnitude normalized by 4*sqrt(2) so unit-interval input maps to [0,1].
Image sobel_gradient(const Image& gray);

Image dilate(const Image& gray, Kernel2D k);
Image erode(const Image& gray, Kernel2D k);
Image median_filter(const Image& img, Kernel2D k);

// (H+1)x(W+1) double-precision prefix tables, zero first row/column.
struct IntegralTables {
    int height = 0, width = 0;
    std::vector<double> sum, sq;

    double window_sum(int i0, int j0, int i1, int j1) const;     // inclusive corners
    double window_sq_sum(int i0, int j0, int i1, int j1) const;
};
IntegralTables integral_images(const Image& gray);

struct SauvolaResult {
    BinaryMap binary;        // 1 where pixel < threshold (ink is dark)
    ThresholdMap threshold;  // clamp(T, 0, 1)
};
// T = m * (1 + k*(s/R - 1)) over a (2*radius+1)^2 replicate-padded window.
SauvolaResult sauvola(const Image& gray, int radius = 12, float k = 0.2f, float R = 0.5f);

struct OtsuResult {
    float threshold = 0.0f;  // bin/255
    bool degenerate = false; // constant input; threshold is that constant
};
OtsuResult otsu_threshold(const Image& gray);

Image gaussian_blur(const Image& img, float sigma);

// output(i,j) = bilinear sample of img at bm(i,j); coordinates clamped to the
// source rectangle.
Image remap_bilinear(const Image& img, const BackwardMap& bm);

// Corner-aligned bilinear resampling.
Image resize_bilinear(const Image& img, int h2, int w2);

struct Components {
    std::vector<int32_t> labels;   // 0 = background, components dense from 1
    std::vector<size_t> sizes;     // sizes[k-1] = pixel count of label k
    int count = 0;
};
// 8-connected labeling, first-encounter label order.
Components connected_components(const BinaryMap& bm);

// Zhang-Suen thinning to a 1-px skeleton.
BinaryMap skeletonize(const BinaryMap& bm);

}  // namespace docres::imgproc

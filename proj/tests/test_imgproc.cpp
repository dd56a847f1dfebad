#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "docres/errors.hpp"
#include "docres/imgproc.hpp"
#include "docres/rng.hpp"

using namespace docres;
using namespace docres::imgproc;

namespace {

Image random_image(int h, int w, int c, uint64_t seed) {
    Image img(h, w, c);
    Rng rng(seed);
    for (float& v : img.data) v = float(rng.next_f64());
    return img;
}

int clampi(int v, int lo, int hi) { return std::clamp(v, lo, hi); }

// Brute-force windowed rank filter over the replicate-padded image.
Image naive_rank(const Image& img, int r, bool take_max) {
    Image out(img.height, img.width, img.channels);
    for (int c = 0; c < img.channels; ++c)
        for (int i = 0; i < img.height; ++i)
            for (int j = 0; j < img.width; ++j) {
                float best = take_max ? -1e9f : 1e9f;
                for (int di = -r; di <= r; ++di)
                    for (int dj = -r; dj <= r; ++dj) {
                        const float v = img.at(clampi(i + di, 0, img.height - 1),
                                               clampi(j + dj, 0, img.width - 1), c);
                        best = take_max ? std::max(best, v) : std::min(best, v);
                    }
                out.at(i, j, c) = best;
            }
    return out;
}

Image naive_median(const Image& img, int r) {
    Image out(img.height, img.width, img.channels);
    std::vector<float> window;
    for (int c = 0; c < img.channels; ++c)
        for (int i = 0; i < img.height; ++i)
            for (int j = 0; j < img.width; ++j) {
                window.clear();
                for (int di = -r; di <= r; ++di)
                    for (int dj = -r; dj <= r; ++dj)
                        window.push_back(img.at(clampi(i + di, 0, img.height - 1),
                                                clampi(j + dj, 0, img.width - 1), c));
                std::sort(window.begin(), window.end());
                out.at(i, j, c) = window[window.size() / 2];
            }
    return out;
}

// Windowed mean/std over the replicate-padded image, direct summation.
void naive_window_stats(const Image& img, int r, int i, int j, double& mean, double& stddev) {
    double s1 = 0.0, s2 = 0.0;
    const double n = double(2 * r + 1) * (2 * r + 1);
    for (int di = -r; di <= r; ++di)
        for (int dj = -r; dj <= r; ++dj) {
            const double v = img.at(clampi(i + di, 0, img.height - 1),
                                    clampi(j + dj, 0, img.width - 1));
            s1 += v;
            s2 += v * v;
        }
    mean = s1 / n;
    stddev = std::sqrt(std::max(0.0, s2 / n - mean * mean));
}

void flood_fill(const BinaryMap& bm, std::vector<int>& labels, int i, int j, int label) {
    if (i < 0 || i >= bm.height || j < 0 || j >= bm.width) return;
    const size_t p = size_t(i) * bm.width + j;
    if (!bm.data[p] || labels[p]) return;
    labels[p] = label;
    for (int di = -1; di <= 1; ++di)
        for (int dj = -1; dj <= 1; ++dj) flood_fill(bm, labels, i + di, j + dj, label);
}

int flood_fill_count(const BinaryMap& bm) {
    std::vector<int> labels(bm.data.size(), 0);
    int count = 0;
    for (int i = 0; i < bm.height; ++i)
        for (int j = 0; j < bm.width; ++j)
            if (bm.data[size_t(i) * bm.width + j] && !labels[size_t(i) * bm.width + j])
                flood_fill(bm, labels, i, j, ++count);
    return count;
}

}  // namespace

TEST_CASE("grayscale luma weights") {
    Image img(1, 3, 3);
    img.at(0, 0, 0) = 1.0f;                                     // pure red
    img.at(0, 1, 0) = img.at(0, 1, 1) = img.at(0, 1, 2) = 1.0f; // white
    img.at(0, 2, 0) = img.at(0, 2, 1) = img.at(0, 2, 2) = 0.3f;
    const Image g = to_grayscale(img);
    CHECK(g.data[0] == doctest::Approx(0.299f));
    CHECK(g.data[1] == doctest::Approx(1.0f));
    CHECK(g.data[2] == doctest::Approx(0.3f));
    const Image gray = random_image(4, 4, 1, 3);
    CHECK(to_grayscale(gray).data == gray.data);
}

TEST_CASE("sobel: constant image has zero gradient") {
    const Image img(5, 7, 1, 0.42f);
    for (float v : sobel_gradient(img).data) CHECK(v == doctest::Approx(0.0f));
}

TEST_CASE("sobel: horizontal ramp interior response is 8/(w-1)") {
    const int w = 5;
    Image img(3, w, 1);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < w; ++j) img.at(i, j) = float(j) / float(w - 1);
    const Image g = sobel_gradient(img);
    // hand-convolved x kernel on the ramp: (1+2+1) * 2/(w-1) = 8/(w-1); gy = 0
    const float expected = (8.0f / float(w - 1)) / (4.0f * std::sqrt(2.0f));
    for (int i = 0; i < 3; ++i)
        for (int j = 1; j < w - 1; ++j) CHECK(g.at(i, j) == doctest::Approx(expected));
}

TEST_CASE("sobel output bounded in [0,1]") {
    const Image img = random_image(17, 13, 1, 11);
    for (float v : sobel_gradient(img).data) {
        REQUIRE(v >= 0.0f);
        REQUIRE(v <= 1.0f);
    }
}

TEST_CASE("dilate: single bright pixel grows to a 3x3 block") {
    Image img(7, 7, 1, 0.0f);
    img.at(3, 3) = 1.0f;
    const Image d = dilate(img, {1});
    for (int i = 0; i < 7; ++i)
        for (int j = 0; j < 7; ++j) {
            const bool inside = std::abs(i - 3) <= 1 && std::abs(j - 3) <= 1;
            CHECK(d.at(i, j) == (inside ? 1.0f : 0.0f));
        }
}

TEST_CASE("rank filters fix constants") {
    const Image img(6, 6, 1, 0.37f);
    CHECK(dilate(img, {2}).data == img.data);
    CHECK(erode(img, {2}).data == img.data);
    CHECK(median_filter(img, {1}).data == img.data);
}

TEST_CASE("closing removes strokes thinner than the window") {
    // 1-px dark strokes on a bright page, spaced wider than the window
    Image img(20, 20, 1, 0.9f);
    for (int i = 0; i < 20; ++i)
        for (int j = 4; j < 20; j += 5) img.at(i, j) = 0.1f;
    const Image closed = erode(dilate(img, {1}), {1});
    for (float v : closed.data) CHECK(v == 0.9f);
}

TEST_CASE("dilate/erode/median equal brute-force oracles on random inputs") {
    for (uint64_t seed = 0; seed < 4; ++seed) {
        Rng sz(seed + 50);
        const int h = 8 + int(sz.next_range(25)), w = 8 + int(sz.next_range(25));
        const Image img = random_image(h, w, 1, seed);
        for (int r : {1, 2, 3}) {
            CHECK(dilate(img, {r}).data == naive_rank(img, r, true).data);
            CHECK(erode(img, {r}).data == naive_rank(img, r, false).data);
            CHECK(median_filter(img, {r}).data == naive_median(img, r).data);
        }
    }
}

TEST_CASE("dilate extensive, erode anti-extensive, both monotone") {
    const Image a = random_image(14, 14, 1, 21);
    Image b = a;
    for (float& v : b.data) v = std::min(1.0f, v + 0.05f);  // b >= a pointwise
    const Image da = dilate(a, {2}), db = dilate(b, {2});
    const Image ea = erode(a, {2}), eb = erode(b, {2});
    for (size_t i = 0; i < a.data.size(); ++i) {
        CHECK(da.data[i] >= a.data[i]);
        CHECK(ea.data[i] <= a.data[i]);
        CHECK(db.data[i] >= da.data[i]);
        CHECK(eb.data[i] >= ea.data[i]);
    }
}

TEST_CASE("median removes a single outlier") {
    Image img(5, 5, 1, 0.5f);
    img.at(2, 2) = 1.0f;
    CHECK(median_filter(img, {1}).at(2, 2) == 0.5f);
}

TEST_CASE("integral tables: window sums match naive summation") {
    Image ones(3, 3, 1, 1.0f);
    CHECK(integral_images(ones).window_sum(0, 0, 2, 2) == doctest::Approx(9.0));

    const Image img = random_image(32, 32, 1, 4);
    const IntegralTables t = integral_images(img);
    Rng rng(5);
    for (int n = 0; n < 50; ++n) {
        int i0 = int(rng.next_range(32)), i1 = int(rng.next_range(32));
        int j0 = int(rng.next_range(32)), j1 = int(rng.next_range(32));
        if (i0 > i1) std::swap(i0, i1);
        if (j0 > j1) std::swap(j0, j1);
        double naive = 0.0;
        for (int i = i0; i <= i1; ++i)
            for (int j = j0; j <= j1; ++j) naive += img.at(i, j);
        CHECK(t.window_sum(i0, j0, i1, j1) == doctest::Approx(naive).epsilon(1e-9));
    }

    const Image c(9, 9, 1, 0.6f);
    const IntegralTables tc = integral_images(c);
    const double n = 81.0;
    const double var = tc.window_sq_sum(0, 0, 8, 8) / n -
                       (tc.window_sum(0, 0, 8, 8) / n) * (tc.window_sum(0, 0, 8, 8) / n);
    CHECK(std::fabs(var) < 1e-12);
}

TEST_CASE("sauvola: zero-variance window evaluates the closed form") {
    // constant 0.5 image: s = 0 -> T = 0.5 * (1 - k) = 0.4
    const Image img(9, 9, 1, 0.5f);
    const auto res = sauvola(img, 2, 0.2f, 0.5f);
    for (float v : res.threshold.data) CHECK(v == doctest::Approx(0.4).epsilon(1e-6));
    for (uint8_t b : res.binary.data) CHECK(b == 0);  // 0.5 is not < 0.4
}

TEST_CASE("sauvola separates dark strokes from a white page") {
    Image img(40, 40, 1, 0.95f);
    for (int i = 5; i < 35; i += 6)
        for (int j = 5; j < 35; ++j) img.at(i, j) = 0.0f;
    const auto res = sauvola(img, 12, 0.2f, 0.5f);
    for (int i = 0; i < 40; ++i)
        for (int j = 0; j < 40; ++j)
            CHECK(int(res.binary.at(i, j)) == (img.at(i, j) == 0.0f ? 1 : 0));
}

TEST_CASE("sauvola thresholds match the naive windowed-statistics oracle") {
    for (uint64_t seed = 0; seed < 3; ++seed) {
        const Image img = random_image(64, 64, 1, 100 + seed);
        const int r = 12;
        const float k = 0.2f, R = 0.5f;
        const auto res = sauvola(img, r, k, R);
        for (int i = 0; i < 64; i += 7)
            for (int j = 0; j < 64; j += 5) {
                double mean, stddev;
                naive_window_stats(img, r, i, j, mean, stddev);
                const double t = mean * (1.0 + k * (stddev / R - 1.0));
                CHECK(res.threshold.at(i, j) ==
                      doctest::Approx(std::clamp(t, 0.0, 1.0)).epsilon(1e-6));
                CHECK(int(res.binary.at(i, j)) == (img.at(i, j) < t ? 1 : 0));
            }
    }
}

TEST_CASE("sauvola rejects non-positive parameters") {
    const Image img(8, 8, 1, 0.5f);
    CHECK_THROWS_AS(sauvola(img, 2, 0.0f, 0.5f), InvalidParam);
    CHECK_THROWS_AS(sauvola(img, 2, 0.2f, -1.0f), InvalidParam);
}

TEST_CASE("otsu: two-level histogram picks the smallest maximizer") {
    Image img(10, 10, 1);
    for (size_t p = 0; p < 100; ++p) img.data[p] = (p < 50 ? 50.0f : 200.0f) / 255.0f;
    const auto res = otsu_threshold(img);
    CHECK_FALSE(res.degenerate);
    // any split between the modes ties; smallest maximizer is bin 50
    CHECK(res.threshold == doctest::Approx(50.0f / 255.0f));
    CHECK(res.threshold > 50.0f / 255.0f - 1e-6);
    CHECK(res.threshold < 200.0f / 255.0f);
}

TEST_CASE("otsu invariant under shuffling, flags constants") {
    Image img = random_image(16, 16, 1, 8);
    const auto before = otsu_threshold(img);
    Rng rng(9);
    for (size_t i = img.data.size() - 1; i > 0; --i)
        std::swap(img.data[i], img.data[rng.next_range(i + 1)]);
    CHECK(otsu_threshold(img).threshold == before.threshold);

    const Image c(4, 4, 1, 0.25f);
    const auto res = otsu_threshold(c);
    CHECK(res.degenerate);
    CHECK(res.threshold == doctest::Approx(0.25f).epsilon(0.01));
}

TEST_CASE("gaussian blur: normalized kernel fixes constants, preserves mass") {
    const Image img(12, 12, 1, 0.77f);
    const Image b = gaussian_blur(img, 1.3f);
    for (float v : b.data) CHECK(v == doctest::Approx(0.77f).epsilon(1e-6));

    // interior-supported blob keeps its total brightness
    Image blob(64, 64, 1, 0.0f);
    for (int i = 28; i < 36; ++i)
        for (int j = 28; j < 36; ++j) blob.at(i, j) = 1.0f;
    const Image bb = gaussian_blur(blob, 2.0f);
    double before = 0.0, after = 0.0;
    for (float v : blob.data) before += v;
    for (float v : bb.data) after += v;
    CHECK(after == doctest::Approx(before).epsilon(1e-4));
}

TEST_CASE("gaussian blur impulse center matches the discrete kernel") {
    Image impulse(21, 21, 1, 0.0f);
    impulse.at(10, 10) = 1.0f;
    const Image b = gaussian_blur(impulse, 1.0f);
    // evaluate the normalized discrete kernel by hand
    const int r = 3;
    double ksum = 0.0, center = 0.0;
    for (int d = -r; d <= r; ++d) ksum += std::exp(-0.5 * d * d);
    center = 1.0 / ksum;  // 1D center weight
    CHECK(b.at(10, 10) == doctest::Approx(center * center).epsilon(1e-3));
}

TEST_CASE("remap with the identity map is the identity") {
    const Image img = random_image(13, 19, 3, 31);
    const Image out = remap_bilinear(img, BackwardMap::identity(13, 19));
    CHECK(out.data == img.data);
}

TEST_CASE("remap half-pixel shift averages adjacent columns") {
    Image img(3, 6, 1);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 6; ++j) img.at(i, j) = float(j) / 5.0f;
    BackwardMap bm = BackwardMap::identity(3, 6);
    for (float& v : bm.col) v += 0.5f;
    const Image out = remap_bilinear(img, bm);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 5; ++j)
            CHECK(out.at(i, j) == doctest::Approx(0.5f * (img.at(i, j) + img.at(i, j + 1))));
}

TEST_CASE("resize: identity and constants") {
    const Image img = random_image(11, 17, 3, 41);
    CHECK(resize_bilinear(img, 11, 17).data == img.data);
    const Image c(8, 8, 1, 0.31f);
    for (float v : resize_bilinear(c, 15, 23).data) CHECK(v == doctest::Approx(0.31f));
}

TEST_CASE("resize up then down keeps smooth images close") {
    Image noise = random_image(32, 32, 1, 6);
    const Image smooth = gaussian_blur(noise, 2.0f);
    const Image back = resize_bilinear(resize_bilinear(smooth, 64, 64), 32, 32);
    float max_err = 0.0f;
    for (size_t i = 0; i < smooth.data.size(); ++i)
        max_err = std::max(max_err, std::fabs(back.data[i] - smooth.data[i]));
    CHECK(max_err < 0.02f);
}

TEST_CASE("connected components: diagonal pixels join under 8-connectivity") {
    BinaryMap bm(4, 4);
    bm.at(1, 1) = 1;
    bm.at(2, 2) = 1;
    const auto comp = connected_components(bm);
    CHECK(comp.count == 1);
    CHECK(comp.sizes[0] == 2);

    CHECK(connected_components(BinaryMap(5, 5)).count == 0);
}

TEST_CASE("connected components count equals flood-fill oracle") {
    for (uint64_t seed = 0; seed < 5; ++seed) {
        BinaryMap bm(32, 32);
        Rng rng(200 + seed);
        for (auto& v : bm.data) v = rng.next_f64() < 0.35 ? 1 : 0;
        CHECK(connected_components(bm).count == flood_fill_count(bm));
    }
}

TEST_CASE("skeletonize: thin lines survive unchanged") {
    BinaryMap line(7, 9);
    for (int j = 1; j < 8; ++j) line.at(3, j) = 1;
    CHECK(skeletonize(line).data == line.data);
}

TEST_CASE("skeletonize: filled 5x5 square thins to the center") {
    // hand-run of the thinning pass: the square collapses to its center pixel
    BinaryMap sq(9, 9);
    for (int i = 2; i < 7; ++i)
        for (int j = 2; j < 7; ++j) sq.at(i, j) = 1;
    const BinaryMap skel = skeletonize(sq);
    CHECK(skel.count_ones() <= 5);
    CHECK(skel.at(4, 4) == 1);
    for (size_t p = 0; p < skel.data.size(); ++p) CHECK(skel.data[p] <= sq.data[p]);
}

TEST_CASE("skeleton is a subset and keeps components connected") {
    for (uint64_t seed = 0; seed < 3; ++seed) {
        BinaryMap bm(24, 24);
        Rng rng(300 + seed);
        // blobby input: a few filled rectangles
        for (int n = 0; n < 4; ++n) {
            const int i0 = int(rng.next_range(16)), j0 = int(rng.next_range(16));
            const int hh = 3 + int(rng.next_range(6)), ww = 3 + int(rng.next_range(6));
            for (int i = i0; i < std::min(24, i0 + hh); ++i)
                for (int j = j0; j < std::min(24, j0 + ww); ++j) bm.at(i, j) = 1;
        }
        const BinaryMap skel = skeletonize(bm);
        for (size_t p = 0; p < skel.data.size(); ++p) REQUIRE(skel.data[p] <= bm.data[p]);
        if (bm.count_ones() > 0)
            CHECK(connected_components(skel).count == connected_components(bm).count);
    }
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "docres/errors.hpp"
#include "docres/imgproc.hpp"
#include "docres/prompt.hpp"
#include "docres/rng.hpp"
#include "docres/synth.hpp"

using namespace docres;
using namespace docres::prompt;

namespace {

Image degraded_page(uint64_t seed) {
    synth::SynthConfig cfg;
    Rng rng(seed);
    const auto page = synth::render_page(cfg, rng);
    return synth::gen_binarize_input(page.page, page.ink, cfg, rng).degraded;
}

double linf(const DTSPrompt& a, const DTSPrompt& b) {
    double m = 0.0;
    for (size_t i = 0; i < a.planes.size(); ++i)
        m = std::max(m, std::fabs(double(a.planes[i]) - b.planes[i]));
    return m;
}

}  // namespace

TEST_CASE("coord channels: corner normalization on 2x2") {
    std::vector<float> px, py;
    coord_channels(2, 2, px, py);
    CHECK(px == std::vector<float>{0, 1, 0, 1});
    CHECK(py == std::vector<float>{0, 0, 1, 1});
}

TEST_CASE("coord channels: degenerate extent gives a zero plane") {
    std::vector<float> px, py;
    coord_channels(1, 5, px, py);
    for (float v : py) CHECK(v == 0.0f);
    for (int j = 1; j < 5; ++j) CHECK(px[size_t(j)] > px[size_t(j) - 1]);
}

TEST_CASE("coord x is constant along rows, increasing along columns") {
    std::vector<float> px, py;
    coord_channels(6, 9, px, py);
    for (int i = 1; i < 6; ++i)
        for (int j = 0; j < 9; ++j) CHECK(px[size_t(i) * 9 + j] == px[size_t(j)]);
    for (int j = 1; j < 9; ++j) CHECK(px[size_t(j)] > px[size_t(j) - 1]);
}

TEST_CASE("document mask recovers a bright rectangle on a dark field") {
    Image img(64, 64, 3, 0.1f);
    for (int i = 12; i < 52; ++i)
        for (int j = 8; j < 56; ++j)
            for (int c = 0; c < 3; ++c) img.at(i, j, c) = 0.9f;
    const MaskResult mask = document_mask(img);
    CHECK_FALSE(mask.degenerate);
    // exact up to a 1-px boundary band
    for (int i = 0; i < 64; ++i)
        for (int j = 0; j < 64; ++j) {
            const bool inside1 = i >= 13 && i < 51 && j >= 9 && j < 55;
            const bool outside1 = i < 11 || i >= 53 || j < 7 || j >= 57;
            if (inside1) REQUIRE(mask.plane[size_t(i) * 64 + j] == 1.0f);
            if (outside1) REQUIRE(mask.plane[size_t(i) * 64 + j] == 0.0f);
        }
}

TEST_CASE("document mask IoU >= 0.90 on synthetic warped pages") {
    synth::SynthConfig cfg;
    for (uint64_t seed = 1; seed <= 3; ++seed) {
        Rng rng(seed);
        const auto sample = synth::gen_dewarp_sample(cfg, rng);
        const MaskResult mask = document_mask(sample.distorted);
        size_t inter = 0, uni = 0;
        for (size_t p = 0; p < mask.plane.size(); ++p) {
            const bool a = mask.plane[p] > 0.5f, b = sample.mask.data[p] != 0;
            inter += a && b;
            uni += a || b;
        }
        CHECK(double(inter) / double(uni) >= 0.90);
    }
}

TEST_CASE("document mask flags constant input with an all-ones mask") {
    const Image img(32, 32, 3, 0.5f);
    const MaskResult mask = document_mask(img);
    CHECK(mask.degenerate);
    for (float v : mask.plane) CHECK(v == 1.0f);
}

TEST_CASE("background fixes constants and text-free shading") {
    const Image img(40, 40, 3, 0.8f);
    CHECK(background(img).data == img.data);

    // smooth shaded page without text: background should track it closely
    Image shaded(64, 64, 3);
    for (int i = 0; i < 64; ++i)
        for (int j = 0; j < 64; ++j)
            for (int c = 0; c < 3; ++c)
                shaded.at(i, j, c) = 0.7f + 0.2f * float(i + j) / 126.0f;
    const Image bg = background(shaded);
    float max_err = 0.0f;
    for (size_t i = 0; i < bg.data.size(); ++i)
        max_err = std::max(max_err, std::fabs(bg.data[i] - shaded.data[i]));
    CHECK(max_err < 0.02f);
}

TEST_CASE("background removes thin dark strokes") {
    synth::SynthConfig cfg;
    Rng rng(17);
    const auto page = synth::render_page(cfg, rng);
    const Image bg = background(page.page);
    // at every ink pixel the background takes on the local page value
    for (int i = 0; i < page.page.height; ++i)
        for (int j = 0; j < page.page.width; ++j)
            if (page.ink.at(i, j))
                REQUIRE(bg.at(i, j, 0) >= 0.80f);
}

TEST_CASE("diff map evaluates 1 - |img - bg|") {
    Image img(1, 2, 3, 0.2f), bg(1, 2, 3, 0.9f);
    const Image d = diff_map(img, bg);
    for (float v : d.data) CHECK(v == doctest::Approx(0.3f));
    CHECK(diff_map(bg, bg).data == std::vector<float>(6, 1.0f));

    const Image a = degraded_page(3);
    const Image d2 = diff_map(a, background(a));
    for (float v : d2.data) {
        REQUIRE(v >= 0.0f);
        REQUIRE(v <= 1.0f);
    }
    CHECK_THROWS_AS(diff_map(img, Image(2, 2, 3, 0.5f)), ShapeMismatch);
}

TEST_CASE("deblur prompt on a constant image is three zero planes") {
    const Image img(16, 16, 3, 0.6f);
    const DTSPrompt p = generate(img, TaskKind::Deblur);
    for (float v : p.planes) CHECK(v == doctest::Approx(0.0f));
}

TEST_CASE("binarize prompt planes equal their recomputed components") {
    const Image img = degraded_page(7);
    const DTSPrompt p = generate(img, TaskKind::Binarize);
    const Image gray = imgproc::to_grayscale(img);
    const auto sau = imgproc::sauvola(gray, 12, 0.2f, 0.5f);
    const Image grad = imgproc::sobel_gradient(gray);
    for (size_t q = 0; q < gray.pixel_count(); ++q) {
        REQUIRE(p.plane(0)[q] == float(sau.binary.data[q]));
        REQUIRE(p.plane(1)[q] == sau.threshold.data[q]);
        REQUIRE(p.plane(2)[q] == grad.data[q]);
    }
}

TEST_CASE("dewarp prompt carries the coordinate planes") {
    const Image img(2, 2, 3, 0.5f);
    const DTSPrompt p = generate(img, TaskKind::Dewarp);
    std::vector<float> px, py;
    coord_channels(2, 2, px, py);
    for (size_t q = 0; q < 4; ++q) {
        CHECK(p.plane(1)[q] == px[q]);
        CHECK(p.plane(2)[q] == py[q]);
    }
}

TEST_CASE("fuse: channels 3-5 recover the image, 0-2 the prompt") {
    const Image img = degraded_page(11);
    const DTSPrompt p = generate(img, TaskKind::Deshadow);
    const Tensor t = fuse(p, img);
    REQUIRE(t.shape == std::vector<uint32_t>{6, uint32_t(img.height), uint32_t(img.width)});
    const size_t plane = img.pixel_count();
    for (size_t q = 0; q < plane; ++q)
        for (int c = 0; c < 3; ++c)
            REQUIRE(t.data[size_t(3 + c) * plane + q] == img.data[q * 3 + size_t(c)]);
    // channel 0 == background red plane
    const Image bg = background(img);
    for (size_t q = 0; q < plane; ++q) REQUIRE(t.data[q] == bg.data[q * 3]);
}

TEST_CASE("fuse output is [6,h,w] for every task") {
    const Image img = degraded_page(13);
    for (TaskKind task : kAllTasks) {
        const Tensor t = fuse(generate(img, task), img);
        REQUIRE(t.shape ==
                std::vector<uint32_t>{6, uint32_t(img.height), uint32_t(img.width)});
    }
}

TEST_CASE("fixed prompt: equally spaced constants, image-independent") {
    const DTSPrompt d = fixed_prompt(TaskKind::Dewarp, 4, 6);
    for (float v : d.planes) CHECK(v == 0.0f);
    const DTSPrompt s = fixed_prompt(TaskKind::Deshadow, 4, 6);
    for (float v : s.planes) CHECK(v == 0.25f);
    CHECK(fixed_prompt(TaskKind::Appearance, 2, 2).planes[0] == 0.5f);
    CHECK(fixed_prompt(TaskKind::Deblur, 2, 2).planes[0] == 0.75f);
    CHECK(fixed_prompt(TaskKind::Binarize, 2, 2).planes[0] == 1.0f);
}

TEST_CASE("shape contract: 3 planes, source extents, unit range, for every task") {
    for (uint64_t seed = 40; seed < 44; ++seed) {
        const Image img = degraded_page(seed);
        for (TaskKind task : kAllTasks) {
            const DTSPrompt p = generate(img, task);
            REQUIRE(p.height == img.height);
            REQUIRE(p.width == img.width);
            REQUIRE(p.planes.size() == 3 * img.pixel_count());
            for (float v : p.planes) {
                REQUIRE(v >= 0.0f);
                REQUIRE(v <= 1.0f);
            }
        }
    }
}

TEST_CASE("prompts are pairwise distinct across tasks") {
    const Image img = degraded_page(21);
    std::vector<DTSPrompt> prompts;
    for (TaskKind task : kAllTasks) prompts.push_back(generate(img, task));
    for (size_t a = 0; a < prompts.size(); ++a)
        for (size_t b = a + 1; b < prompts.size(); ++b)
            CHECK(linf(prompts[a], prompts[b]) > 0.01);
}

TEST_CASE("generate is deterministic") {
    const Image img = degraded_page(23);
    for (TaskKind task : kAllTasks) {
        const DTSPrompt a = generate(img, task);
        const DTSPrompt b = generate(img, task);
        REQUIRE(a.planes == b.planes);
    }
}

TEST_CASE("deblur planes are identical; appearance is white where img == bg") {
    const Image img = degraded_page(29);
    const DTSPrompt d = generate(img, TaskKind::Deblur);
    const size_t plane = img.pixel_count();
    for (size_t q = 0; q < plane; ++q) {
        REQUIRE(d.plane(0)[q] == d.plane(1)[q]);
        REQUIRE(d.plane(1)[q] == d.plane(2)[q]);
    }
    const Image bg = background(img);
    const DTSPrompt a = generate(img, TaskKind::Appearance);
    for (size_t q = 0; q < plane; ++q)
        for (int c = 0; c < 3; ++c)
            if (img.data[q * 3 + size_t(c)] == bg.data[q * 3 + size_t(c)])
                REQUIRE(a.plane(c)[q] == 1.0f);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "docres/imgproc.hpp"
#include "docres/manifest.hpp"
#include "docres/metrics.hpp"
#include "docres/synth.hpp"
#include "docres/tensor.hpp"

using namespace docres;
using namespace docres::synth;
namespace fs = std::filesystem;

namespace {

double border_psnr(const Image& a, const Image& b, int border) {
    double mse = 0.0;
    size_t n = 0;
    for (int i = border; i < a.height - border; ++i)
        for (int j = border; j < a.width - border; ++j)
            for (int c = 0; c < a.channels; ++c) {
                const double d = double(a.at(i, j, c)) - b.at(i, j, c);
                mse += d * d;
                ++n;
            }
    mse /= double(n);
    return mse <= 0.0 ? 99.0 : 10.0 * std::log10(1.0 / mse);
}

double mean_of(const Image& img) {
    double s = 0.0;
    for (float v : img.data) s += v;
    return s / double(img.data.size());
}

double gradient_energy(const Image& img) {
    const Image g = imgproc::sobel_gradient(imgproc::to_grayscale(img));
    double s = 0.0;
    for (float v : g.data) s += double(v) * v;
    return s;
}

}  // namespace

TEST_CASE("render_page: ink coverage within the frozen band") {
    SynthConfig cfg;
    for (uint64_t seed = 0; seed < 25; ++seed) {
        Rng rng(Rng::mix(7, seed));
        const PageRender page = render_page(cfg, rng);
        const double cov = double(page.ink.count_ones()) / double(page.ink.data.size());
        CHECK(cov >= 0.03);
        CHECK(cov <= 0.25);
    }
}

TEST_CASE("render_page: ink dark, page bright, deterministic") {
    SynthConfig cfg;
    Rng a(5), b(5);
    const PageRender pa = render_page(cfg, a);
    const PageRender pb = render_page(cfg, b);
    CHECK(pa.page.data == pb.page.data);
    CHECK(pa.ink.data == pb.ink.data);
    for (int i = 0; i < pa.page.height; ++i)
        for (int j = 0; j < pa.page.width; ++j) {
            if (pa.ink.at(i, j)) REQUIRE(pa.page.at(i, j, 0) <= 0.25f);
            else REQUIRE(pa.page.at(i, j, 0) >= 0.85f);
        }
}

TEST_CASE("gen_warp: zero amplitude yields the identity map") {
    SynthConfig cfg;
    cfg.warp_amplitude = 0.0f;
    cfg.page_size = 64;
    Rng rng(1);
    const WarpFields f = gen_warp(cfg, rng);
    for (int i = 0; i < 64; ++i)
        for (int j = 0; j < 64; ++j) {
            REQUIRE(f.bm.row[size_t(i) * 64 + j] == float(i));
            REQUIRE(f.bm.col[size_t(i) * 64 + j] == float(j));
        }
}

TEST_CASE("gen_warp: displacement bounded by the amplitude") {
    SynthConfig cfg;
    for (uint64_t seed = 0; seed < 5; ++seed) {
        Rng rng(seed);
        const WarpFields f = gen_warp(cfg, rng);
        for (size_t p = 0; p < f.forward.dy.size(); ++p) {
            REQUIRE(std::fabs(f.forward.dy[p]) <= cfg.warp_amplitude + 1.0f);
            REQUIRE(std::fabs(f.forward.dx[p]) <= cfg.warp_amplitude + 1.0f);
        }
    }
}

TEST_CASE("warp round trip: distort then pull back is near-lossless on smooth pages") {
    SynthConfig cfg;
    for (uint64_t seed = 0; seed < 3; ++seed) {
        Rng rng(Rng::mix(11, seed));
        const PageRender page = render_page(cfg, rng);
        const Image smooth = imgproc::gaussian_blur(page.page, 1.5f);
        const WarpFields fields = gen_warp(cfg, rng);
        const BackwardMap inverse = invert_displacement(fields.forward);
        const Image distorted = imgproc::remap_bilinear(smooth, inverse);
        const Image recovered = imgproc::remap_bilinear(distorted, fields.bm);
        CHECK(border_psnr(recovered, smooth, 4) > 28.0);
    }
}

TEST_CASE("gen_shadow: identity at zero strength, multiplicative bound") {
    SynthConfig cfg;
    Rng rng(3);
    const PageRender page = render_page(cfg, rng);

    SynthConfig none = cfg;
    none.shadow_strength = 0.0f;
    Rng r1(4);
    const ImagePair id = gen_shadow(page.page, none, r1);
    CHECK(id.degraded.data == page.page.data);

    Rng r2(4);
    const ImagePair sh = gen_shadow(page.page, cfg, r2);
    for (size_t i = 0; i < sh.degraded.data.size(); ++i)
        REQUIRE(sh.degraded.data[i] <= sh.clean.data[i] + 1e-6f);
}

TEST_CASE("gen_shadow: mean brightness drop within the frozen band") {
    SynthConfig cfg;
    for (uint64_t seed = 0; seed < 25; ++seed) {
        Rng rng(Rng::mix(8, seed));
        const PageRender page = render_page(cfg, rng);
        const ImagePair sh = gen_shadow(page.page, cfg, rng);
        const double drop = (mean_of(sh.clean) - mean_of(sh.degraded)) / mean_of(sh.clean);
        CHECK(drop >= 0.03);
        CHECK(drop <= double(cfg.shadow_strength) + 1e-9);
    }
}

TEST_CASE("gen_illum: identity with everything disabled, clamped output") {
    SynthConfig cfg;
    Rng rng(5);
    const PageRender page = render_page(cfg, rng);

    SynthConfig off = cfg;
    off.shadow_strength = 0.0f;
    off.noise_std = 0.0f;
    Rng r1(6);
    const ImagePair pair = gen_illum(page.page, off, r1);
    // only the color cast remains; disable it by checking the multiplicative form
    for (size_t i = 0; i < pair.degraded.data.size(); ++i) {
        REQUIRE(pair.degraded.data[i] >= 0.0f);
        REQUIRE(pair.degraded.data[i] <= 1.0f);
    }
}

TEST_CASE("gen_illum: PSNR within the frozen band") {
    SynthConfig cfg;
    for (uint64_t seed = 0; seed < 25; ++seed) {
        Rng rng(Rng::mix(9, seed));
        const PageRender page = render_page(cfg, rng);
        const ImagePair il = gen_illum(page.page, cfg, rng);
        const double p = metrics::psnr(il.degraded, il.clean);
        CHECK(p >= 14.0);
        CHECK(p <= 30.0);
    }
}

TEST_CASE("gen_blur: identity when disabled, low-pass otherwise, deterministic") {
    SynthConfig cfg;
    Rng rng(7);
    const PageRender page = render_page(cfg, rng);

    SynthConfig off = cfg;
    off.blur_motion_prob = 0.0f;
    off.blur_sigma_min = off.blur_sigma_max = 1e-5f;
    off.deblur_noise_std = 0.0f;
    Rng r1(8);
    const ImagePair id = gen_blur(page.page, off, r1);
    float max_err = 0.0f;
    for (size_t i = 0; i < id.degraded.data.size(); ++i)
        max_err = std::max(max_err, std::fabs(id.degraded.data[i] - page.page.data[i]));
    CHECK(max_err < 1e-6f);

    Rng r2(9), r3(9);
    const ImagePair a = gen_blur(page.page, cfg, r2);
    const ImagePair b = gen_blur(page.page, cfg, r3);
    CHECK(a.degraded.data == b.degraded.data);
    CHECK(gradient_energy(a.degraded) < gradient_energy(page.page));
}

TEST_CASE("gen_binarize_input: target untouched, identity with effects off") {
    SynthConfig cfg;
    Rng rng(10);
    const PageRender page = render_page(cfg, rng);

    SynthConfig off = cfg;
    off.stain_count_min = off.stain_count_max = 0;
    off.bleed_strength = 0.0f;
    off.contrast_max = 0.0f;
    Rng r1(11);
    const BinarizeSample s = gen_binarize_input(page.page, page.ink, off, r1);
    CHECK(s.degraded.data == page.page.data);
    CHECK(s.target.data == page.ink.data);

    Rng r2(12);
    const BinarizeSample s2 = gen_binarize_input(page.page, page.ink, cfg, r2);
    CHECK(s2.target.data == page.ink.data);
}

TEST_CASE("sauvola keeps a solid baseline on default binarize inputs") {
    SynthConfig cfg;
    for (uint64_t seed = 0; seed < 15; ++seed) {
        Rng rng(Rng::mix(10, seed));
        const PageRender page = render_page(cfg, rng);
        const BinarizeSample s = gen_binarize_input(page.page, page.ink, cfg, rng);
        const auto sau = imgproc::sauvola(imgproc::to_grayscale(s.degraded));
        CHECK(metrics::f_measure(sau.binary, s.target).fm >= 0.55);
    }
}

TEST_CASE("dewarp sample: reconstruction via the true map, mask agrees") {
    SynthConfig cfg;
    Rng rng(13);
    const DewarpSample s = gen_dewarp_sample(cfg, rng);
    CHECK(s.distorted.height == cfg.page_size);
    // pulling the distorted image back through bm approximates the flat scene
    const Image rec = imgproc::remap_bilinear(s.distorted, s.bm);
    CHECK(border_psnr(rec, s.flat, 8) > 20.0);
    CHECK(s.mask.count_ones() > 0);
}

TEST_CASE("make_dataset: counts, determinism, integrity") {
    SynthConfig cfg;
    cfg.page_size = 64;
    cfg.seed = 77;
    const std::string dir_a = (fs::temp_directory_path() / "docres_ds_a").string();
    const std::string dir_b = (fs::temp_directory_path() / "docres_ds_b").string();
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);

    const std::string mpath_a = make_dataset(cfg, 2, dir_a);
    const std::string mpath_b = make_dataset(cfg, 2, dir_b);

    const Manifest m = Manifest::load(mpath_a);
    CHECK(m.records.size() == 10);  // 2 per task, 5 tasks

    // every referenced file exists and loads
    for (const auto& rec : m.records) {
        const Image in = load_image(m.resolve(rec.input));
        CHECK(in.height == 64);
        if (rec.task == TaskKind::Dewarp) {
            const Tensor t = read_tensor(m.resolve(rec.target));
            CHECK(t.shape == std::vector<uint32_t>{2, 64, 64});
            CHECK_FALSE(rec.aux.empty());
        } else {
            CHECK(load_image(m.resolve(rec.target)).height == 64);
        }
    }

    // same seed: byte-identical files
    for (const auto& rec : m.records) {
        std::ifstream fa(m.resolve(rec.input), std::ios::binary);
        std::ifstream fb((fs::path(dir_b) / rec.input).string(), std::ios::binary);
        const std::string ba((std::istreambuf_iterator<char>(fa)),
                             std::istreambuf_iterator<char>());
        const std::string bb((std::istreambuf_iterator<char>(fb)),
                             std::istreambuf_iterator<char>());
        REQUIRE(ba == bb);
        REQUIRE_FALSE(ba.empty());
    }
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
}

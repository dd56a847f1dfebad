#pragma once

#include <string>

#include "docres/image.hpp"
#include "docres/rng.hpp"
#include "docres/task.hpp"

namespace docres::synth {

struct SynthConfig {
    int page_size = 256;
    uint64_t seed = 0;
    float warp_amplitude = 12.0f;   // px, control-grid offset bound
    int warp_scale = 4;             // control grid cells per side
    float shadow_strength = 0.5f;
    float blur_sigma_min = 0.5f;
    float blur_sigma_max = 2.5f;
    float blur_motion_prob = 0.5f;
    float deblur_noise_std = 0.01f;
    float noise_std = 0.02f;        // appearance noise
    int stain_count_min = 1;
    int stain_count_max = 4;
    float bleed_strength = 0.15f;
    float contrast_max = 0.3f;
    float binarize_noise_std = 0.0f;
};

struct PageRender {
    Image page;      // 3ch, background >= 0.85
    BinaryMap ink;   // exact glyph mask, ink values <= 0.25
};
PageRender render_page(const SynthConfig& cfg, Rng& rng);

struct WarpFields {
    FlowField forward;  // displacement of each flat pixel into the distorted image
    BackwardMap bm;     // identity + forward: flat pixel -> distorted coords
};
// Smooth random field: (warp_scale+1)^2 control offsets ~ U(+-amplitude),
// bilinearly upsampled to page resolution.
WarpFields gen_warp(const SynthConfig& cfg, Rng& rng);

// Fixed-point inversion of a forward displacement field; the result maps
// distorted pixels back to flat coordinates (used to synthesize distortion).
BackwardMap invert_displacement(const FlowField& fwd, int iterations = 10);

struct ImagePair {
    Image degraded;
    Image clean;
};
ImagePair gen_shadow(const Image& page, const SynthConfig& cfg, Rng& rng);
ImagePair gen_illum(const Image& page, const SynthConfig& cfg, Rng& rng);
ImagePair gen_blur(const Image& page, const SynthConfig& cfg, Rng& rng);

struct BinarizeSample {
    Image degraded;
    BinaryMap target;  // the render's ink mask, untouched by degradations
};
BinarizeSample gen_binarize_input(const Image& page, const BinaryMap& ink,
                                  const SynthConfig& cfg, Rng& rng);

struct DewarpSample {
    Image distorted;   // warped page over a dark backdrop
    BackwardMap bm;    // flat -> distorted source coordinates
    BinaryMap mask;    // document region of the distorted image
    Image flat;        // flat scene the bm reconstructs
};
DewarpSample gen_dewarp_sample(const SynthConfig& cfg, Rng& rng);

// Writes n_per_task samples per task plus a manifest; deterministic under
// (cfg, seed). Returns the manifest path.
std::string make_dataset(const SynthConfig& cfg, int n_per_task, const std::string& out_dir);

}  // namespace docres::synth

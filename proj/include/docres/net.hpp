#pragma once

#include <array>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "docres/autograd.hpp"
#include "docres/image.hpp"
#include "docres/manifest.hpp"
#include "docres/prompt.hpp"
#include "docres/rng.hpp"
#include "docres/task.hpp"

namespace docres::net {

struct Param {
    std::string name;
    std::vector<int> shape;
    std::vector<float> value;
    std::vector<float> grad;
    std::vector<float> m, v;  // AdamW moments

    size_t numel() const { return value.size(); }
};

// U-shaped conv net: stem 6->w0, two 3x3 conv+leaky_relu blocks per level
// with avgpool2 between levels, nearest-upsample + skip-concat decoder,
// linear 3-channel head. Input extents must be multiples of 2^(levels-1).
struct Model {
    std::vector<int> widths;
    std::deque<Param> params;  // stable references

    int pool_factor() const { return 1 << (int(widths.size()) - 1); }
};

Model build_model(const std::vector<int>& widths, Rng& rng);
size_t param_count(const Model& m);

struct ForwardResult {
    int output;                    // [N,3,H,W]
    std::vector<int> param_nodes;  // tape ids aligned with model.params
};
ForwardResult model_forward(Tape& tape, const Model& model, int input);

// Adds tape gradients of a forward pass back into the model parameters.
void accumulate_param_grads(Model& model, const Tape& tape, const ForwardResult& fr);

enum class PromptMode { DTS, Fixed, None };
const char* prompt_mode_name(PromptMode m);
PromptMode prompt_mode_from_name(const std::string& s);

struct TrainConfig {
    int steps = 2000;
    int pretrain_steps = 400;     // dewarp-only warmup phase
    int batch = 4;
    float lr_max = 2e-4f;
    float weight_decay = 5e-4f;
    float beta1 = 0.9f;
    float beta2 = 0.999f;
    float eps = 1e-8f;
    int patch = 64;
    std::array<double, kTaskCount> task_weights = {0.2, 0.2, 0.2, 0.2, 0.2};
    uint64_t seed = 0;
    PromptMode prompt_mode = PromptMode::DTS;
    std::vector<int> widths = {16, 32, 64};
};

// Decoupled weight decay; t is the 1-based step number.
void adamw_step(Model& model, float lr, const TrainConfig& cfg, int t);

// lr_max * 0.5 * (1 + cos(pi * step / total)); no warmup.
float cosine_lr(int step, int total, float lr_max);

TaskKind sample_task(const std::array<double, kTaskCount>& weights, Rng& rng);

// Builds a fused [6,p,p] network input for one image according to the
// prompt mode; shared between training and inference.
std::vector<float> fused_input(const Image& img, TaskKind task, PromptMode mode,
                               const prompt::PromptConfig& pcfg);

struct TrainResult {
    std::string loss_log;  // "step<TAB>task<TAB>loss" lines
};
TrainResult train(Model& model, const Manifest& manifest, const TrainConfig& cfg,
                  const prompt::PromptConfig& pcfg = {});

void save_checkpoint(const Model& model, const TrainConfig& cfg, const std::string& dir);
Model load_checkpoint(const std::string& dir, TrainConfig* cfg_out = nullptr);

struct Prediction {
    TaskKind task = TaskKind::Deshadow;
    Image image;                      // restored image; binary rendered 0/1 for binarize
    std::optional<BackwardMap> bm;    // dewarp only
    std::optional<BinaryMap> binary;  // binarize only
};
// Dewarp runs at the training patch resolution and upsamples the predicted
// map; other tasks run at native resolution padded to the pool factor.
Prediction predict(const Model& model, const Image& img, TaskKind task, PromptMode mode,
                   const prompt::PromptConfig& pcfg = {}, int dewarp_patch = 64);

}  // namespace docres::net

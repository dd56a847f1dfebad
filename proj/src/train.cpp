#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "docres/config.hpp"
#include "docres/errors.hpp"
#include "docres/imgproc.hpp"
#include "docres/net.hpp"
#include "docres/tensor.hpp"

namespace docres::net {

namespace fs = std::filesystem;

const char* prompt_mode_name(PromptMode m) {
    switch (m) {
        case PromptMode::DTS: return "dtsprompt";
        case PromptMode::Fixed: return "fixed";
        case PromptMode::None: return "none";
    }
    return "?";
}

PromptMode prompt_mode_from_name(const std::string& s) {
    if (s == "dtsprompt") return PromptMode::DTS;
    if (s == "fixed") return PromptMode::Fixed;
    if (s == "none") return PromptMode::None;
    throw FormatError("unknown prompt mode: '" + s + "'");
}

void adamw_step(Model& model, float lr, const TrainConfig& cfg, int t) {
    const float bc1 = 1.0f - std::pow(cfg.beta1, float(t));
    const float bc2 = 1.0f - std::pow(cfg.beta2, float(t));
    for (Param& p : model.params) {
        for (size_t i = 0; i < p.value.size(); ++i) {
            const float g = p.grad[i];
            p.m[i] = cfg.beta1 * p.m[i] + (1.0f - cfg.beta1) * g;
            p.v[i] = cfg.beta2 * p.v[i] + (1.0f - cfg.beta2) * g * g;
            const float m_hat = p.m[i] / bc1;
            const float v_hat = p.v[i] / bc2;
            p.value[i] -= lr * (m_hat / (std::sqrt(v_hat) + cfg.eps) +
                                cfg.weight_decay * p.value[i]);
        }
    }
}

float cosine_lr(int step, int total, float lr_max) {
    if (step < 0 || step > total) throw InvalidParam("cosine_lr: step out of range");
    return lr_max * 0.5f * (1.0f + std::cos(3.14159265358979323846 * double(step) / total));
}

TaskKind sample_task(const std::array<double, kTaskCount>& weights, Rng& rng) {
    const double u = rng.next_f64();
    double cum = 0.0;
    for (int i = 0; i < kTaskCount; ++i) {
        cum += weights[size_t(i)];
        if (u < cum) return kAllTasks[size_t(i)];
    }
    return kAllTasks[kTaskCount - 1];
}

std::vector<float> fused_input(const Image& img, TaskKind task, PromptMode mode,
                               const prompt::PromptConfig& pcfg) {
    switch (mode) {
        case PromptMode::DTS:
            return prompt::fuse(prompt::generate(img, task, pcfg), img).data;
        case PromptMode::Fixed:
            return prompt::fuse(prompt::fixed_prompt(task, img.height, img.width), img).data;
        case PromptMode::None: {
            prompt::DTSPrompt zero(img.height, img.width, task);
            return prompt::fuse(zero, img).data;
        }
    }
    throw InvalidParam("fused_input: bad prompt mode");
}

namespace {

Image crop(const Image& img, int oi, int oj, int p) {
    Image out(p, p, img.channels);
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j)
            for (int c = 0; c < img.channels; ++c)
                out.at(i, j, c) = img.at(oi + i, oj + j, c);
    return out;
}

BackwardMap bm_from_tensor(const Tensor& t) {
    if (t.shape.size() != 3 || t.shape[0] != 2)
        throw FormatError("backward map tensor must have shape [2,h,w]");
    BackwardMap bm(int(t.shape[1]), int(t.shape[2]));
    const size_t plane = bm.row.size();
    std::copy(t.data.begin(), t.data.begin() + ptrdiff_t(plane), bm.row.begin());
    std::copy(t.data.begin() + ptrdiff_t(plane), t.data.end(), bm.col.begin());
    return bm;
}

// Normalized-to-[0,1] backward map planes resized to p x p.
void dewarp_target(const Image& input, const BackwardMap& bm, int p, float* dst) {
    if (bm.height != input.height || bm.width != input.width)
        throw ShapeMismatch("dewarp sample: map/image extent mismatch");
    Image rows(bm.height, bm.width, 1), cols(bm.height, bm.width, 1);
    const float ry = bm.height > 1 ? 1.0f / float(bm.height - 1) : 0.0f;
    const float rx = bm.width > 1 ? 1.0f / float(bm.width - 1) : 0.0f;
    for (size_t i = 0; i < bm.row.size(); ++i) {
        rows.data[i] = bm.row[i] * ry;
        cols.data[i] = bm.col[i] * rx;
    }
    const Image rs = imgproc::resize_bilinear(rows, p, p);
    const Image cs = imgproc::resize_bilinear(cols, p, p);
    std::memcpy(dst, rs.data.data(), rs.data.size() * 4);
    std::memcpy(dst + size_t(p) * p, cs.data.data(), cs.data.size() * 4);
}

std::string format_loss(float v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", double(v));
    return buf;
}

}  // namespace

TrainResult train(Model& model, const Manifest& manifest, const TrainConfig& cfg,
                  const prompt::PromptConfig& pcfg) {
    std::array<std::vector<size_t>, kTaskCount> per_task;
    for (int t = 0; t < kTaskCount; ++t)
        per_task[size_t(t)] = manifest.indices_for(kAllTasks[size_t(t)]);
    for (int t = 0; t < kTaskCount; ++t) {
        const bool needed = cfg.task_weights[size_t(t)] > 0.0 ||
                            (t == 0 && cfg.pretrain_steps > 0);
        if (needed && per_task[size_t(t)].empty())
            throw EmptyTaskError(std::string("no samples for task '") +
                                 task_name(kAllTasks[size_t(t)]) + "'");
    }

    Rng rng(cfg.seed);
    const int B = cfg.batch, P = cfg.patch;
    const size_t plane = size_t(P) * P;
    TrainResult result;

    for (int step = 0; step < cfg.steps; ++step) {
        const TaskKind task = step < cfg.pretrain_steps ? TaskKind::Dewarp
                                                        : sample_task(cfg.task_weights, rng);
        const auto& pool = per_task[size_t(int(task))];

        std::vector<float> input(size_t(B) * 6 * plane);
        const int target_ch = task == TaskKind::Dewarp ? 2
                              : task == TaskKind::Binarize ? 1 : 3;
        std::vector<float> target(size_t(B) * target_ch * plane);

        for (int b = 0; b < B; ++b) {
            const ManifestRecord& rec = manifest.records[pool[rng.next_range(pool.size())]];
            Image in_img = load_image(manifest.resolve(rec.input));
            Image net_in;

            if (task == TaskKind::Dewarp) {
                const BackwardMap bm = bm_from_tensor(read_tensor(manifest.resolve(rec.target)));
                net_in = imgproc::resize_bilinear(in_img, P, P);
                dewarp_target(in_img, bm, P, target.data() + size_t(b) * 2 * plane);
            } else {
                Image gt_img = load_image(manifest.resolve(rec.target));
                if (!in_img.same_extent(gt_img))
                    throw ShapeMismatch("sample input/target extent mismatch: " + rec.input);
                if (in_img.height < P || in_img.width < P) {
                    in_img = imgproc::resize_bilinear(in_img, std::max(P, in_img.height),
                                                      std::max(P, in_img.width));
                    gt_img = imgproc::resize_bilinear(gt_img, in_img.height, in_img.width);
                }
                const int oi = int(rng.next_range(uint64_t(in_img.height - P + 1)));
                const int oj = int(rng.next_range(uint64_t(in_img.width - P + 1)));
                net_in = crop(in_img, oi, oj, P);
                const Image gt_crop = crop(gt_img, oi, oj, P);
                float* dst = target.data() + size_t(b) * target_ch * plane;
                if (task == TaskKind::Binarize) {
                    const BinaryMap bmap = binary_from_image(gt_crop);
                    for (size_t p = 0; p < plane; ++p) dst[p] = float(bmap.data[p]);
                } else {
                    const Image rgb3 = gt_crop.channels == 3 ? gt_crop : [&] {
                        Image x(P, P, 3);
                        for (size_t p = 0; p < plane; ++p)
                            for (int c = 0; c < 3; ++c) x.data[p * 3 + c] = gt_crop.data[p];
                        return x;
                    }();
                    for (int c = 0; c < 3; ++c)
                        for (size_t p = 0; p < plane; ++p)
                            dst[size_t(c) * plane + p] = rgb3.data[p * 3 + c];
                }
            }
            const std::vector<float> fused = fused_input(net_in, task, cfg.prompt_mode, pcfg);
            std::memcpy(input.data() + size_t(b) * 6 * plane, fused.data(), fused.size() * 4);
        }

        Tape tape;
        const int x = tape.leaf({B, 6, P, P}, input);
        const ForwardResult fr = model_forward(tape, model, x);
        const int loss = task == TaskKind::Binarize
                             ? tape.bce_with_logits_loss(fr.output, target)
                             : tape.l1_loss(fr.output, target, 0, target_ch);
        tape.backward(loss);

        for (Param& p : model.params) std::fill(p.grad.begin(), p.grad.end(), 0.0f);
        accumulate_param_grads(model, tape, fr);
        adamw_step(model, cosine_lr(step, cfg.steps, cfg.lr_max), cfg, step + 1);

        result.loss_log += std::to_string(step) + "\t" + task_name(task) + "\t" +
                           format_loss(tape[loss].val[0]) + "\n";
    }
    return result;
}

void save_checkpoint(const Model& model, const TrainConfig& cfg, const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create checkpoint directory: " + dir);

    std::string index;
    char fname[32];
    for (size_t i = 0; i < model.params.size(); ++i) {
        const Param& p = model.params[i];
        std::snprintf(fname, sizeof fname, "p%04zu.drt1", i);
        Tensor t;
        t.shape.assign(p.shape.begin(), p.shape.end());
        t.data = p.value;
        write_tensor(t, (fs::path(dir) / fname).string());
        index += p.name + "\t" + fname + "\t";
        for (size_t d = 0; d < p.shape.size(); ++d)
            index += (d ? "," : "") + std::to_string(p.shape[d]);
        index += "\n";
    }
    std::ofstream fi(fs::path(dir) / "index.txt", std::ios::trunc);
    fi << index;
    if (!fi) throw IoError("cannot write checkpoint index: " + dir);
    std::ofstream fc(fs::path(dir) / "config.txt", std::ios::trunc);
    fc << config_from_train(cfg).to_text();
    if (!fc) throw IoError("cannot write checkpoint config: " + dir);
}

Model load_checkpoint(const std::string& dir, TrainConfig* cfg_out) {
    const Config conf = Config::parse_file((fs::path(dir) / "config.txt").string());
    const TrainConfig cfg = train_config_from(conf);
    if (cfg_out) *cfg_out = cfg;

    Rng init_rng(cfg.seed);
    Model model = build_model(cfg.widths, init_rng);

    std::ifstream fi(fs::path(dir) / "index.txt");
    if (!fi) throw IoError("cannot open checkpoint index: " + dir);
    std::string line;
    size_t i = 0;
    while (std::getline(fi, line)) {
        if (line.empty()) continue;
        if (i >= model.params.size())
            throw FormatError("checkpoint index has too many parameters");
        const size_t t1 = line.find('\t');
        const size_t t2 = line.find('\t', t1 + 1);
        if (t1 == std::string::npos || t2 == std::string::npos)
            throw FormatError("bad checkpoint index line: " + line);
        const std::string name = line.substr(0, t1);
        const std::string file = line.substr(t1 + 1, t2 - t1 - 1);
        Param& p = model.params[i];
        if (name != p.name)
            throw FormatError("checkpoint parameter order mismatch: " + name + " vs " + p.name);
        const Tensor t = read_tensor((fs::path(dir) / file).string());
        if (t.data.size() != p.value.size())
            throw FormatError("checkpoint parameter size mismatch: " + name);
        p.value = t.data;
        ++i;
    }
    if (i != model.params.size()) throw FormatError("checkpoint index incomplete");
    return model;
}

Prediction predict(const Model& model, const Image& img, TaskKind task, PromptMode mode,
                   const prompt::PromptConfig& pcfg, int dewarp_patch) {
    const int factor = model.pool_factor();
    Prediction pred;
    pred.task = task;

    if (task == TaskKind::Dewarp) {
        int P = std::max(factor, dewarp_patch);
        P -= P % factor;
        const Image small = imgproc::resize_bilinear(img, P, P);
        const std::vector<float> fused = fused_input(small, task, mode, pcfg);
        Tape tape;
        const ForwardResult fr = model_forward(tape, model, tape.leaf({1, 6, P, P}, fused));
        const float* out = tape[fr.output].val.data();

        Image rows(P, P, 1), cols(P, P, 1);
        const size_t plane = size_t(P) * P;
        for (size_t p = 0; p < plane; ++p) {
            rows.data[p] = std::clamp(out[p], 0.0f, 1.0f);
            cols.data[p] = std::clamp(out[plane + p], 0.0f, 1.0f);
        }
        const Image rs = imgproc::resize_bilinear(rows, img.height, img.width);
        const Image cs = imgproc::resize_bilinear(cols, img.height, img.width);
        BackwardMap bm(img.height, img.width);
        for (size_t p = 0; p < bm.row.size(); ++p) {
            bm.row[p] = rs.data[p] * float(img.height - 1);
            bm.col[p] = cs.data[p] * float(img.width - 1);
        }
        pred.image = imgproc::remap_bilinear(img, bm);
        pred.bm = std::move(bm);
        return pred;
    }

    // Pad-replicate to the pool factor, run at native resolution, crop back.
    const int H = (img.height + factor - 1) / factor * factor;
    const int W = (img.width + factor - 1) / factor * factor;
    Image padded(H, W, img.channels);
    for (int i = 0; i < H; ++i)
        for (int j = 0; j < W; ++j)
            for (int c = 0; c < img.channels; ++c)
                padded.at(i, j, c) = img.at(std::min(i, img.height - 1),
                                            std::min(j, img.width - 1), c);

    const std::vector<float> fused = fused_input(padded, task, mode, pcfg);
    Tape tape;
    const ForwardResult fr = model_forward(tape, model, tape.leaf({1, 6, H, W}, fused));
    const float* out = tape[fr.output].val.data();
    const size_t plane = size_t(H) * W;

    if (task == TaskKind::Binarize) {
        BinaryMap bmap(img.height, img.width);
        for (int i = 0; i < img.height; ++i)
            for (int j = 0; j < img.width; ++j) {
                const float logit = out[size_t(i) * W + j];
                bmap.at(i, j) = 1.0f / (1.0f + std::exp(-logit)) > 0.5f ? 1 : 0;
            }
        pred.image = binary_to_image(bmap);
        pred.binary = std::move(bmap);
        return pred;
    }

    Image restored(img.height, img.width, 3);
    for (int i = 0; i < img.height; ++i)
        for (int j = 0; j < img.width; ++j)
            for (int c = 0; c < 3; ++c)
                restored.at(i, j, c) =
                    std::clamp(out[size_t(c) * plane + size_t(i) * W + j], 0.0f, 1.0f);
    pred.image = std::move(restored);
    return pred;
}

}  // namespace docres::net

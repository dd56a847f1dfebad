#include "docres/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "docres/errors.hpp"

namespace docres {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t");
    size_t b = s.find_last_not_of(" \t");
    return a == std::string::npos ? "" : s.substr(a, b - a + 1);
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

}  // namespace

const std::vector<std::string>& Config::known_keys() {
    static const std::vector<std::string> keys = {
        // prompt
        "bg_dilate_radius", "bg_median_radius", "sauvola_radius", "sauvola_k",
        "sauvola_r", "mask_blur_sigma",
        // synth
        "page_size", "warp_amplitude", "warp_scale", "shadow_strength",
        "blur_sigma_min", "blur_sigma_max", "blur_motion_prob", "deblur_noise_std",
        "noise_std", "stain_count_min", "stain_count_max", "bleed_strength",
        "contrast_max", "binarize_noise_std",
        // train
        "steps", "pretrain_steps", "batch", "lr_max", "weight_decay", "beta1",
        "beta2", "eps", "patch", "task_weights", "prompt_mode", "widths",
        // shared
        "seed"};
    return keys;
}

Config Config::parse_string(const std::string& text) {
    Config c;
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        if (const size_t hash = line.find('#'); hash != std::string::npos)
            line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw FormatError("config line " + std::to_string(lineno) + ": expected key=value");
        c.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return c;
}

Config Config::parse_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open config: " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_string(ss.str());
}

void Config::set(const std::string& key, const std::string& value) {
    const auto& keys = known_keys();
    if (std::find(keys.begin(), keys.end(), key) == keys.end())
        throw FormatError("unknown config key: '" + key + "'");
    kv_[key] = value;
}

std::string Config::get_string(const std::string& key, const std::string& def) const {
    const auto it = kv_.find(key);
    return it == kv_.end() ? def : it->second;
}

int Config::get_int(const std::string& key, int def) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) return def;
    try {
        size_t pos = 0;
        const int v = std::stoi(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        throw FormatError("config key '" + key + "': not an integer: " + it->second);
    }
}

double Config::get_double(const std::string& key, double def) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) return def;
    try {
        size_t pos = 0;
        const double v = std::stod(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        throw FormatError("config key '" + key + "': not a number: " + it->second);
    }
}

uint64_t Config::get_u64(const std::string& key, uint64_t def) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) return def;
    try {
        size_t pos = 0;
        const uint64_t v = std::stoull(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        throw FormatError("config key '" + key + "': not an unsigned integer: " + it->second);
    }
}

std::vector<double> Config::get_list(const std::string& key,
                                     const std::vector<double>& def) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) return def;
    std::vector<double> out;
    std::stringstream ss(it->second);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            out.push_back(std::stod(trim(item)));
        } catch (const std::exception&) {
            throw FormatError("config key '" + key + "': bad list element: " + item);
        }
    }
    return out;
}

std::string Config::to_text() const {
    std::string out;
    for (const auto& [k, v] : kv_) out += k + "=" + v + "\n";
    return out;
}

prompt::PromptConfig prompt_config_from(const Config& c) {
    prompt::PromptConfig p;
    p.bg_dilate_radius = c.get_int("bg_dilate_radius", p.bg_dilate_radius);
    p.bg_median_radius = c.get_int("bg_median_radius", p.bg_median_radius);
    p.sauvola_radius = c.get_int("sauvola_radius", p.sauvola_radius);
    p.sauvola_k = float(c.get_double("sauvola_k", p.sauvola_k));
    p.sauvola_R = float(c.get_double("sauvola_r", p.sauvola_R));
    p.mask_blur_sigma = float(c.get_double("mask_blur_sigma", p.mask_blur_sigma));
    if (p.bg_dilate_radius < 1 || p.bg_median_radius < 1 || p.sauvola_radius < 1 ||
        p.mask_blur_sigma <= 0.0f)
        throw InvalidParam("prompt config: radii must be >= 1 and sigma > 0");
    return p;
}

synth::SynthConfig synth_config_from(const Config& c) {
    synth::SynthConfig s;
    s.page_size = c.get_int("page_size", s.page_size);
    s.seed = c.get_u64("seed", s.seed);
    s.warp_amplitude = float(c.get_double("warp_amplitude", s.warp_amplitude));
    s.warp_scale = c.get_int("warp_scale", s.warp_scale);
    s.shadow_strength = float(c.get_double("shadow_strength", s.shadow_strength));
    s.blur_sigma_min = float(c.get_double("blur_sigma_min", s.blur_sigma_min));
    s.blur_sigma_max = float(c.get_double("blur_sigma_max", s.blur_sigma_max));
    s.blur_motion_prob = float(c.get_double("blur_motion_prob", s.blur_motion_prob));
    s.deblur_noise_std = float(c.get_double("deblur_noise_std", s.deblur_noise_std));
    s.noise_std = float(c.get_double("noise_std", s.noise_std));
    s.stain_count_min = c.get_int("stain_count_min", s.stain_count_min);
    s.stain_count_max = c.get_int("stain_count_max", s.stain_count_max);
    s.bleed_strength = float(c.get_double("bleed_strength", s.bleed_strength));
    s.contrast_max = float(c.get_double("contrast_max", s.contrast_max));
    s.binarize_noise_std = float(c.get_double("binarize_noise_std", s.binarize_noise_std));
    if (s.warp_amplitude < 0.0f || s.blur_sigma_min > s.blur_sigma_max ||
        s.stain_count_min > s.stain_count_max)
        throw InvalidParam("synth config: ranges must be ordered and amplitudes positive");
    return s;
}

net::TrainConfig train_config_from(const Config& c) {
    net::TrainConfig t;
    t.steps = c.get_int("steps", t.steps);
    t.pretrain_steps = c.get_int("pretrain_steps", t.pretrain_steps);
    t.batch = c.get_int("batch", t.batch);
    t.lr_max = float(c.get_double("lr_max", t.lr_max));
    t.weight_decay = float(c.get_double("weight_decay", t.weight_decay));
    t.beta1 = float(c.get_double("beta1", t.beta1));
    t.beta2 = float(c.get_double("beta2", t.beta2));
    t.eps = float(c.get_double("eps", t.eps));
    t.patch = c.get_int("patch", t.patch);
    t.seed = c.get_u64("seed", t.seed);
    t.prompt_mode = net::prompt_mode_from_name(
        c.get_string("prompt_mode", net::prompt_mode_name(t.prompt_mode)));

    const std::vector<double> weights =
        c.get_list("task_weights", {t.task_weights.begin(), t.task_weights.end()});
    if (weights.size() != kTaskCount)
        throw InvalidParam("task_weights: expected 5 values");
    double sum = 0.0;
    for (size_t i = 0; i < weights.size(); ++i) {
        if (weights[i] < 0.0) throw InvalidParam("task_weights: negative weight");
        t.task_weights[i] = weights[i];
        sum += weights[i];
    }
    if (std::abs(sum - 1.0) > 1e-9) throw InvalidParam("task_weights: must sum to 1");

    const std::vector<double> widths =
        c.get_list("widths", std::vector<double>(t.widths.begin(), t.widths.end()));
    t.widths.assign(widths.begin(), widths.end());

    if (t.steps < t.pretrain_steps || t.pretrain_steps < 0)
        throw InvalidParam("train config: need steps >= pretrain_steps >= 0");
    if (t.batch < 1 || t.patch < 4) throw InvalidParam("train config: bad batch/patch");
    return t;
}

Config config_from_train(const net::TrainConfig& t) {
    Config c;
    c.set("steps", std::to_string(t.steps));
    c.set("pretrain_steps", std::to_string(t.pretrain_steps));
    c.set("batch", std::to_string(t.batch));
    c.set("lr_max", format_double(t.lr_max));
    c.set("weight_decay", format_double(t.weight_decay));
    c.set("beta1", format_double(t.beta1));
    c.set("beta2", format_double(t.beta2));
    c.set("eps", format_double(t.eps));
    c.set("patch", std::to_string(t.patch));
    c.set("seed", std::to_string(t.seed));
    c.set("prompt_mode", net::prompt_mode_name(t.prompt_mode));
    std::string weights, widths;
    for (size_t i = 0; i < t.task_weights.size(); ++i)
        weights += (i ? "," : "") + format_double(t.task_weights[i]);
    for (size_t i = 0; i < t.widths.size(); ++i)
        widths += (i ? "," : "") + std::to_string(t.widths[i]);
    c.set("task_weights", weights);
    c.set("widths", widths);
    return c;
}

}  // namespace docres

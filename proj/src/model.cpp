#include <cmath>
#include <cstring>

#include "docres/errors.hpp"
#include "docres/net.hpp"

namespace docres::net {

namespace {

Param make_conv_param(const std::string& name, int out_ch, int in_ch, Rng& rng) {
    Param p;
    p.name = name + ".weight";
    p.shape = {out_ch, in_ch, 3, 3};
    const size_t n = size_t(out_ch) * in_ch * 9;
    p.value.resize(n);
    const float bound = std::sqrt(6.0f / float(in_ch * 9));  // Kaiming-uniform
    for (size_t i = 0; i < n; ++i) p.value[i] = float(rng.uniform(-bound, bound));
    p.grad.assign(n, 0.0f);
    p.m.assign(n, 0.0f);
    p.v.assign(n, 0.0f);
    return p;
}

Param make_bias_param(const std::string& name, int out_ch) {
    Param p;
    p.name = name + ".bias";
    p.shape = {out_ch};
    p.value.assign(size_t(out_ch), 0.0f);
    p.grad.assign(size_t(out_ch), 0.0f);
    p.m.assign(size_t(out_ch), 0.0f);
    p.v.assign(size_t(out_ch), 0.0f);
    return p;
}

void add_conv(Model& m, const std::string& name, int out_ch, int in_ch, Rng& rng) {
    m.params.push_back(make_conv_param(name, out_ch, in_ch, rng));
    m.params.push_back(make_bias_param(name, out_ch));
}

}  // namespace

Model build_model(const std::vector<int>& widths, Rng& rng) {
    if (widths.size() < 2 || widths.size() > 4)
        throw InvalidParam("build_model: 2-4 width levels expected");
    Model m;
    m.widths = widths;
    const int L = int(widths.size());

    add_conv(m, "stem", widths[0], 6, rng);
    for (int i = 0; i < L; ++i) {
        const int in0 = i == 0 ? widths[0] : widths[size_t(i) - 1];
        add_conv(m, "enc" + std::to_string(i) + ".conv0", widths[size_t(i)], in0, rng);
        add_conv(m, "enc" + std::to_string(i) + ".conv1", widths[size_t(i)], widths[size_t(i)], rng);
    }
    for (int i = L - 2; i >= 0; --i) {
        const int in0 = widths[size_t(i) + 1] + widths[size_t(i)];  // upsample + skip
        add_conv(m, "dec" + std::to_string(i) + ".conv0", widths[size_t(i)], in0, rng);
        add_conv(m, "dec" + std::to_string(i) + ".conv1", widths[size_t(i)], widths[size_t(i)], rng);
    }
    add_conv(m, "head", 3, widths[0], rng);
    return m;
}

size_t param_count(const Model& m) {
    size_t n = 0;
    for (const auto& p : m.params) n += p.numel();
    return n;
}

ForwardResult model_forward(Tape& tape, const Model& model, int input) {
    const auto& in_shape = tape[input].shape;
    if (in_shape.size() != 4 || in_shape[1] != 6)
        throw ShapeMismatch("model_forward: input must be [N,6,H,W]");
    const int factor = model.pool_factor();
    if (in_shape[2] % factor != 0 || in_shape[3] % factor != 0)
        throw ShapeMismatch("model_forward: extents must be multiples of " +
                            std::to_string(factor));

    ForwardResult fr;
    size_t next = 0;
    auto bind = [&](const Param& p) {
        const int id = tape.leaf(p.shape, p.value);
        fr.param_nodes.push_back(id);
        ++next;
        return id;
    };
    auto conv = [&](int x) {
        const int w = bind(model.params[next]);
        const int b = bind(model.params[next]);
        return tape.conv2d(x, w, b, 1, 1);
    };

    const int L = int(model.widths.size());
    int x = conv(input);  // stem
    std::vector<int> skips;
    for (int i = 0; i < L; ++i) {
        x = tape.leaky_relu(conv(x));
        x = tape.leaky_relu(conv(x));
        if (i < L - 1) {
            skips.push_back(x);
            x = tape.avgpool2(x);
        }
    }
    for (int i = L - 2; i >= 0; --i) {
        x = tape.upsample_nearest2(x);
        x = tape.concat_channels(x, skips[size_t(i)]);
        x = tape.leaky_relu(conv(x));
        x = tape.leaky_relu(conv(x));
    }
    fr.output = conv(x);  // head, linear
    return fr;
}

void accumulate_param_grads(Model& model, const Tape& tape, const ForwardResult& fr) {
    for (size_t i = 0; i < fr.param_nodes.size(); ++i) {
        const auto& g = tape[fr.param_nodes[i]].grad;
        auto& dst = model.params[i].grad;
        for (size_t k = 0; k < dst.size(); ++k) dst[k] += g[k];
    }
}

}  // namespace docres::net

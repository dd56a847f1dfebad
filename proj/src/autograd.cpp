#include "docres/autograd.hpp"

#include <cmath>
#include <cstring>

#include "docres/errors.hpp"

namespace docres::net {

namespace {

size_t numel(const std::vector<int>& shape) {
    size_t n = 1;
    for (int e : shape) n *= size_t(e);
    return n;
}

// C[M,N] += A[M,K] * B[K,N]; axpy order with k unrolled 4x so the C row is
// loaded/stored once per four FMAs. Inner loop contiguous over N.
void gemm_acc(int M, int N, int K, const float* __restrict A, const float* __restrict B,
              float* __restrict C) {
    for (int m = 0; m < M; ++m) {
        float* __restrict crow = C + size_t(m) * N;
        const float* arow = A + size_t(m) * K;
        int k = 0;
        for (; k + 4 <= K; k += 4) {
            const float a0 = arow[k], a1 = arow[k + 1], a2 = arow[k + 2], a3 = arow[k + 3];
            const float* __restrict b0 = B + size_t(k) * N;
            const float* __restrict b1 = b0 + N;
            const float* __restrict b2 = b1 + N;
            const float* __restrict b3 = b2 + N;
            for (int n = 0; n < N; ++n)
                crow[n] += a0 * b0[n] + a1 * b1[n] + a2 * b2[n] + a3 * b3[n];
        }
        for (; k < K; ++k) {
            const float a = arow[k];
            const float* __restrict brow = B + size_t(k) * N;
            for (int n = 0; n < N; ++n) crow[n] += a * brow[n];
        }
    }
}

void transpose(int R, int Ccols, const float* src, float* dst) {
    for (int r = 0; r < R; ++r)
        for (int c = 0; c < Ccols; ++c) dst[size_t(c) * R + r] = src[size_t(r) * Ccols + c];
}

void im2col(const float* x, int C, int H, int W, int kh, int kw, int stride, int pad,
            int Ho, int Wo, float* col) {
    for (int c = 0; c < C; ++c)
        for (int ki = 0; ki < kh; ++ki)
            for (int kj = 0; kj < kw; ++kj) {
                float* dst = col + ((size_t(c) * kh + ki) * kw + kj) * Ho * Wo;
                for (int oi = 0; oi < Ho; ++oi) {
                    const int si = oi * stride + ki - pad;
                    if (si < 0 || si >= H) {
                        std::memset(dst + size_t(oi) * Wo, 0, size_t(Wo) * 4);
                        continue;
                    }
                    const float* src = x + (size_t(c) * H + si) * W;
                    for (int oj = 0; oj < Wo; ++oj) {
                        const int sj = oj * stride + kj - pad;
                        dst[size_t(oi) * Wo + oj] = (sj < 0 || sj >= W) ? 0.0f : src[sj];
                    }
                }
            }
}

void col2im_acc(const float* col, int C, int H, int W, int kh, int kw, int stride,
                int pad, int Ho, int Wo, float* dx) {
    for (int c = 0; c < C; ++c)
        for (int ki = 0; ki < kh; ++ki)
            for (int kj = 0; kj < kw; ++kj) {
                const float* src = col + ((size_t(c) * kh + ki) * kw + kj) * Ho * Wo;
                for (int oi = 0; oi < Ho; ++oi) {
                    const int si = oi * stride + ki - pad;
                    if (si < 0 || si >= H) continue;
                    float* dst = dx + (size_t(c) * H + si) * W;
                    for (int oj = 0; oj < Wo; ++oj) {
                        const int sj = oj * stride + kj - pad;
                        if (sj >= 0 && sj < W) dst[sj] += src[size_t(oi) * Wo + oj];
                    }
                }
            }
}

}  // namespace

int Tape::alloc(std::vector<int> shape) {
    Node node;
    node.shape = std::move(shape);
    node.val.assign(numel(node.shape), 0.0f);
    node.grad.assign(node.val.size(), 0.0f);
    nodes_.push_back(std::move(node));
    return int(nodes_.size()) - 1;
}

int Tape::leaf(std::vector<int> shape, const float* data) {
    const int id = alloc(std::move(shape));
    std::memcpy(nodes_[size_t(id)].val.data(), data, nodes_[size_t(id)].val.size() * 4);
    return id;
}

void Tape::backward(int loss_id) {
    if (nodes_[size_t(loss_id)].val.size() != 1)
        throw ShapeMismatch("backward: loss must be scalar");
    nodes_[size_t(loss_id)].grad[0] = 1.0f;
    for (int id = loss_id; id >= 0; --id)
        if (nodes_[size_t(id)].backward) nodes_[size_t(id)].backward();
}

int Tape::conv2d(int x, int w, int b, int stride, int pad) {
    const auto& xs = nodes_[size_t(x)].shape;
    const auto& ws = nodes_[size_t(w)].shape;
    if (xs.size() != 4 || ws.size() != 4 || xs[1] != ws[1])
        throw ShapeMismatch("conv2d: bad operand shapes");
    const int N = xs[0], C = xs[1], H = xs[2], W = xs[3];
    const int K = ws[0], kh = ws[2], kw = ws[3];
    const int Ho = (H + 2 * pad - kh) / stride + 1;
    const int Wo = (W + 2 * pad - kw) / stride + 1;
    if (Ho < 1 || Wo < 1) throw ShapeMismatch("conv2d: empty output");
    if (b >= 0 && nodes_[size_t(b)].shape != std::vector<int>{K})
        throw ShapeMismatch("conv2d: bias shape");

    const int out = alloc({N, K, Ho, Wo});
    const int ckk = C * kh * kw, hw = Ho * Wo;
    {
        std::vector<float> col(size_t(ckk) * hw);
        Node& xo = nodes_[size_t(x)];
        Node& wo = nodes_[size_t(w)];
        Node& oo = nodes_[size_t(out)];
        for (int n = 0; n < N; ++n) {
            im2col(xo.val.data() + size_t(n) * C * H * W, C, H, W, kh, kw, stride, pad,
                   Ho, Wo, col.data());
            float* y = oo.val.data() + size_t(n) * K * hw;
            gemm_acc(K, hw, ckk, wo.val.data(), col.data(), y);
            if (b >= 0) {
                const float* bias = nodes_[size_t(b)].val.data();
                for (int k = 0; k < K; ++k)
                    for (int p = 0; p < hw; ++p) y[size_t(k) * hw + p] += bias[k];
            }
        }
    }

    nodes_[size_t(out)].backward = [this, x, w, b, out, N, C, H, W, K, kh, kw, stride,
                                    pad, Ho, Wo, ckk, hw]() {
        Node& xo = nodes_[size_t(x)];
        Node& wo = nodes_[size_t(w)];
        Node& oo = nodes_[size_t(out)];
        std::vector<float> col(size_t(ckk) * hw);
        std::vector<float> colt(size_t(ckk) * hw);  // col^T [HW, CKK]
        std::vector<float> dcol(size_t(ckk) * hw);
        std::vector<float> wt(size_t(ckk) * K);     // w^T [CKK, K]
        transpose(K, ckk, wo.val.data(), wt.data());

        for (int n = 0; n < N; ++n) {
            const float* dy = oo.grad.data() + size_t(n) * K * hw;
            im2col(xo.val.data() + size_t(n) * C * H * W, C, H, W, kh, kw, stride, pad,
                   Ho, Wo, col.data());
            transpose(ckk, hw, col.data(), colt.data());
            gemm_acc(K, ckk, hw, dy, colt.data(), wo.grad.data());
            std::memset(dcol.data(), 0, dcol.size() * 4);
            gemm_acc(ckk, hw, K, wt.data(), dy, dcol.data());
            col2im_acc(dcol.data(), C, H, W, kh, kw, stride, pad, Ho, Wo,
                       xo.grad.data() + size_t(n) * C * H * W);
            if (b >= 0) {
                float* db = nodes_[size_t(b)].grad.data();
                for (int k = 0; k < K; ++k) {
                    float s = 0.0f;
                    for (int p = 0; p < hw; ++p) s += dy[size_t(k) * hw + p];
                    db[k] += s;
                }
            }
        }
    };
    return out;
}

int Tape::relu(int x) {
    const int out = alloc(nodes_[size_t(x)].shape);
    Node& xo = nodes_[size_t(x)];
    Node& oo = nodes_[size_t(out)];
    for (size_t i = 0; i < xo.val.size(); ++i) oo.val[i] = xo.val[i] > 0.0f ? xo.val[i] : 0.0f;
    oo.backward = [this, x, out]() {
        Node& xn = nodes_[size_t(x)];
        Node& on = nodes_[size_t(out)];
        for (size_t i = 0; i < xn.val.size(); ++i)
            if (xn.val[i] > 0.0f) xn.grad[i] += on.grad[i];  // subgradient 0 at 0
    };
    return out;
}

int Tape::leaky_relu(int x, float slope) {
    const int out = alloc(nodes_[size_t(x)].shape);
    Node& xo = nodes_[size_t(x)];
    Node& oo = nodes_[size_t(out)];
    for (size_t i = 0; i < xo.val.size(); ++i)
        oo.val[i] = xo.val[i] > 0.0f ? xo.val[i] : slope * xo.val[i];
    oo.backward = [this, x, out, slope]() {
        Node& xn = nodes_[size_t(x)];
        Node& on = nodes_[size_t(out)];
        for (size_t i = 0; i < xn.val.size(); ++i)
            xn.grad[i] += (xn.val[i] > 0.0f ? 1.0f : slope) * on.grad[i];
    };
    return out;
}

int Tape::sigmoid(int x) {
    const int out = alloc(nodes_[size_t(x)].shape);
    Node& xo = nodes_[size_t(x)];
    Node& oo = nodes_[size_t(out)];
    for (size_t i = 0; i < xo.val.size(); ++i)
        oo.val[i] = 1.0f / (1.0f + std::exp(-xo.val[i]));
    oo.backward = [this, x, out]() {
        Node& xn = nodes_[size_t(x)];
        Node& on = nodes_[size_t(out)];
        for (size_t i = 0; i < xn.val.size(); ++i)
            xn.grad[i] += on.val[i] * (1.0f - on.val[i]) * on.grad[i];
    };
    return out;
}

int Tape::avgpool2(int x) {
    const auto& xs = nodes_[size_t(x)].shape;
    if (xs.size() != 4 || xs[2] % 2 != 0 || xs[3] % 2 != 0)
        throw ShapeMismatch("avgpool2: extents must be even");
    const int N = xs[0], C = xs[1], H = xs[2], W = xs[3];
    const int out = alloc({N, C, H / 2, W / 2});
    Node& xo = nodes_[size_t(x)];
    Node& oo = nodes_[size_t(out)];
    const int Ho = H / 2, Wo = W / 2;
    for (int nc = 0; nc < N * C; ++nc) {
        const float* src = xo.val.data() + size_t(nc) * H * W;
        float* dst = oo.val.data() + size_t(nc) * Ho * Wo;
        for (int i = 0; i < Ho; ++i)
            for (int j = 0; j < Wo; ++j)
                dst[size_t(i) * Wo + j] =
                    0.25f * (src[size_t(2 * i) * W + 2 * j] + src[size_t(2 * i) * W + 2 * j + 1] +
                             src[size_t(2 * i + 1) * W + 2 * j] + src[size_t(2 * i + 1) * W + 2 * j + 1]);
    }
    oo.backward = [this, x, out, N, C, H, W, Ho, Wo]() {
        Node& xn = nodes_[size_t(x)];
        Node& on = nodes_[size_t(out)];
        for (int nc = 0; nc < N * C; ++nc) {
            float* dx = xn.grad.data() + size_t(nc) * H * W;
            const float* dy = on.grad.data() + size_t(nc) * Ho * Wo;
            for (int i = 0; i < Ho; ++i)
                for (int j = 0; j < Wo; ++j) {
                    const float g = 0.25f * dy[size_t(i) * Wo + j];
                    dx[size_t(2 * i) * W + 2 * j] += g;
                    dx[size_t(2 * i) * W + 2 * j + 1] += g;
                    dx[size_t(2 * i + 1) * W + 2 * j] += g;
                    dx[size_t(2 * i + 1) * W + 2 * j + 1] += g;
                }
        }
    };
    return out;
}

int Tape::upsample_nearest2(int x) {
    const auto& xs = nodes_[size_t(x)].shape;
    if (xs.size() != 4) throw ShapeMismatch("upsample_nearest2: rank-4 input expected");
    const int N = xs[0], C = xs[1], H = xs[2], W = xs[3];
    const int out = alloc({N, C, H * 2, W * 2});
    Node& xo = nodes_[size_t(x)];
    Node& oo = nodes_[size_t(out)];
    for (int nc = 0; nc < N * C; ++nc) {
        const float* src = xo.val.data() + size_t(nc) * H * W;
        float* dst = oo.val.data() + size_t(nc) * 4 * H * W;
        for (int i = 0; i < 2 * H; ++i)
            for (int j = 0; j < 2 * W; ++j)
                dst[size_t(i) * 2 * W + j] = src[size_t(i / 2) * W + j / 2];
    }
    oo.backward = [this, x, out, N, C, H, W]() {
        Node& xn = nodes_[size_t(x)];
        Node& on = nodes_[size_t(out)];
        for (int nc = 0; nc < N * C; ++nc) {
            float* dx = xn.grad.data() + size_t(nc) * H * W;
            const float* dy = on.grad.data() + size_t(nc) * 4 * H * W;
            for (int i = 0; i < 2 * H; ++i)
                for (int j = 0; j < 2 * W; ++j)
                    dx[size_t(i / 2) * W + j / 2] += dy[size_t(i) * 2 * W + j];
        }
    };
    return out;
}

int Tape::concat_channels(int a, int b) {
    const auto& as = nodes_[size_t(a)].shape;
    const auto& bs = nodes_[size_t(b)].shape;
    if (as.size() != 4 || bs.size() != 4 || as[0] != bs[0] || as[2] != bs[2] || as[3] != bs[3])
        throw ShapeMismatch("concat_channels: extent mismatch");
    const int N = as[0], Ca = as[1], Cb = bs[1], H = as[2], W = as[3];
    const int out = alloc({N, Ca + Cb, H, W});
    Node& ao = nodes_[size_t(a)];
    Node& bo = nodes_[size_t(b)];
    Node& oo = nodes_[size_t(out)];
    const size_t plane = size_t(H) * W;
    for (int n = 0; n < N; ++n) {
        std::memcpy(oo.val.data() + size_t(n) * (Ca + Cb) * plane,
                    ao.val.data() + size_t(n) * Ca * plane, size_t(Ca) * plane * 4);
        std::memcpy(oo.val.data() + (size_t(n) * (Ca + Cb) + Ca) * plane,
                    bo.val.data() + size_t(n) * Cb * plane, size_t(Cb) * plane * 4);
    }
    oo.backward = [this, a, b, out, N, Ca, Cb, plane]() {
        Node& an = nodes_[size_t(a)];
        Node& bn = nodes_[size_t(b)];
        Node& on = nodes_[size_t(out)];
        for (int n = 0; n < N; ++n) {
            const float* dy = on.grad.data() + size_t(n) * (Ca + Cb) * plane;
            float* da = an.grad.data() + size_t(n) * Ca * plane;
            float* db = bn.grad.data() + size_t(n) * Cb * plane;
            for (size_t i = 0; i < size_t(Ca) * plane; ++i) da[i] += dy[i];
            for (size_t i = 0; i < size_t(Cb) * plane; ++i) db[i] += dy[size_t(Ca) * plane + i];
        }
    };
    return out;
}

int Tape::add(int a, int b) {
    if (nodes_[size_t(a)].shape != nodes_[size_t(b)].shape)
        throw ShapeMismatch("add: shape mismatch");
    const int out = alloc(nodes_[size_t(a)].shape);
    Node& ao = nodes_[size_t(a)];
    Node& bo = nodes_[size_t(b)];
    Node& oo = nodes_[size_t(out)];
    for (size_t i = 0; i < oo.val.size(); ++i) oo.val[i] = ao.val[i] + bo.val[i];
    oo.backward = [this, a, b, out]() {
        Node& an = nodes_[size_t(a)];
        Node& bn = nodes_[size_t(b)];
        Node& on = nodes_[size_t(out)];
        for (size_t i = 0; i < on.grad.size(); ++i) {
            an.grad[i] += on.grad[i];
            bn.grad[i] += on.grad[i];
        }
    };
    return out;
}

int Tape::mul_scalar(int x, float s) {
    const int out = alloc(nodes_[size_t(x)].shape);
    Node& xo = nodes_[size_t(x)];
    Node& oo = nodes_[size_t(out)];
    for (size_t i = 0; i < oo.val.size(); ++i) oo.val[i] = s * xo.val[i];
    oo.backward = [this, x, out, s]() {
        Node& xn = nodes_[size_t(x)];
        Node& on = nodes_[size_t(out)];
        for (size_t i = 0; i < on.grad.size(); ++i) xn.grad[i] += s * on.grad[i];
    };
    return out;
}

int Tape::l1_loss(int x, const std::vector<float>& target, int ch_begin, int ch_end) {
    const auto& xs = nodes_[size_t(x)].shape;
    if (xs.size() != 4 || ch_end > xs[1] || ch_begin >= ch_end)
        throw ShapeMismatch("l1_loss: bad channel range");
    const int N = xs[0], C = xs[1], H = xs[2], W = xs[3];
    const int Ct = ch_end - ch_begin;
    const size_t plane = size_t(H) * W;
    if (target.size() != size_t(N) * Ct * plane)
        throw ShapeMismatch("l1_loss: target size mismatch");

    const int out = alloc({1});
    Node& xo = nodes_[size_t(x)];
    double acc = 0.0;
    for (int n = 0; n < N; ++n)
        for (int c = 0; c < Ct; ++c) {
            const float* xv = xo.val.data() + (size_t(n) * C + ch_begin + c) * plane;
            const float* tv = target.data() + (size_t(n) * Ct + c) * plane;
            for (size_t p = 0; p < plane; ++p) acc += std::fabs(double(xv[p]) - tv[p]);
        }
    const double count = double(N) * Ct * double(plane);
    nodes_[size_t(out)].val[0] = float(acc / count);
    nodes_[size_t(out)].scalar_f64 = acc / count;
    nodes_[size_t(out)].backward = [this, x, out, target, ch_begin, Ct, N, C, plane,
                                    count]() {
        Node& xn = nodes_[size_t(x)];
        const float g = nodes_[size_t(out)].grad[0] / float(count);
        for (int n = 0; n < N; ++n)
            for (int c = 0; c < Ct; ++c) {
                const float* xv = xn.val.data() + (size_t(n) * C + ch_begin + c) * plane;
                float* dx = xn.grad.data() + (size_t(n) * C + ch_begin + c) * plane;
                const float* tv = target.data() + (size_t(n) * Ct + c) * plane;
                for (size_t p = 0; p < plane; ++p) {
                    const float d = xv[p] - tv[p];
                    dx[p] += d > 0.0f ? g : (d < 0.0f ? -g : 0.0f);
                }
            }
    };
    return out;
}

int Tape::bce_with_logits_loss(int x, const std::vector<float>& target) {
    const auto& xs = nodes_[size_t(x)].shape;
    if (xs.size() != 4) throw ShapeMismatch("bce_with_logits_loss: rank-4 input expected");
    const int N = xs[0], C = xs[1], H = xs[2], W = xs[3];
    const size_t plane = size_t(H) * W;
    if (target.size() != size_t(N) * plane)
        throw ShapeMismatch("bce_with_logits_loss: target size mismatch");

    const int out = alloc({1});
    Node& xo = nodes_[size_t(x)];
    double acc = 0.0;
    for (int n = 0; n < N; ++n) {
        const float* xv = xo.val.data() + size_t(n) * C * plane;  // channel 0
        const float* tv = target.data() + size_t(n) * plane;
        for (size_t p = 0; p < plane; ++p) {
            const double z = xv[p], t = tv[p];
            acc += std::max(z, 0.0) - z * t + std::log1p(std::exp(-std::fabs(z)));
        }
    }
    const double count = double(N) * double(plane);
    nodes_[size_t(out)].val[0] = float(acc / count);
    nodes_[size_t(out)].scalar_f64 = acc / count;
    nodes_[size_t(out)].backward = [this, x, out, target, N, C, plane, count]() {
        Node& xn = nodes_[size_t(x)];
        const float g = nodes_[size_t(out)].grad[0] / float(count);
        for (int n = 0; n < N; ++n) {
            const float* xv = xn.val.data() + size_t(n) * C * plane;
            float* dx = xn.grad.data() + size_t(n) * C * plane;
            const float* tv = target.data() + size_t(n) * plane;
            for (size_t p = 0; p < plane; ++p) {
                const float s = 1.0f / (1.0f + std::exp(-xv[p]));
                dx[p] += (s - tv[p]) * g;
            }
        }
    };
    return out;
}

}  // namespace docres::net

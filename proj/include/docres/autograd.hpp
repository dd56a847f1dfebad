#pragma once

#include <deque>
#include <functional>
#include <vector>

namespace docres::net {

// Reverse-mode tape over dense f32 tensors. Nodes are created in forward
// order; backward() sweeps the tape in reverse, so creation order is the
// topological order. All reductions run in a fixed order for bit-stable
// training.
struct Node {
    std::vector<int> shape;  // [N,C,H,W] for conv-path tensors, [1] for scalars
    std::vector<float> val;
    std::vector<float> grad;
    double scalar_f64 = 0.0;  // loss ops keep their f64 accumulator here
    std::function<void()> backward;  // pushes this->grad into parents
};

class Tape {
  public:
    int leaf(std::vector<int> shape, const float* data);
    int leaf(std::vector<int> shape, const std::vector<float>& data) {
        return leaf(std::move(shape), data.data());
    }

    Node& operator[](int id) { return nodes_[size_t(id)]; }
    const Node& operator[](int id) const { return nodes_[size_t(id)]; }
    size_t size() const { return nodes_.size(); }

    // Seeds d(loss)/d(loss) = 1 and accumulates gradients into every node.
    void backward(int loss_id);

    // x:[N,C,H,W] w:[K,C,kh,kw] b:[K] (-1 for none); same-padding via pad.
    int conv2d(int x, int w, int b, int stride = 1, int pad = 1);
    int relu(int x);
    int leaky_relu(int x, float slope = 0.1f);
    int sigmoid(int x);
    int avgpool2(int x);
    int upsample_nearest2(int x);
    int concat_channels(int a, int b);
    int add(int a, int b);
    int mul_scalar(int x, float s);

    // Mean L1 over channels [ch_begin, ch_end); target laid out with exactly
    // those channels: [N, ch_end-ch_begin, H, W].
    int l1_loss(int x, const std::vector<float>& target, int ch_begin, int ch_end);
    // Mean binary cross-entropy of sigmoid(channel 0) against {0,1} targets.
    int bce_with_logits_loss(int x, const std::vector<float>& target);

  private:
    int alloc(std::vector<int> shape);
    std::deque<Node> nodes_;
};

}  // namespace docres::net

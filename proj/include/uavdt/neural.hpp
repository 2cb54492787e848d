#pragma once

#include "uavdt/common.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace uavdt::nn {

struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> s, double fill = 0.0);

    std::size_t size() const { return data.size(); }
    std::size_t dim(std::size_t i) const { return shape.at(i); }
    double& operator[](std::size_t i) { return data[i]; }
    double operator[](std::size_t i) const { return data[i]; }
};

std::size_t shape_product(const std::vector<std::size_t>& shape);

struct ParamBlock {
    std::string name;
    std::vector<std::size_t> shape;
    std::size_t offset = 0;
    std::size_t size = 0;
};

// All learnable values of one network in a single flat buffer. The layout
// (blocks) is fixed by the network spec; `version` bumps on every mutation so
// tapes recorded against older values can be rejected.
struct NetworkParams {
    std::vector<ParamBlock> blocks;
    std::vector<double> values;
    std::uint64_t version = 0;

    const ParamBlock& block(const std::string& name) const;
    std::span<double> view(const std::string& name);
    std::span<const double> view(const std::string& name) const;
    bool same_layout(const NetworkParams& other) const;
};

enum class HeadActivation { Linear, Tanh };

// Declarative description of the dual-branch conv network. Each branch reads
// one channel of the state; branch features are concatenated, fused,
// passed through channel + spatial attention, globally pooled, optionally
// joined with an action vector, then through shared dense layers and
// `heads` independent scalar heads.
struct NetSpec {
    std::string preset = "desk";
    int height = 20;
    int width = 20;
    int branches = 2;
    std::vector<int> branch_channels{8, 16};
    std::vector<int> fusion_channels{32};
    int kernel = 3;
    int stride = 2;
    int padding = 1;
    bool attention = true;
    int attention_reduction = 4;
    int spatial_kernel = 3;
    std::vector<int> shared_fc{64, 32};
    std::vector<int> head_hidden{16};
    int heads = 3;
    int action_inputs = 0;
    HeadActivation head_activation = HeadActivation::Tanh;

    static NetSpec paper_actor(int grid);
    static NetSpec paper_critic(int grid);
    static NetSpec desk_actor(int grid);
    static NetSpec desk_critic(int grid);
};

struct Conv2d {
    int in_c = 0, out_c = 0, kernel = 3, stride = 1, padding = 0;
    std::size_t w_off = 0, b_off = 0;
    int out_size(int n) const { return (n + 2 * padding - kernel) / stride + 1; }
};

// Weights stored [in][out].
struct Dense {
    int in = 0, out = 0;
    std::size_t w_off = 0, b_off = 0;
};

struct ChannelAttention {
    Dense squeeze;
    Dense excite;
};

struct SpatialAttention {
    Conv2d conv; // 2 -> 1 channels (mean, max)
};

// Activations recorded by a forward pass, one field per stage.
struct Tape {
    const void* owner = nullptr;
    const NetworkParams* params = nullptr;
    std::uint64_t version = 0;
    std::size_t batch = 0;

    std::vector<std::vector<Tensor>> branch_in;   // per branch, per conv: layer input
    std::vector<Tensor> branch_out;               // post-ReLU output of each branch
    std::vector<Tensor> fusion_in;
    Tensor fused;                                 // post-ReLU fusion output
    Tensor ca_desc, ca_hidden, ca_gate, ca_out;
    Tensor sa_maps, sa_gate;
    std::vector<int> sa_argmax;
    Tensor att_out;
    Tensor joined;                                // pooled features (+ action)
    std::vector<Tensor> shared_acts;              // post-ReLU outputs
    std::vector<std::vector<Tensor>> head_acts;   // per head: post-ReLU hidden outputs
    Tensor out;
};

struct Gradients {
    std::vector<double> params;
    Tensor input;  // d/d state (empty unless requested)
    Tensor action; // d/d action input (critic only)
};

struct BackwardOptions {
    bool param_grads = true;
    bool input_grad = false;
    // Stop once the gradient reaches the action input; skips the conv trunk.
    bool action_only = false;
};

class Network {
public:
    Network() = default;
    explicit Network(NetSpec spec);

    const NetSpec& spec() const { return spec_; }
    std::size_t param_count() const { return layout_.values.size(); }
    const NetworkParams& layout() const { return layout_; }

    // Per-sample output shapes of each stage, for shape checking big presets.
    std::vector<std::string> describe() const;

    NetworkParams init_params(Rng& rng) const;

    // state: [B, branches, H, W]; action: [B, action_inputs] or nullptr.
    Tensor forward(const NetworkParams& params, const Tensor& state, const Tensor* action, Tape* tape) const;
    Gradients backward(const NetworkParams& params, const Tape& tape, const Tensor& dout,
                       const BackwardOptions& opts = {}) const;

private:
    void check_params(const NetworkParams& params) const;

    NetSpec spec_;
    NetworkParams layout_;
    std::vector<std::vector<Conv2d>> branch_convs_;
    std::vector<Conv2d> fusion_convs_;
    ChannelAttention channel_att_;
    SpatialAttention spatial_att_;
    std::vector<Dense> shared_;
    std::vector<std::vector<Dense>> heads_;
    int fused_channels_ = 0;
    int feat_h_ = 0, feat_w_ = 0;
};

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    std::uint64_t step = 0;
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    AdamState() = default;
    AdamState(std::size_t n, double learning_rate) : m(n, 0.0), v(n, 0.0), lr(learning_rate) {}
};

void adam_step(NetworkParams& params, std::span<const double> grads, AdamState& state);

// target <- tau * online + (1 - tau) * target
void soft_update(NetworkParams& target, const NetworkParams& online, double tau);

// Central differences over every parameter (and the action input, if any) of
// the scalar loss sum(out * weights); returns the max relative error against
// the analytic gradients. Relative error uses max(|a|, |n|, 1e-6) as scale.
double gradient_check(const Network& net, const NetworkParams& params, const Tensor& state, const Tensor* action,
                      double eps, Rng& rng);

// ---- layer primitives (exposed for unit tests) ----
void conv2d_forward(const Conv2d& c, std::span<const double> params, const Tensor& x, Tensor& y);
void conv2d_backward(const Conv2d& c, std::span<const double> params, const Tensor& x, const Tensor& dy,
                     std::span<double> grads, Tensor* dx);
void dense_forward(const Dense& d, std::span<const double> params, const Tensor& x, Tensor& y);
void dense_backward(const Dense& d, std::span<const double> params, const Tensor& x, const Tensor& dy,
                    std::span<double> grads, Tensor* dx);

// ---- checkpoints ----
struct Checkpoint {
    std::map<std::string, std::string> meta;
    std::map<std::string, NetworkParams> nets;
};

std::string checkpoint_to_bytes(const Checkpoint& ckpt);
Checkpoint checkpoint_from_bytes(const std::string& bytes);
void write_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::string& path);

} // namespace uavdt::nn

#pragma once

#include "uavdt/config.hpp"
#include "uavdt/mdp.hpp"
#include "uavdt/neural.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace uavdt {

using ActionVec = std::array<double, 3>;

// States are kept as float to fit large buffers in memory.
struct Transition {
    std::vector<float> s;
    ActionVec a{};
    double r = 0.0;
    std::vector<float> s_next;
    bool done = false;
};

class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity);

    void push(Transition t);
    std::size_t size() const { return items_.size(); }
    std::size_t capacity() const { return capacity_; }
    // Index 0 is the oldest stored transition.
    const Transition& at(std::size_t i) const;
    // Uniform with replacement.
    std::vector<const Transition*> sample(std::size_t n, Rng& rng) const;

private:
    std::size_t capacity_;
    std::size_t head_ = 0;
    std::vector<Transition> items_;
};

std::vector<float> to_float(const StateTensor& s);

// Gathers B states into a [B, 2, rows, cols] tensor.
nn::Tensor stack_states(const std::vector<const std::vector<float>*>& states, int rows, int cols);
nn::Tensor stack_state(const StateTensor& s);

// clip(actor(s) + N(0, sigma^2), -1, 1); sigma = 0 for deterministic use.
ActionVec act(const nn::Network& actor, const nn::NetworkParams& phi, const StateTensor& s, double sigma, Rng& rng);

// clip(a + clip(eps, -c, c), -1, 1) per dimension, with eps ~ N(0, sigma^2).
ActionVec smooth_action(const ActionVec& a, double sigma, double clip_c, Rng& rng);

double target_value(double r, bool done, double gamma, double q1, double q2);

struct Batch {
    nn::Tensor s;      // [B, 2, H, W]
    nn::Tensor a;      // [B, 3]
    nn::Tensor s_next; // [B, 2, H, W]
    std::vector<double> r;
    std::vector<char> done;
    std::size_t size() const { return r.size(); }
};

Batch make_batch(const std::vector<const Transition*>& items, int rows, int cols);

// One Adam step on mean (Q(s,a) - y)^2. Returns the loss before the step.
double critic_update(const nn::Network& critic, nn::NetworkParams& theta, nn::AdamState& opt, const Batch& batch,
                     const std::vector<double>& y, std::size_t batch_size);

// One ascent step on mean Q1(s, actor(s)). Returns the objective before the step.
double actor_update(const nn::Network& actor, nn::NetworkParams& phi, nn::AdamState& opt, const nn::Network& critic,
                    const nn::NetworkParams& theta1, const Batch& batch, std::size_t batch_size);

struct AgentNets {
    nn::Network actor;
    nn::Network critic;
};

AgentNets make_nets(const std::string& preset, int rows, int cols);

struct UpdateStats {
    double critic_loss = 0.0;
    double actor_objective = 0.0;
    bool actor_updated = false;
};

// TD3 (two critics, smoothing, delayed actor) or DDPG (one critic, plain
// target action, actor every update).
class Agent {
public:
    Agent(const SimConfig& cfg, std::uint64_t seed);

    Algorithm algorithm() const { return algo_; }
    const Td3Hyper& hyper() const { return hyper_; }

    ActionVec explore(const StateTensor& s);
    ActionVec exploit(const StateTensor& s);
    ActionVec random_action();

    void remember(Transition t) { buffer_.push(std::move(t)); }
    const ReplayBuffer& buffer() const { return buffer_; }

    // One slot of learning; no-op while the buffer holds fewer than M_b items.
    std::optional<UpdateStats> update();

    std::uint64_t critic_updates() const { return critic_updates_; }
    std::uint64_t actor_updates() const { return actor_updates_; }
    std::uint64_t target_updates() const { return target_updates_; }
    std::size_t critic_count() const { return theta_.size(); }

    const nn::Network& actor_net() const { return nets_.actor; }
    const nn::Network& critic_net() const { return nets_.critic; }
    const nn::NetworkParams& actor_params() const { return phi_; }
    const nn::NetworkParams& critic_params(std::size_t i) const { return theta_.at(i); }
    const nn::NetworkParams& target_actor_params() const { return phi_target_; }
    const nn::NetworkParams& target_critic_params(std::size_t i) const { return theta_target_.at(i); }

    nn::Checkpoint checkpoint() const;
    // Restores weights (and optimiser state when present).
    void restore(const nn::Checkpoint& ckpt);

    std::string rng_state() const;
    void set_rng_state(const std::string& text);

private:
    Algorithm algo_;
    Td3Hyper hyper_;
    std::string preset_;
    int rows_, cols_;
    AgentNets nets_;
    nn::NetworkParams phi_, phi_target_;
    std::vector<nn::NetworkParams> theta_, theta_target_;
    nn::AdamState actor_opt_;
    std::vector<nn::AdamState> critic_opt_;
    ReplayBuffer buffer_;
    Rng rng_;
    std::uint64_t critic_updates_ = 0;
    std::uint64_t actor_updates_ = 0;
    std::uint64_t target_updates_ = 0;
};

struct EpisodeSummary {
    int episode = 0;
    double total_reward = 0.0;
    int served = 0;
    int users = 0;
    int vetoes = 0;
    int collisions = 0;
    std::optional<int> t_f;
    int slots = 0;
    double critic_loss = 0.0;
};

// Seed used to reset the simulation for episode e of a run.
std::uint64_t episode_seed(std::uint64_t master, int episode);

// Runs `episodes` training episodes starting at index `first`. The callback
// sees every finished episode. `total_steps` carries the warmup counter
// across calls.
void train(Simulation& sim, Agent& agent, int first, int episodes, std::uint64_t master_seed, long long& total_steps,
           const std::function<void(const EpisodeSummary&)>& on_episode);

} // namespace uavdt

#include "uavdt/agent.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace uavdt {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity)
{
    if (capacity == 0)
        throw ContractError("replay buffer capacity must be positive");
}

void ReplayBuffer::push(Transition t)
{
    for (double v : t.a)
        if (!(v >= -1.0 && v <= 1.0))
            throw ContractError("transition action outside [-1, 1]");
    if (!std::isfinite(t.r))
        throw ContractError("transition reward is not finite");
    if (items_.size() < capacity_) {
        items_.push_back(std::move(t));
        return;
    }
    items_[head_] = std::move(t);
    head_ = (head_ + 1) % capacity_;
}

const Transition& ReplayBuffer::at(std::size_t i) const
{
    if (i >= items_.size())
        throw ContractError("replay buffer index out of range");
    return items_[(head_ + i) % items_.size()];
}

std::vector<const Transition*> ReplayBuffer::sample(std::size_t n, Rng& rng) const
{
    if (items_.empty())
        throw ContractError("cannot sample from an empty replay buffer");
    std::uniform_int_distribution<std::size_t> pick(0, items_.size() - 1);
    std::vector<const Transition*> out(n);
    for (auto& p : out)
        p = &items_[pick(rng)];
    return out;
}

std::vector<float> to_float(const StateTensor& s)
{
    return {s.data.begin(), s.data.end()};
}

nn::Tensor stack_states(const std::vector<const std::vector<float>*>& states, int rows, int cols)
{
    const auto per = static_cast<std::size_t>(2 * rows * cols);
    nn::Tensor t({states.size(), 2, static_cast<std::size_t>(rows), static_cast<std::size_t>(cols)});
    for (std::size_t i = 0; i < states.size(); ++i) {
        if (states[i]->size() != per)
            throw ContractError("stored state does not match the grid size");
        std::copy(states[i]->begin(), states[i]->end(), t.data.begin() + static_cast<std::ptrdiff_t>(i * per));
    }
    return t;
}

nn::Tensor stack_state(const StateTensor& s)
{
    nn::Tensor t({1, 2, static_cast<std::size_t>(s.rows), static_cast<std::size_t>(s.cols)});
    t.data = s.data;
    return t;
}

ActionVec act(const nn::Network& actor, const nn::NetworkParams& phi, const StateTensor& s, double sigma, Rng& rng)
{
    const nn::Tensor out = actor.forward(phi, stack_state(s), nullptr, nullptr);
    ActionVec a{};
    std::normal_distribution<double> noise(0.0, sigma > 0.0 ? sigma : 1.0);
    for (std::size_t i = 0; i < 3; ++i) {
        const double eps = sigma > 0.0 ? noise(rng) : 0.0;
        a[i] = std::clamp(out.data[i] + eps, -1.0, 1.0);
    }
    return a;
}

ActionVec smooth_action(const ActionVec& a, double sigma, double clip_c, Rng& rng)
{
    ActionVec out{};
    std::normal_distribution<double> noise(0.0, sigma > 0.0 ? sigma : 1.0);
    for (std::size_t i = 0; i < 3; ++i) {
        const double eps = sigma > 0.0 ? std::clamp(noise(rng), -clip_c, clip_c) : 0.0;
        out[i] = std::clamp(a[i] + eps, -1.0, 1.0);
    }
    return out;
}

double target_value(double r, bool done, double gamma, double q1, double q2)
{
    return done ? r : r + gamma * std::min(q1, q2);
}

Batch make_batch(const std::vector<const Transition*>& items, int rows, int cols)
{
    Batch b;
    std::vector<const std::vector<float>*> s, sn;
    s.reserve(items.size());
    sn.reserve(items.size());
    b.a = nn::Tensor({items.size(), 3});
    for (std::size_t i = 0; i < items.size(); ++i) {
        s.push_back(&items[i]->s);
        sn.push_back(&items[i]->s_next);
        for (std::size_t k = 0; k < 3; ++k)
            b.a.data[i * 3 + k] = items[i]->a[k];
        b.r.push_back(items[i]->r);
        b.done.push_back(items[i]->done ? 1 : 0);
    }
    b.s = stack_states(s, rows, cols);
    b.s_next = stack_states(sn, rows, cols);
    return b;
}

namespace {

void require_batch(const Batch& batch, std::size_t batch_size)
{
    if (batch.size() < batch_size || batch.size() == 0)
        throw ContractError("update needs a batch of " + std::to_string(batch_size) + " transitions, got "
                            + std::to_string(batch.size()));
}

} // namespace

double critic_update(const nn::Network& critic, nn::NetworkParams& theta, nn::AdamState& opt, const Batch& batch,
                     const std::vector<double>& y, std::size_t batch_size)
{
    require_batch(batch, batch_size);
    const std::size_t n = batch.size();
    nn::Tape tape;
    const nn::Tensor q = critic.forward(theta, batch.s, &batch.a, &tape);
    nn::Tensor dq({n, 1});
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = q.data[i] - y[i];
        loss += e * e;
        dq.data[i] = 2.0 * e / static_cast<double>(n);
    }
    const auto g = critic.backward(theta, tape, dq);
    nn::adam_step(theta, g.params, opt);
    return loss / static_cast<double>(n);
}

double actor_update(const nn::Network& actor, nn::NetworkParams& phi, nn::AdamState& opt, const nn::Network& critic,
                    const nn::NetworkParams& theta1, const Batch& batch, std::size_t batch_size)
{
    require_batch(batch, batch_size);
    const std::size_t n = batch.size();
    nn::Tape actor_tape, critic_tape;
    const nn::Tensor a = actor.forward(phi, batch.s, nullptr, &actor_tape);
    const nn::Tensor q = critic.forward(theta1, batch.s, &a, &critic_tape);
    double objective = 0.0;
    for (double v : q.data)
        objective += v;
    objective /= static_cast<double>(n);

    // Descend on -J: seed the critic with -1/B per sample, pull dQ/da back
    // through the actor.
    nn::Tensor seed({n, 1}, -1.0 / static_cast<double>(n));
    const auto gq = critic.backward(theta1, critic_tape, seed, {false, false, true});
    const auto ga = actor.backward(phi, actor_tape, gq.action);
    nn::adam_step(phi, ga.params, opt);
    return objective;
}

AgentNets make_nets(const std::string& preset, int rows, int cols)
{
    if (rows != cols)
        throw ConfigError("network presets need a square grid");
    if (preset == "paper")
        return {nn::Network(nn::NetSpec::paper_actor(rows)), nn::Network(nn::NetSpec::paper_critic(rows))};
    if (preset == "desk")
        return {nn::Network(nn::NetSpec::desk_actor(rows)), nn::Network(nn::NetSpec::desk_critic(rows))};
    throw ConfigError("unknown network preset '" + preset + "'");
}

Agent::Agent(const SimConfig& cfg, std::uint64_t seed)
    : algo_(cfg.mode.algorithm), hyper_(cfg.td3), preset_(cfg.net_preset), rows_(cfg.grid.rows),
      cols_(cfg.grid.cols), nets_(make_nets(cfg.net_preset, cfg.grid.rows, cfg.grid.cols)),
      buffer_(static_cast<std::size_t>(cfg.td3.buffer_capacity)), rng_(seed)
{
    phi_ = nets_.actor.init_params(rng_);
    phi_target_ = phi_;
    const std::size_t critics = algo_ == Algorithm::Td3 ? 2 : 1;
    for (std::size_t i = 0; i < critics; ++i) {
        theta_.push_back(nets_.critic.init_params(rng_));
        critic_opt_.emplace_back(theta_.back().values.size(), hyper_.critic_lr);
    }
    theta_target_ = theta_;
    actor_opt_ = nn::AdamState(phi_.values.size(), hyper_.actor_lr);
}

ActionVec Agent::explore(const StateTensor& s) { return act(nets_.actor, phi_, s, hyper_.explore_sigma, rng_); }

ActionVec Agent::exploit(const StateTensor& s) { return act(nets_.actor, phi_, s, 0.0, rng_); }

ActionVec Agent::random_action()
{
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    return {u(rng_), u(rng_), u(rng_)};
}

std::optional<UpdateStats> Agent::update()
{
    const auto m = static_cast<std::size_t>(hyper_.batch_size);
    if (buffer_.size() < m)
        return std::nullopt;
    const Batch batch = make_batch(buffer_.sample(m, rng_), rows_, cols_);

    nn::Tensor a_next = nets_.actor.forward(phi_target_, batch.s_next, nullptr, nullptr);
    if (algo_ == Algorithm::Td3) {
        for (std::size_t i = 0; i < m; ++i) {
            ActionVec a{a_next.data[i * 3], a_next.data[i * 3 + 1], a_next.data[i * 3 + 2]};
            a = smooth_action(a, hyper_.target_sigma, hyper_.target_clip, rng_);
            std::copy(a.begin(), a.end(), a_next.data.begin() + static_cast<std::ptrdiff_t>(i * 3));
        }
    } else {
        for (auto& v : a_next.data)
            v = std::clamp(v, -1.0, 1.0);
    }
    std::vector<nn::Tensor> q_next;
    for (const auto& th : theta_target_)
        q_next.push_back(nets_.critic.forward(th, batch.s_next, &a_next, nullptr));
    std::vector<double> y(m);
    for (std::size_t i = 0; i < m; ++i) {
        const double q1 = q_next[0].data[i];
        const double q2 = q_next.size() > 1 ? q_next[1].data[i] : q1;
        y[i] = target_value(batch.r[i], batch.done[i] != 0, hyper_.gamma, q1, q2);
    }

    UpdateStats stats;
    for (std::size_t i = 0; i < theta_.size(); ++i)
        stats.critic_loss += critic_update(nets_.critic, theta_[i], critic_opt_[i], batch, y, m);
    stats.critic_loss /= static_cast<double>(theta_.size());
    ++critic_updates_;

    const auto delay = static_cast<std::uint64_t>(algo_ == Algorithm::Td3 ? hyper_.policy_delay : 1);
    const bool delayed_tick = critic_updates_ % delay == 0;
    const bool actor_tick = hyper_.couple_target_updates ? delayed_tick : true;
    if (actor_tick) {
        stats.actor_objective = actor_update(nets_.actor, phi_, actor_opt_, nets_.critic, theta_[0], batch, m);
        stats.actor_updated = true;
        ++actor_updates_;
    }
    if (delayed_tick) {
        nn::soft_update(phi_target_, phi_, hyper_.tau);
        for (std::size_t i = 0; i < theta_.size(); ++i)
            nn::soft_update(theta_target_[i], theta_[i], hyper_.tau);
        ++target_updates_;
    }
    return stats;
}

namespace {

nn::NetworkParams vector_as_params(const nn::NetworkParams& layout, const std::vector<double>& values)
{
    nn::NetworkParams p;
    p.blocks = layout.blocks;
    p.values = values;
    return p;
}

} // namespace

nn::Checkpoint Agent::checkpoint() const
{
    nn::Checkpoint c;
    c.meta["algorithm"] = algo_ == Algorithm::Td3 ? "td3" : "ddpg";
    c.meta["net_preset"] = preset_;
    c.meta["grid"] = std::to_string(rows_) + "x" + std::to_string(cols_);
    c.meta["critic_updates"] = std::to_string(critic_updates_);
    c.meta["actor_updates"] = std::to_string(actor_updates_);
    c.meta["target_updates"] = std::to_string(target_updates_);
    c.meta["actor_adam_step"] = std::to_string(actor_opt_.step);
    c.nets["actor"] = phi_;
    c.nets["actor_target"] = phi_target_;
    c.nets["adam.actor.m"] = vector_as_params(phi_, actor_opt_.m);
    c.nets["adam.actor.v"] = vector_as_params(phi_, actor_opt_.v);
    for (std::size_t i = 0; i < theta_.size(); ++i) {
        const std::string k = std::to_string(i + 1);
        c.nets["critic" + k] = theta_[i];
        c.nets["critic" + k + "_target"] = theta_target_[i];
        c.nets["adam.critic" + k + ".m"] = vector_as_params(theta_[i], critic_opt_[i].m);
        c.nets["adam.critic" + k + ".v"] = vector_as_params(theta_[i], critic_opt_[i].v);
        c.meta["critic" + k + "_adam_step"] = std::to_string(critic_opt_[i].step);
    }
    return c;
}

void Agent::restore(const nn::Checkpoint& ckpt)
{
    auto meta = [&](const std::string& k) -> std::string {
        auto it = ckpt.meta.find(k);
        return it == ckpt.meta.end() ? "" : it->second;
    };
    const std::string algo = algo_ == Algorithm::Td3 ? "td3" : "ddpg";
    if (meta("algorithm") != algo)
        throw FormatError("checkpoint algorithm '" + meta("algorithm") + "' does not match '" + algo + "'");
    if (meta("net_preset") != preset_)
        throw FormatError("checkpoint network preset '" + meta("net_preset") + "' does not match '" + preset_ + "'");
    auto net = [&](const std::string& k, const nn::NetworkParams& like) {
        auto it = ckpt.nets.find(k);
        if (it == ckpt.nets.end())
            throw FormatError("checkpoint is missing '" + k + "'");
        if (!it->second.same_layout(like))
            throw FormatError("checkpoint entry '" + k + "' does not match the network layout");
        nn::NetworkParams p = it->second;
        p.version = like.version + 1;
        return p;
    };
    auto moments = [&](const std::string& k, std::vector<double>& dst) {
        if (auto it = ckpt.nets.find(k); it != ckpt.nets.end() && it->second.values.size() == dst.size())
            dst = it->second.values;
    };
    auto to_u64 = [&](const std::string& k) -> std::uint64_t {
        const auto v = meta(k);
        return v.empty() ? 0 : std::stoull(v);
    };
    phi_ = net("actor", phi_);
    phi_target_ = net("actor_target", phi_target_);
    moments("adam.actor.m", actor_opt_.m);
    moments("adam.actor.v", actor_opt_.v);
    actor_opt_.step = to_u64("actor_adam_step");
    for (std::size_t i = 0; i < theta_.size(); ++i) {
        const std::string k = std::to_string(i + 1);
        theta_[i] = net("critic" + k, theta_[i]);
        theta_target_[i] = net("critic" + k + "_target", theta_target_[i]);
        moments("adam.critic" + k + ".m", critic_opt_[i].m);
        moments("adam.critic" + k + ".v", critic_opt_[i].v);
        critic_opt_[i].step = to_u64("critic" + k + "_adam_step");
    }
    critic_updates_ = to_u64("critic_updates");
    actor_updates_ = to_u64("actor_updates");
    target_updates_ = to_u64("target_updates");
}

std::string Agent::rng_state() const
{
    std::ostringstream ss;
    ss << rng_;
    return ss.str();
}

void Agent::set_rng_state(const std::string& text)
{
    std::istringstream ss(text);
    Rng r;
    ss >> r;
    if (ss.fail())
        throw FormatError("malformed RNG state");
    rng_ = r;
}

std::uint64_t episode_seed(std::uint64_t master, int episode)
{
    return derive_seed(master, 0x1000u + static_cast<std::uint64_t>(episode));
}

void train(Simulation& sim, Agent& agent, int first, int episodes, std::uint64_t master_seed, long long& total_steps,
           const std::function<void(const EpisodeSummary&)>& on_episode)
{
    const int warmup = agent.hyper().warmup_steps;
    const double v_max = sim.config().kinematics.v_max;
    for (int e = first; e < first + episodes; ++e) {
        StateTensor s = sim.reset(episode_seed(master_seed, e), RunMode::Train, sim.config().mode.dt_enabled);
        EpisodeSummary sum;
        sum.episode = e;
        int updates = 0;
        while (!sim.done()) {
            const ActionVec a = total_steps < warmup ? agent.random_action() : agent.explore(s);
            StepResult res = sim.step(to_physical(a, v_max));
            agent.remember({to_float(s), a, res.reward, to_float(res.state), res.terminal});
            // Learning starts once the random warmup has filled the buffer.
            if (auto st = total_steps >= warmup ? agent.update() : std::nullopt) {
                sum.critic_loss += st->critic_loss;
                ++updates;
            }
            ++total_steps;
            s = std::move(res.state);
        }
        const auto& log = sim.log();
        sum.total_reward = log.total_reward;
        sum.served = sim.served_count();
        sum.users = static_cast<int>(sim.map().users.size());
        sum.vetoes = log.vetoes;
        sum.collisions = log.collisions;
        sum.t_f = log.t_f;
        sum.slots = sim.slot();
        if (updates > 0)
            sum.critic_loss /= updates;
        if (on_episode)
            on_episode(sum);
    }
}

} // namespace uavdt

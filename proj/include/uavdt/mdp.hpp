#pragma once

#include "uavdt/channel.hpp"
#include "uavdt/config.hpp"
#include "uavdt/scheduler.hpp"
#include "uavdt/twin.hpp"
#include "uavdt/world.hpp"

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace uavdt {

// Two m x n channels, stored contiguously as [s1 | s2] so the block can be
// fed straight into a network.
struct StateTensor {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    StateTensor() = default;
    StateTensor(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(2 * r * c), 0.0) {}

    std::span<double> s1() { return {data.data(), data.size() / 2}; }
    std::span<double> s2() { return {data.data() + data.size() / 2, data.size() / 2}; }
    std::span<const double> s1() const { return {data.data(), data.size() / 2}; }
    std::span<const double> s2() const { return {data.data() + data.size() / 2, data.size() / 2}; }
    friend bool operator==(const StateTensor&, const StateTensor&) = default;
};

// [-1, 1]^3 <-> [0, v_max] x [0, pi] x [0, 2 pi]
FlightAction to_physical(const std::array<double, 3>& a_norm, double v_max);
std::array<double, 3> to_normalized(const FlightAction& a, double v_max);
FlightAction clip_action(const FlightAction& a, double v_max);

// Attractive potential field. μ_k = K, K-1, ... follows schedule order;
// served users contribute nothing. With normalize, values are divided by
// mu_top * J_dp and the UAV disc is written as z / max_alt.
std::vector<double> build_s1(std::span<const GroundUser> users, const Schedule& schedule, Vec3 uav,
                             const GridGeometry& grid, const RewardWeights& weights, double beta_com, double max_alt,
                             bool normalize = true);

// Occupied cells carry the sensed height, the sensing disc carries z, all
// divided by max_alt.
std::vector<double> build_s2(const VirtualEnv& ve, Vec3 uav, double beta_sen, double max_alt);

std::optional<int> select_service_target(const Schedule& schedule, std::span<const GroundUser> users, Vec3 uav,
                                         double d_com);

// 2 / (1 + e^-x) - 1, kept strictly inside (-1, 1) under rounding.
double shape_reward(double x);

struct RewardContext {
    bool vetoed = false;
    double v = 0.0;
    double v_max = 1.0;
    int t = 0;
    bool serving = false;
    double rate_bps = 0.0;
    // Distance change toward the current target; positive when approaching.
    double delta_d = 0.0;
    int delta_cells = 0;
    bool final_slot = false;
    int t_f = 0;
};

struct RewardBreakdown {
    std::array<double, 7> r{}; // r1..r7
    double shaped = 0.0;
    double total = 0.0;
};

RewardBreakdown compute_reward(const RewardContext& ctx, const RewardWeights& w);

enum class RunMode { Train, Deploy };

struct SlotRecord {
    int slot = 0;
    Vec3 position;
    FlightAction action;
    double reward = 0.0;
    int served_user = -1;
    double delivered_bits = 0.0;
    bool vetoed = false;
    VetoReason veto_reason = VetoReason::None;
    bool collided = false;
};

struct EpisodeLog {
    Vec3 start;
    std::vector<SlotRecord> slots;
    std::optional<int> t_f;
    std::vector<std::optional<int>> t_k;
    int vetoes = 0;
    int collisions = 0;
    int covered_cells = 0;
    double total_reward = 0.0;
};

struct StepResult {
    StateTensor state;
    double reward = 0.0;
    bool done = false;
    // True only when the mission completed (not on the slot limit).
    bool terminal = false;
    RewardBreakdown parts;
    bool vetoed = false;
    bool collided = false;
    std::optional<int> served_user;
};

class Simulation {
public:
    explicit Simulation(SimConfig cfg);

    // Deploy mode uses the fixed map when one is set, otherwise one generated
    // from the seed; train mode always generates a fresh layout.
    StateTensor reset(std::uint64_t seed, RunMode mode, bool dt_enabled);
    StepResult step(const FlightAction& action);

    void set_fixed_map(EnvironmentMap map) { fixed_map_ = std::move(map); }
    void clear_fixed_map() { fixed_map_.reset(); }

    StateTensor observe() const;

    const SimConfig& config() const { return cfg_; }
    const EnvironmentMap& map() const { return map_; }
    const VirtualEnv& twin() const { return ve_; }
    const Schedule& schedule() const { return schedule_; }
    const AnnealResult& anneal_result() const { return anneal_; }
    const EpisodeLog& log() const { return log_; }
    Vec3 position() const { return pos_; }
    int slot() const { return slot_; }
    bool done() const { return done_; }
    bool dt_enabled() const { return dt_; }
    FlightBounds bounds() const;
    int served_count() const;

private:
    void mark_visited(Vec3 p, int* newly);

    SimConfig cfg_;
    ChannelParams channel_;
    std::optional<EnvironmentMap> fixed_map_;
    EnvironmentMap map_;
    VirtualEnv ve_;
    VirtualEnv current_view_;
    Schedule schedule_;
    AnnealResult anneal_;
    std::vector<char> visited_;
    EpisodeLog log_;
    Rng channel_rng_;
    Vec3 pos_;
    int slot_ = 0;
    bool done_ = true;
    bool dt_ = true;
};

// Trajectory export: scene, schedule, path and completion data.
std::string episode_to_json(const Simulation& sim, double slot_seconds);

} // namespace uavdt

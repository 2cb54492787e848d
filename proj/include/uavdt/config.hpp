#pragma once

#include "uavdt/channel.hpp"
#include "uavdt/common.hpp"
#include "uavdt/scheduler.hpp"
#include "uavdt/world.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace uavdt {

struct TimingConfig {
    double delta1 = 0.5;
    double delta2 = 0.5;
    double delta3 = 0.2;
    int max_slots = 500;

    double slot() const { return delta1 + delta2 + delta3; }
};

struct KinematicsConfig {
    double v_max = 40.0;
    double min_alt = 50.0;
    double max_alt = 140.0;
    double beta_sen = kPi / 6.0;
    double beta_com = kPi / 4.0;
    Vec3 start{10.0, 10.0, 100.0};
    double start_clearance = 60.0;
};

struct ChannelConfig {
    double carrier_hz = 2e9;
    double bandwidth_hz = 10e6;
    double bs_power_dbm = 40.0;
    double uav_power_dbm = 10.0;
    double noise_dbm = -75.0;
    double gamma_los_db = 0.1;
    double gamma_nlos_db = 21.0;
    double rician_k_db = 15.0;
    double light_speed = 3e8;
    bool freeze_fading = false;

    ChannelParams params() const;
};

struct RewardWeights {
    double w1 = 100.0;
    double w2 = 3.0;
    double w3 = 0.01;
    double w4 = 2.0;
    double b4 = 1.0;
    double w51 = 3.0;
    double w52 = 1.0;
    double w6 = 0.5;
    double w7 = 500.0;
    double j_vr = 0.6;
    double j_dr = 20.0;
    double j_dp = 50.0;
    // Attractive strength of the top-priority user; 0 means "use K".
    double mu_top = 0.0;
};

enum class Algorithm { Td3, Ddpg };

struct Td3Hyper {
    double gamma = 0.99;
    double tau = 0.005;
    int policy_delay = 2;
    int batch_size = 256;
    double explore_sigma = 0.1;
    double target_sigma = 0.2;
    double target_clip = 0.5;
    double actor_lr = 1e-4;
    double critic_lr = 1e-4;
    int episodes = 1000;
    int buffer_capacity = 300000;
    // Uniform-random actions for the first N slots of a run.
    int warmup_steps = 0;
    // When false, the actor updates every slot while targets keep the delay.
    bool couple_target_updates = true;
};

struct ModeConfig {
    Algorithm algorithm = Algorithm::Td3;
    bool dt_enabled = true;
};

struct SimConfig {
    std::string preset = "paper";
    WorldConfig world;
    GridGeometry grid{100, 100, 1000.0};
    TimingConfig timing;
    KinematicsConfig kinematics;
    ChannelConfig channel;
    RewardWeights reward;
    AnnealParams anneal;
    std::string net_preset = "paper";
    Td3Hyper td3;
    ModeConfig mode;
    std::uint64_t seed = 1;
    int eval_episodes = 10;
    // Write a VE snapshot every N slots of recorded episodes (0 = never).
    int snapshot_stride = 0;

    // Non-fatal findings from validation (e.g. sensing radius vs step length).
    std::vector<std::string> warnings;
};

SimConfig paper_config();
SimConfig desk_config();
SimConfig preset_config(const std::string& name);

// Parses the TOML-style text on top of the named preset (or the preset named
// in the file's [run] section). Throws ConfigError with line context.
SimConfig parse_config(const std::string& text, const std::string& preset = "");
SimConfig load_config(const std::string& path, const std::string& preset = "");

// Throws ConfigError naming the offending field; fills cfg.warnings.
void validate_config(SimConfig& cfg);

// Canonical, fully resolved text form; parse_config(dump) reproduces cfg.
std::string dump_config(const SimConfig& cfg);
std::uint64_t config_hash(const SimConfig& cfg);
std::string hex64(std::uint64_t v);

std::string variant_name(const SimConfig& cfg);
// Applies a variant tag: td3-dt, td3-nodt, ddpg-dt, ddpg-nodt.
void apply_variant(SimConfig& cfg, const std::string& variant);

} // namespace uavdt

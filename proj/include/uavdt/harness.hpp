#pragma once

#include "uavdt/agent.hpp"
#include "uavdt/config.hpp"
#include "uavdt/mdp.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace uavdt {

// Formats a real for CSV output; fixed so reruns are byte-identical.
std::string csv_num(double v);
// "# <kind> variant=<v> config_hash=<h> seed=<s>"
std::string csv_banner(const std::string& kind, const SimConfig& cfg);

void ensure_dir(const std::string& path);
void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

struct TrainResult {
    std::string checkpoint_path;
    std::string csv_path;
    int episodes = 0;
    long long steps = 0;
    int vetoes = 0;
    int collisions = 0;
    std::uint64_t critic_updates = 0;
    std::uint64_t actor_updates = 0;
    double wall_seconds = 0.0;
};

// Writes checkpoint.bin, rng_state.txt, train.csv and train_timing.csv into
// out_dir. With resume, continues from the files already there (the replay
// buffer restarts empty).
TrainResult run_train(const SimConfig& cfg, const std::string& out_dir, bool resume = false,
                      const std::function<void(const EpisodeSummary&)>& progress = {});

using Policy = std::function<ActionVec(const StateTensor&)>;

// Deterministic actor from a checkpoint; throws FormatError when the
// checkpoint does not fit the config.
Policy checkpoint_policy(const SimConfig& cfg, const std::string& checkpoint_path);
// Uniform actions in [-1, 1]^3 from a seeded stream.
Policy random_policy(std::uint64_t seed);
// Freshly initialised actor, never trained.
Policy untrained_policy(const SimConfig& cfg, std::uint64_t seed);

struct EvalEpisode {
    int index = 0;
    std::uint64_t seed = 0;
    int served = 0;
    int users = 0;
    std::optional<int> t_f;
    // t_f * delta_s, or T * delta_s when the mission did not complete.
    double mission_time = 0.0;
    double sum_tk_time = 0.0;
    int vetoes = 0;
    int collisions = 0;
    double total_reward = 0.0;
    double obstacle_ratio = 0.0;

    bool all_served() const { return served == users; }
};

struct EvalSummary {
    std::string variant;
    std::vector<EvalEpisode> episodes;
    double mean_mission_time = 0.0;
    double std_mission_time = 0.0;
    double served_fraction = 0.0;
    int completed = 0;
    double mean_vetoes = 0.0;
    int collisions = 0;
};

std::uint64_t eval_seed(const SimConfig& cfg, int index);

EvalEpisode run_episode(Simulation& sim, const Policy& policy, std::uint64_t seed, int index,
                        const std::string& trajectory_path = "", int snapshot_stride = 0);

// Deterministic rollouts on maps drawn from eval_seed(cfg, i). When out_dir
// is non-empty, writes eval.csv and, with trajectories, one JSON per episode.
EvalSummary run_eval(const SimConfig& cfg, const Policy& policy, int n_episodes, const std::string& out_dir = "",
                     bool trajectories = false);
std::string eval_csv(const SimConfig& cfg, const EvalSummary& s);

enum class SweepAxis { DataVolume, GuCount, ObstacleRatio };
SweepAxis parse_axis(const std::string& name);
const char* to_string(SweepAxis axis);

struct SweepSpec {
    SweepAxis axis = SweepAxis::DataVolume;
    std::vector<double> values;
    int seeds = 10;
    std::vector<std::string> variants{"td3-dt"};
};

struct SweepPoint {
    double value = 0.0;
    std::string variant;
    double mean = 0.0;
    double stddev = 0.0;
};

struct SweepResult {
    std::string csv;
    std::string summary_csv;
    std::string svg;
    std::vector<SweepPoint> points;
    // Per variant: mean mission time never decreases along the axis values.
    std::map<std::string, bool> non_decreasing;
};

SimConfig apply_axis(SimConfig cfg, SweepAxis axis, double value);

// `policies` maps variant -> policy; variants without one fail.
SweepResult run_sweep(const SimConfig& cfg, const SweepSpec& spec, const std::map<std::string, Policy>& policies,
                      const std::string& out_dir = "");

// 2-D top view plus altitude profile of an episode JSON document.
std::string export_trajectory_plot(const std::string& episode_json);

std::string link_budget_csv(const SimConfig& cfg, double d_min, double d_max, double step);

struct ScheduleReport {
    AnnealResult proposed;
    AnnealResult classical;
    std::string csv;
};

ScheduleReport schedule_report(const SimConfig& cfg, const EnvironmentMap& env, std::uint64_t seed);

} // namespace uavdt

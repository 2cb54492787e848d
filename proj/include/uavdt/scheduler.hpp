#pragma once

#include "uavdt/common.hpp"

#include <array>
#include <span>
#include <utility>
#include <vector>

namespace uavdt {

struct Schedule {
    std::vector<int> order;
    friend bool operator==(const Schedule&, const Schedule&) = default;
};

bool is_permutation_of(const Schedule& s, std::size_t k);

enum class NeighborhoodOp { Swap = 0, InsertMove = 1, Reverse = 2 };

struct AnnealParams {
    double initial_temperature = 2000.0;
    double cooling_rate = 0.998;
    int max_iterations = 4000;
    std::array<double, 3> op_bias{3.0, 2.0, 1.0};
    std::array<double, 3> op_sensitivity{1.0, 1.1, 1.2};
};

struct AnnealResult {
    Schedule schedule;
    double length = 0.0;
    // Best-so-far length after each iteration (size max_iterations).
    std::vector<double> best_trace;
};

// Scheduling runs on ground distances: z of the start and users is ignored.
double tour_length(Vec3 start, const Schedule& sched, std::span<const Vec3> users);

std::pair<Schedule, double> greedy_init(Vec3 start, std::span<const Vec3> users);

std::array<double, 3> operator_probabilities(double temperature, const AnnealParams& params);
NeighborhoodOp select_operator(double temperature, const AnnealParams& params, Rng& rng);

Schedule swap_positions(Schedule s, std::size_t i, std::size_t j);
Schedule insert_move(Schedule s, std::size_t from, std::size_t to);
Schedule reverse_range(Schedule s, std::size_t first, std::size_t last);
Schedule apply_operator(const Schedule& s, NeighborhoodOp op, Rng& rng);

AnnealResult anneal(Vec3 start, std::span<const Vec3> users, const AnnealParams& params, Rng& rng);

// Baseline: random initial order, swap moves only, same cooling and budget.
AnnealResult anneal_classical(Vec3 start, std::span<const Vec3> users, const AnnealParams& params, Rng& rng);

} // namespace uavdt

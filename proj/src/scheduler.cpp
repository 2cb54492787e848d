#include "uavdt/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace uavdt {

namespace {

std::size_t pick_index(Rng& rng, std::size_t n)
{
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

// Two distinct positions, returned ordered.
std::pair<std::size_t, std::size_t> pick_pair(Rng& rng, std::size_t n)
{
    const std::size_t a = pick_index(rng, n);
    std::size_t b = pick_index(rng, n - 1);
    if (b >= a)
        ++b;
    return {std::min(a, b), std::max(a, b)};
}

bool metropolis_accept(double current, double candidate, double temperature, Rng& rng)
{
    if (candidate < current)
        return true;
    const double r = uniform01(rng);
    return r < std::exp((current - candidate) / temperature);
}

AnnealResult run_anneal(Vec3 start, std::span<const Vec3> users, Schedule initial, const AnnealParams& params,
                        Rng& rng, bool adaptive)
{
    if (!(params.initial_temperature > 0.0) || !(params.cooling_rate > 0.0 && params.cooling_rate < 1.0)
        || params.max_iterations < 1)
        throw DomainError("anneal parameters require T0 > 0, 0 < Cr < 1, max_iterations >= 1");

    AnnealResult res;
    Schedule current = std::move(initial);
    double current_len = tour_length(start, current, users);
    res.schedule = current;
    res.length = current_len;
    res.best_trace.reserve(static_cast<std::size_t>(params.max_iterations));

    double temperature = params.initial_temperature;
    for (int it = 0; it < params.max_iterations; ++it) {
        const NeighborhoodOp op = adaptive ? select_operator(temperature, params, rng) : NeighborhoodOp::Swap;
        Schedule candidate = apply_operator(current, op, rng);
        const double cand_len = tour_length(start, candidate, users);
        if (metropolis_accept(current_len, cand_len, temperature, rng)) {
            current = std::move(candidate);
            current_len = cand_len;
        }
        if (current_len < res.length) {
            res.schedule = current;
            res.length = current_len;
        }
        temperature *= params.cooling_rate;
        res.best_trace.push_back(res.length);
    }
    return res;
}

} // namespace

bool is_permutation_of(const Schedule& s, std::size_t k)
{
    if (s.order.size() != k)
        return false;
    std::vector<char> seen(k, 0);
    for (int v : s.order) {
        if (v < 0 || static_cast<std::size_t>(v) >= k || seen[static_cast<std::size_t>(v)])
            return false;
        seen[static_cast<std::size_t>(v)] = 1;
    }
    return true;
}

double tour_length(Vec3 start, const Schedule& sched, std::span<const Vec3> users)
{
    double total = 0.0;
    Vec3 at{start.x, start.y, 0.0};
    for (int idx : sched.order) {
        if (idx < 0 || static_cast<std::size_t>(idx) >= users.size())
            throw DomainError("schedule index " + std::to_string(idx) + " out of range");
        const Vec3 next = users[static_cast<std::size_t>(idx)];
        total += distance_xy(at, next);
        at = next;
    }
    return total;
}

std::pair<Schedule, double> greedy_init(Vec3 start, std::span<const Vec3> users)
{
    if (users.empty())
        throw DomainError("greedy_init needs at least one user");
    Schedule s;
    std::vector<char> used(users.size(), 0);
    Vec3 at = start;
    double total = 0.0;
    for (std::size_t step = 0; step < users.size(); ++step) {
        std::size_t best = users.size();
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < users.size(); ++k) {
            if (used[k])
                continue;
            const double d = distance_xy(at, users[k]);
            if (d < best_d) { // strict: ties keep the lowest index
                best_d = d;
                best = k;
            }
        }
        used[best] = 1;
        s.order.push_back(static_cast<int>(best));
        total += best_d;
        at = users[best];
    }
    return {s, total};
}

std::array<double, 3> operator_probabilities(double temperature, const AnnealParams& params)
{
    std::array<double, 3> logits{};
    for (std::size_t o = 0; o < 3; ++o)
        logits[o] = std::log(params.op_bias[o]) + params.op_sensitivity[o] * temperature;
    const double peak = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (auto& l : logits) {
        l = std::exp(l - peak);
        z += l;
    }
    for (auto& l : logits)
        l /= z;
    return logits;
}

NeighborhoodOp select_operator(double temperature, const AnnealParams& params, Rng& rng)
{
    const auto p = operator_probabilities(temperature, params);
    const double r = uniform01(rng);
    if (r < p[0])
        return NeighborhoodOp::Swap;
    if (r < p[0] + p[1])
        return NeighborhoodOp::InsertMove;
    return NeighborhoodOp::Reverse;
}

Schedule swap_positions(Schedule s, std::size_t i, std::size_t j)
{
    std::swap(s.order.at(i), s.order.at(j));
    return s;
}

Schedule insert_move(Schedule s, std::size_t from, std::size_t to)
{
    const int v = s.order.at(from);
    s.order.erase(s.order.begin() + static_cast<std::ptrdiff_t>(from));
    s.order.insert(s.order.begin() + static_cast<std::ptrdiff_t>(std::min(to, s.order.size())), v);
    return s;
}

Schedule reverse_range(Schedule s, std::size_t first, std::size_t last)
{
    if (last >= s.order.size() || first > last)
        throw DomainError("reverse range out of bounds");
    std::reverse(s.order.begin() + static_cast<std::ptrdiff_t>(first),
                 s.order.begin() + static_cast<std::ptrdiff_t>(last) + 1);
    return s;
}

Schedule apply_operator(const Schedule& s, NeighborhoodOp op, Rng& rng)
{
    const std::size_t k = s.order.size();
    if (k < 2)
        return s;
    switch (op) {
    case NeighborhoodOp::Swap: {
        const auto [i, j] = pick_pair(rng, k);
        return swap_positions(s, i, j);
    }
    case NeighborhoodOp::InsertMove: {
        // Reinsertion index differs from the source index, so the element moves.
        const std::size_t from = pick_index(rng, k);
        std::size_t to = pick_index(rng, k - 1);
        if (to >= from)
            ++to;
        return insert_move(s, from, to);
    }
    case NeighborhoodOp::Reverse: {
        const auto [i, j] = pick_pair(rng, k);
        return reverse_range(s, i, j);
    }
    }
    return s;
}

AnnealResult anneal(Vec3 start, std::span<const Vec3> users, const AnnealParams& params, Rng& rng)
{
    auto [initial, len] = greedy_init(start, users);
    (void)len;
    return run_anneal(start, users, std::move(initial), params, rng, true);
}

AnnealResult anneal_classical(Vec3 start, std::span<const Vec3> users, const AnnealParams& params, Rng& rng)
{
    if (users.empty())
        throw DomainError("anneal needs at least one user");
    Schedule initial;
    initial.order.resize(users.size());
    std::iota(initial.order.begin(), initial.order.end(), 0);
    std::shuffle(initial.order.begin(), initial.order.end(), rng);
    return run_anneal(start, users, std::move(initial), params, rng, false);
}

} // namespace uavdt

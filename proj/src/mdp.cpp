#include "uavdt/mdp.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace uavdt {

FlightAction to_physical(const std::array<double, 3>& a, double v_max)
{
    auto map = [](double x, double hi) { return (std::clamp(x, -1.0, 1.0) + 1.0) * 0.5 * hi; };
    return {map(a[0], v_max), map(a[1], kPi), map(a[2], 2.0 * kPi)};
}

std::array<double, 3> to_normalized(const FlightAction& a, double v_max)
{
    auto map = [](double x, double hi) { return std::clamp(2.0 * x / hi - 1.0, -1.0, 1.0); };
    return {map(a.v, v_max), map(a.psi_ver, kPi), map(a.psi_hor, 2.0 * kPi)};
}

FlightAction clip_action(const FlightAction& a, double v_max)
{
    return {std::clamp(a.v, 0.0, v_max), std::clamp(a.psi_ver, 0.0, kPi), std::clamp(a.psi_hor, 0.0, 2.0 * kPi)};
}

namespace {

// Writes `value` into every cell whose center lies within the horizontal disc.
void paint_disc(std::vector<double>& m, const GridGeometry& g, Vec3 c, double radius, double value)
{
    const int i_lo = std::max(0, static_cast<int>(std::floor((c.x - radius) / g.dx())));
    const int i_hi = std::min(g.rows - 1, static_cast<int>(std::floor((c.x + radius) / g.dx())));
    const int j_lo = std::max(0, static_cast<int>(std::floor((c.y - radius) / g.dy())));
    const int j_hi = std::min(g.cols - 1, static_cast<int>(std::floor((c.y + radius) / g.dy())));
    for (int i = i_lo; i <= i_hi; ++i)
        for (int j = j_lo; j <= j_hi; ++j)
            if (std::hypot(g.center_x(i) - c.x, g.center_y(j) - c.y) <= radius)
                m[static_cast<std::size_t>(g.index(i, j))] = value;
}

double top_strength(const RewardWeights& w, std::size_t k)
{
    return w.mu_top > 0.0 ? w.mu_top : static_cast<double>(k);
}

} // namespace

std::vector<double> build_s1(std::span<const GroundUser> users, const Schedule& schedule, Vec3 uav,
                             const GridGeometry& grid, const RewardWeights& weights, double beta_com, double max_alt,
                             bool normalize)
{
    std::vector<double> m(static_cast<std::size_t>(grid.cell_count()), 0.0);
    const double top = top_strength(weights, users.size());
    const double r = weights.j_dp;
    for (std::size_t p = 0; p < schedule.order.size(); ++p) {
        const auto& u = users[static_cast<std::size_t>(schedule.order[p])];
        if (u.served)
            continue;
        const double mu = top - static_cast<double>(p);
        const Vec3 c = u.position;
        const int i_lo = std::max(0, static_cast<int>(std::floor((c.x - r) / grid.dx())));
        const int i_hi = std::min(grid.rows - 1, static_cast<int>(std::floor((c.x + r) / grid.dx())));
        const int j_lo = std::max(0, static_cast<int>(std::floor((c.y - r) / grid.dy())));
        const int j_hi = std::min(grid.cols - 1, static_cast<int>(std::floor((c.y + r) / grid.dy())));
        for (int i = i_lo; i <= i_hi; ++i)
            for (int j = j_lo; j <= j_hi; ++j) {
                const double d = std::hypot(grid.center_x(i) - c.x, grid.center_y(j) - c.y);
                if (d <= r)
                    m[static_cast<std::size_t>(grid.index(i, j))] += mu * (d - r);
            }
    }
    if (normalize)
        for (double& v : m)
            v /= top * weights.j_dp;
    paint_disc(m, grid, uav, coverage_radius(uav.z, beta_com), normalize ? uav.z / max_alt : uav.z);
    return m;
}

std::vector<double> build_s2(const VirtualEnv& ve, Vec3 uav, double beta_sen, double max_alt)
{
    const auto& g = ve.grid();
    std::vector<double> m(static_cast<std::size_t>(g.cell_count()), 0.0);
    for (int idx : ve.occupied())
        m[static_cast<std::size_t>(idx)] = ve.cells()[static_cast<std::size_t>(idx)].height / max_alt;
    paint_disc(m, g, uav, coverage_radius(uav.z, beta_sen), uav.z / max_alt);
    return m;
}

std::optional<int> select_service_target(const Schedule& schedule, std::span<const GroundUser> users, Vec3 uav,
                                         double d_com)
{
    for (int k : schedule.order) {
        const auto& u = users[static_cast<std::size_t>(k)];
        if (u.served)
            continue;
        if (distance(uav, u.position) <= d_com)
            return k;
        break;
    }
    std::optional<int> best;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < users.size(); ++k) {
        if (users[k].served)
            continue;
        const double d = distance(uav, users[k].position);
        if (d <= d_com && d < best_d) {
            best_d = d;
            best = static_cast<int>(k);
        }
    }
    return best;
}

double shape_reward(double x)
{
    static const double hi = std::nextafter(1.0, 0.0);
    return std::clamp(2.0 / (1.0 + std::exp(-x)) - 1.0, -hi, hi);
}

RewardBreakdown compute_reward(const RewardContext& ctx, const RewardWeights& w)
{
    RewardBreakdown out;
    auto& r = out.r;
    r[0] = ctx.vetoed ? -w.w1 : 0.0;
    r[1] = ctx.v < w.j_vr * ctx.v_max ? -w.w2 : 0.0;
    r[2] = -w.w3 * ctx.t;
    r[3] = ctx.serving ? w.w4 * ctx.rate_bps / 1e6 + w.b4 : 0.0;
    const double dd = ctx.delta_d;
    if (dd > w.j_dr)
        r[4] = w.w51 * std::abs(dd);
    else if (dd >= -w.j_dr)
        r[4] = w.w52 * std::abs(dd);
    else
        r[4] = -w.w51 * std::abs(dd);
    r[5] = ctx.delta_cells > 0 ? w.w6 * ctx.delta_cells : -w.w6;
    r[6] = ctx.final_slot ? w.w7 - ctx.t_f : 0.0;
    out.shaped = shape_reward(r[0] + r[1] + r[2] + r[3] + r[4] + r[5]);
    out.total = out.shaped + r[6];
    return out;
}

Simulation::Simulation(SimConfig cfg) : cfg_(std::move(cfg)), channel_(cfg_.channel.params())
{
    cfg_.grid.side_xy = cfg_.world.side_xy;
    cfg_.world.keep_clear = cfg_.kinematics.start;
    cfg_.world.keep_clear_radius = cfg_.kinematics.start_clearance;
}

FlightBounds Simulation::bounds() const
{
    return {cfg_.world.side_xy, cfg_.kinematics.min_alt, cfg_.kinematics.max_alt};
}

int Simulation::served_count() const
{
    return static_cast<int>(std::count_if(map_.users.begin(), map_.users.end(), [](const auto& u) { return u.served; }));
}

void Simulation::mark_visited(Vec3 p, int* newly)
{
    const auto& g = cfg_.grid;
    const double radius = coverage_radius(p.z, cfg_.kinematics.beta_com);
    const int i_lo = std::max(0, static_cast<int>(std::floor((p.x - radius) / g.dx())));
    const int i_hi = std::min(g.rows - 1, static_cast<int>(std::floor((p.x + radius) / g.dx())));
    const int j_lo = std::max(0, static_cast<int>(std::floor((p.y - radius) / g.dy())));
    const int j_hi = std::min(g.cols - 1, static_cast<int>(std::floor((p.y + radius) / g.dy())));
    int count = 0;
    for (int i = i_lo; i <= i_hi; ++i)
        for (int j = j_lo; j <= j_hi; ++j) {
            auto& v = visited_[static_cast<std::size_t>(g.index(i, j))];
            if (!v && std::hypot(g.center_x(i) - p.x, g.center_y(j) - p.y) <= radius) {
                v = 1;
                ++count;
            }
        }
    log_.covered_cells += count;
    if (newly)
        *newly = count;
}

StateTensor Simulation::reset(std::uint64_t seed, RunMode mode, bool dt_enabled)
{
    dt_ = dt_enabled;
    if (mode == RunMode::Deploy && fixed_map_)
        map_ = *fixed_map_;
    else if (mode == RunMode::Train)
        map_ = spawn_training_ve(cfg_.world, derive_seed(seed, 1));
    else
        map_ = generate_environment(cfg_.world, derive_seed(seed, 1));
    for (auto& u : map_.users) {
        u.delivered_bits = 0.0;
        u.served = u.demand_bits <= 0.0;
        u.served_slot = u.served ? std::optional<int>(0) : std::nullopt;
    }

    std::vector<Vec3> gus;
    gus.reserve(map_.users.size());
    for (const auto& u : map_.users)
        gus.push_back(u.position);
    Rng anneal_rng(derive_seed(seed, 2));
    anneal_ = anneal(cfg_.kinematics.start, gus, cfg_.anneal, anneal_rng);
    schedule_ = anneal_.schedule;

    channel_rng_.seed(derive_seed(seed, 3));
    pos_ = cfg_.kinematics.start;
    slot_ = 0;
    done_ = false;
    log_ = {};
    log_.start = pos_;
    log_.t_k.assign(map_.users.size(), std::nullopt);
    for (std::size_t k = 0; k < map_.users.size(); ++k)
        log_.t_k[k] = map_.users[k].served_slot;

    ve_ = VirtualEnv(cfg_.grid, cfg_.world.max_alt);
    current_view_ = VirtualEnv(cfg_.grid, cfg_.world.max_alt);
    SensingReport report = sense(map_, pos_, cfg_.kinematics.beta_sen, cfg_.grid);
    ve_.update(report, pos_, cfg_.kinematics.beta_sen);
    current_view_.update(report, pos_, cfg_.kinematics.beta_sen);

    visited_.assign(static_cast<std::size_t>(cfg_.grid.cell_count()), 0);
    mark_visited(pos_, nullptr);
    return observe();
}

StateTensor Simulation::observe() const
{
    StateTensor s(cfg_.grid.rows, cfg_.grid.cols);
    const auto s1 = build_s1(map_.users, schedule_, pos_, cfg_.grid, cfg_.reward, cfg_.kinematics.beta_com,
                             cfg_.world.max_alt);
    const auto s2 = build_s2(dt_ ? ve_ : current_view_, pos_, cfg_.kinematics.beta_sen, cfg_.world.max_alt);
    std::copy(s1.begin(), s1.end(), s.s1().begin());
    std::copy(s2.begin(), s2.end(), s.s2().begin());
    return s;
}

StepResult Simulation::step(const FlightAction& action)
{
    if (done_)
        throw ContractError("step called on a finished episode; call reset first");
    const int t = slot_ + 1;
    const double ds = cfg_.timing.slot();
    const auto& kin = cfg_.kinematics;
    const FlightAction a = clip_action(action, kin.v_max);
    const FlightBounds fb = bounds();

    std::optional<int> target;
    for (int k : schedule_.order)
        if (!map_.users[static_cast<std::size_t>(k)].served) {
            target = k;
            break;
        }

    // (1) gate; (2) move
    StepResult res;
    const SafetyVerdict verdict = safety_gate(dt_ ? ve_ : current_view_, pos_, a, fb, ds);
    const Vec3 prev = pos_;
    if (!verdict.safe) {
        res.vetoed = true;
        ++log_.vetoes;
    } else {
        const Vec3 next = predict_next_position(pos_, a, ds);
        if (!fb.contains(next) || !line_of_sight(map_, pos_, next)) {
            // The twin missed it: the airframe is stopped and the event counted.
            res.collided = true;
            ++log_.collisions;
        } else {
            pos_ = next;
        }
    }

    // (3) sense
    SensingReport report = sense(map_, pos_, kin.beta_sen, cfg_.grid);
    report.slot = t;
    ve_.update(report, pos_, kin.beta_sen);
    current_view_.clear();
    current_view_.update(report, pos_, kin.beta_sen);

    // (4) serve
    double rate = 0.0;
    double bits = 0.0;
    const double d_com = coverage_radius(pos_.z, kin.beta_com);
    res.served_user = select_service_target(schedule_, map_.users, pos_, d_com);
    if (res.served_user) {
        auto& u = map_.users[static_cast<std::size_t>(*res.served_user)];
        const LinkBudget bu = build_link(distance(map_.bs_position, pos_), 1, channel_.bs_power_w, channel_, channel_rng_);
        const LinkBudget uk = build_link(distance(pos_, u.position), line_of_sight(map_, pos_, u.position),
                                         channel_.uav_power_w, channel_, channel_rng_);
        rate = effective_rate(bu.rate_bps, uk.rate_bps);
        bits = slot_data(rate, cfg_.timing.delta2);
        u.delivered_bits += bits;
        if (!u.served && u.delivered_bits >= u.demand_bits) {
            u.served = true;
            u.served_slot = t;
            log_.t_k[static_cast<std::size_t>(*res.served_user)] = t;
        }
    }

    // (5) coverage
    int newly = 0;
    mark_visited(pos_, &newly);

    // (6) reward
    const bool all_served = served_count() == static_cast<int>(map_.users.size());
    RewardContext ctx;
    ctx.vetoed = res.vetoed || res.collided;
    ctx.v = (res.vetoed || res.collided) ? 0.0 : a.v;
    ctx.v_max = kin.v_max;
    ctx.t = t;
    ctx.serving = res.served_user.has_value();
    ctx.rate_bps = rate;
    if (target) {
        const Vec3 gu = map_.users[static_cast<std::size_t>(*target)].position;
        ctx.delta_d = distance(prev, gu) - distance(pos_, gu);
    }
    ctx.delta_cells = newly;
    ctx.final_slot = all_served;
    ctx.t_f = t;
    res.parts = compute_reward(ctx, cfg_.reward);
    res.reward = res.parts.total;

    // (7) termination
    slot_ = t;
    if (all_served)
        log_.t_f = t;
    done_ = all_served || t >= cfg_.timing.max_slots;
    res.done = done_;
    res.terminal = all_served;

    SlotRecord rec;
    rec.slot = t;
    rec.position = pos_;
    rec.action = a;
    rec.reward = res.reward;
    rec.served_user = res.served_user.value_or(-1);
    rec.delivered_bits = bits;
    rec.vetoed = res.vetoed;
    rec.veto_reason = verdict.reason;
    rec.collided = res.collided;
    log_.slots.push_back(rec);
    log_.total_reward += res.reward;

    res.state = observe();
    return res;
}

std::string episode_to_json(const Simulation& sim, double slot_seconds)
{
    using json = nlohmann::ordered_json;
    const auto& map = sim.map();
    const auto& log = sim.log();
    json j;
    j["side_xy"] = map.side_xy;
    j["max_alt"] = map.max_alt;
    j["slot_seconds"] = slot_seconds;
    j["buildings"] = json::array();
    for (const auto& b : map.buildings)
        j["buildings"].push_back({{"x_min", b.x_min}, {"x_max", b.x_max}, {"y_min", b.y_min}, {"y_max", b.y_max},
                                  {"height", b.height}});
    j["users"] = json::array();
    for (std::size_t k = 0; k < map.users.size(); ++k) {
        const auto& u = map.users[k];
        json ju = {{"id", u.id}, {"x", u.position.x}, {"y", u.position.y}, {"z", u.position.z}, {"served", u.served}};
        ju["t_k"] = log.t_k[k] ? json(*log.t_k[k]) : json(nullptr);
        j["users"].push_back(ju);
    }
    j["schedule"] = sim.schedule().order;
    j["bs"] = {map.bs_position.x, map.bs_position.y, map.bs_position.z};
    j["start"] = {log.start.x, log.start.y, log.start.z};
    j["path"] = json::array();
    for (const auto& s : log.slots)
        j["path"].push_back({{"slot", s.slot}, {"x", s.position.x}, {"y", s.position.y}, {"z", s.position.z},
                             {"v", s.action.v}, {"psi_ver", s.action.psi_ver}, {"psi_hor", s.action.psi_hor},
                             {"reward", s.reward}, {"served_user", s.served_user}, {"vetoed", s.vetoed},
                             {"collided", s.collided}});
    j["t_f"] = log.t_f ? json(*log.t_f) : json(nullptr);
    j["vetoes"] = log.vetoes;
    j["collisions"] = log.collisions;
    j["covered_cells"] = log.covered_cells;
    j["total_reward"] = log.total_reward;
    return j.dump(2);
}

} // namespace uavdt

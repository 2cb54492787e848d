#include "uavdt/world.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>

namespace uavdt {

namespace {

double snap_extent(double v, double q)
{
    if (q <= 0.0)
        return v;
    return std::max(q, std::round(v / q) * q);
}

double snap_origin(double v, double q)
{
    if (q <= 0.0)
        return v;
    return std::floor(v / q) * q;
}

bool footprints_overlap(const Building& a, const Building& b)
{
    return a.x_min < b.x_max && b.x_min < a.x_max && a.y_min < b.y_max && b.y_min < a.y_max;
}

double rayleigh(Rng& rng, double scale)
{
    const double u = uniform01(rng);
    return scale * std::sqrt(-2.0 * std::log1p(-u));
}

struct Placer {
    const WorldConfig& cfg;
    Rng& rng;
    std::vector<Building>& placed;

    bool blocks_keep_clear(const Building& b) const
    {
        if (cfg.keep_clear_radius <= 0.0)
            return false;
        const double dx = std::max({b.x_min - cfg.keep_clear.x, 0.0, cfg.keep_clear.x - b.x_max});
        const double dy = std::max({b.y_min - cfg.keep_clear.y, 0.0, cfg.keep_clear.y - b.y_max});
        return std::hypot(dx, dy) <= cfg.keep_clear_radius;
    }

    // Draws footprints until one fits; throws once the retry budget is gone.
    Building draw(int& retries)
    {
        std::uniform_real_distribution<double> extent(cfg.footprint_min, cfg.footprint_max);
        while (retries < cfg.max_retries) {
            ++retries;
            const double len = snap_extent(extent(rng), cfg.footprint_quantum);
            const double wid = snap_extent(extent(rng), cfg.footprint_quantum);
            if (len > cfg.side_xy || wid > cfg.side_xy)
                throw GenerationError("building footprint larger than the mission area (footprint_max vs side_xy)");
            const double x0 = snap_origin(uniform01(rng) * (cfg.side_xy - len), cfg.footprint_quantum);
            const double y0 = snap_origin(uniform01(rng) * (cfg.side_xy - wid), cfg.footprint_quantum);
            Building b{x0, x0 + len, y0, y0 + wid, 0.0};
            const bool clash = std::any_of(placed.begin(), placed.end(),
                                           [&](const Building& o) { return footprints_overlap(b, o); });
            if (clash || blocks_keep_clear(b))
                continue;
            b.height = std::clamp(rayleigh(rng, cfg.height_scale), cfg.height_min, cfg.height_max);
            return b;
        }
        throw GenerationError("could not place building footprints without overlap after "
                              + std::to_string(cfg.max_retries) + " retries");
    }
};

void validate(const WorldConfig& cfg)
{
    if (!(cfg.side_xy > 0.0) || !(cfg.max_alt > 0.0))
        throw GenerationError("world dimensions must be positive");
    if (cfg.building_count < 0 || cfg.user_count < 0)
        throw GenerationError("building and user counts must be non-negative");
    if (!(cfg.footprint_min > 0.0) || cfg.footprint_max < cfg.footprint_min)
        throw GenerationError("footprint range must satisfy 0 < footprint_min <= footprint_max");
    if (!(cfg.height_min > 0.0) || cfg.height_max < cfg.height_min || cfg.height_max > cfg.max_alt)
        throw GenerationError("building heights must satisfy 0 < height_min <= height_max <= max_alt");
    if (cfg.obstacle_ratio < 0.0 || cfg.obstacle_ratio >= 1.0)
        throw GenerationError("obstacle_ratio must lie in [0, 1)");
}

} // namespace

double EnvironmentMap::obstacle_ratio() const
{
    double vol = 0.0;
    for (const auto& b : buildings)
        vol += b.volume();
    return vol / (side_xy * side_xy * max_alt);
}

EnvironmentMap generate_environment(const WorldConfig& cfg, std::uint64_t seed)
{
    validate(cfg);
    Rng rng(seed);
    EnvironmentMap env;
    env.side_xy = cfg.side_xy;
    env.max_alt = cfg.max_alt;
    env.bs_position = cfg.bs_position;

    Placer placer{cfg, rng, env.buildings};
    int retries = 0;
    if (cfg.obstacle_ratio > 0.0) {
        const double total = cfg.side_xy * cfg.side_xy * cfg.max_alt;
        const double target = cfg.obstacle_ratio;
        const double hi = target * (1.0 + cfg.obstacle_ratio_tolerance);
        const double lo = target * (1.0 - cfg.obstacle_ratio_tolerance);
        double ratio = 0.0;
        while (ratio < lo) {
            Building b = placer.draw(retries);
            double next = ratio + b.volume() / total;
            if (next > hi) {
                // Trim the roof so the last building lands on the target ratio.
                const double area = (b.x_max - b.x_min) * (b.y_max - b.y_min);
                const double h = (target - ratio) * total / area;
                if (h < cfg.height_min)
                    continue;
                b.height = h;
                next = ratio + b.volume() / total;
            }
            env.buildings.push_back(b);
            ratio = next;
        }
    } else {
        for (int i = 0; i < cfg.building_count; ++i)
            env.buildings.push_back(placer.draw(retries));
    }

    int user_retries = 0;
    for (int k = 0; k < cfg.user_count; ++k) {
        for (;;) {
            if (++user_retries > cfg.max_retries)
                throw GenerationError("could not place ground users outside building footprints after "
                                      + std::to_string(cfg.max_retries) + " retries");
            const Vec3 p{uniform01(rng) * cfg.side_xy, uniform01(rng) * cfg.side_xy, 0.0};
            if (point_in_building(env, p))
                continue;
            GroundUser u;
            u.id = k;
            u.position = p;
            u.demand_bits = cfg.demand_bits;
            env.users.push_back(u);
            break;
        }
    }
    return env;
}

bool point_in_building(const Building& b, Vec3 p)
{
    return p.x >= b.x_min && p.x <= b.x_max && p.y >= b.y_min && p.y <= b.y_max && p.z >= 0.0
           && p.z <= b.height;
}

bool point_in_building(const EnvironmentMap& env, Vec3 p)
{
    return std::any_of(env.buildings.begin(), env.buildings.end(),
                       [&](const Building& b) { return point_in_building(b, p); });
}

bool segment_intersects_box(Vec3 p0, Vec3 p1, const Building& b)
{
    const double origin[3] = {p0.x, p0.y, p0.z};
    const double dir[3] = {p1.x - p0.x, p1.y - p0.y, p1.z - p0.z};
    const double lo[3] = {b.x_min, b.y_min, 0.0};
    const double hi[3] = {b.x_max, b.y_max, b.height};
    double t0 = 0.0;
    double t1 = 1.0;
    for (int a = 0; a < 3; ++a) {
        if (dir[a] == 0.0) {
            if (origin[a] < lo[a] || origin[a] > hi[a])
                return false;
            continue;
        }
        double ta = (lo[a] - origin[a]) / dir[a];
        double tb = (hi[a] - origin[a]) / dir[a];
        if (ta > tb)
            std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
        if (t0 > t1)
            return false;
    }
    return true;
}

int line_of_sight(const EnvironmentMap& env, Vec3 p0, Vec3 p1)
{
    for (const auto& b : env.buildings)
        if (segment_intersects_box(p0, p1, b))
            return 0;
    return 1;
}

double coverage_radius(double z, double beta)
{
    if (!(beta >= 0.0) || beta >= kPi / 2.0)
        throw DomainError("coverage angle must lie in [0, pi/2)");
    if (z < 0.0)
        throw DomainError("coverage altitude must be non-negative");
    return z / std::cos(beta);
}

SensingReport sense(const EnvironmentMap& env, Vec3 uav, double beta_sen, const GridGeometry& grid)
{
    SensingReport report;
    if (env.buildings.empty())
        return report;
    const double radius = coverage_radius(uav.z, beta_sen);
    const int i_lo = std::max(0, static_cast<int>(std::floor((uav.x - radius) / grid.dx())));
    const int i_hi = std::min(grid.rows - 1, static_cast<int>(std::floor((uav.x + radius) / grid.dx())));
    const int j_lo = std::max(0, static_cast<int>(std::floor((uav.y - radius) / grid.dy())));
    const int j_hi = std::min(grid.cols - 1, static_cast<int>(std::floor((uav.y + radius) / grid.dy())));
    for (int i = i_lo; i <= i_hi; ++i) {
        for (int j = j_lo; j <= j_hi; ++j) {
            const double cx = grid.center_x(i);
            const double cy = grid.center_y(j);
            if (std::hypot(cx - uav.x, cy - uav.y) > radius)
                continue;
            double h = 0.0;
            for (const auto& b : env.buildings)
                if (cx >= b.x_min && cx <= b.x_max && cy >= b.y_min && cy <= b.y_max)
                    h = std::max(h, b.height);
            if (h > 0.0)
                report.cells.push_back({i, j, h});
        }
    }
    return report;
}

std::string environment_to_json(const EnvironmentMap& env)
{
    nlohmann::ordered_json j;
    j["side_xy"] = env.side_xy;
    j["max_alt"] = env.max_alt;
    j["bs_position"] = {env.bs_position.x, env.bs_position.y, env.bs_position.z};
    auto& bs = j["buildings"] = nlohmann::ordered_json::array();
    for (const auto& b : env.buildings)
        bs.push_back({{"x_min", b.x_min}, {"x_max", b.x_max}, {"y_min", b.y_min}, {"y_max", b.y_max},
                      {"height", b.height}});
    auto& us = j["users"] = nlohmann::ordered_json::array();
    for (const auto& u : env.users)
        us.push_back({{"id", u.id},
                      {"position", {u.position.x, u.position.y, u.position.z}},
                      {"demand_bits", u.demand_bits}});
    return j.dump(2) + "\n";
}

EnvironmentMap environment_from_json(const std::string& text)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(std::string("environment JSON: ") + e.what());
    }
    try {
        EnvironmentMap env;
        env.side_xy = j.at("side_xy").get<double>();
        env.max_alt = j.at("max_alt").get<double>();
        const auto& bs = j.at("bs_position");
        env.bs_position = {bs.at(0).get<double>(), bs.at(1).get<double>(), bs.at(2).get<double>()};
        for (const auto& b : j.at("buildings"))
            env.buildings.push_back({b.at("x_min").get<double>(), b.at("x_max").get<double>(),
                                     b.at("y_min").get<double>(), b.at("y_max").get<double>(),
                                     b.at("height").get<double>()});
        for (const auto& u : j.at("users")) {
            GroundUser gu;
            gu.id = u.at("id").get<int>();
            const auto& p = u.at("position");
            gu.position = {p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>()};
            gu.demand_bits = u.at("demand_bits").get<double>();
            env.users.push_back(gu);
        }
        for (const auto& b : env.buildings)
            if (!(b.x_min < b.x_max) || !(b.y_min < b.y_max) || !(b.height > 0.0))
                throw FormatError("environment JSON: degenerate building");
        for (const auto& u : env.users)
            if (u.position.z != 0.0 || point_in_building(env, u.position))
                throw FormatError("environment JSON: user " + std::to_string(u.id)
                                  + " must lie on the ground outside buildings");
        return env;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("environment JSON: ") + e.what());
    }
}

} // namespace uavdt

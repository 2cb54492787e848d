#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "uavdt/mdp.hpp"

#include <cmath>
#include <numeric>

using namespace uavdt;

namespace {

GroundUser user(int id, double x, double y, double demand = 2e6)
{
    GroundUser u;
    u.id = id;
    u.position = {x, y, 0};
    u.demand_bits = demand;
    return u;
}

// Desk-sized scene with hand-placed users and optional buildings.
EnvironmentMap desk_map(std::vector<GroundUser> users, std::vector<Building> buildings = {})
{
    EnvironmentMap m;
    m.side_xy = 200;
    m.max_alt = 60;
    m.bs_position = {0, 0, 30};
    m.users = std::move(users);
    m.buildings = std::move(buildings);
    return m;
}

Simulation fixed_sim(const EnvironmentMap& map)
{
    SimConfig cfg = desk_config();
    validate_config(cfg);
    Simulation sim(cfg);
    sim.set_fixed_map(map);
    return sim;
}

double sum(std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0); }

const FlightAction kHover{0, 0, 0};

} // namespace

TEST_CASE("action mapping covers the physical box")
{
    const auto lo = to_physical({-1, -1, -1}, 20);
    CHECK(lo.v == 0.0);
    CHECK(lo.psi_ver == 0.0);
    CHECK(lo.psi_hor == 0.0);
    const auto hi = to_physical({1, 1, 1}, 20);
    CHECK(hi.v == 20.0);
    CHECK(hi.psi_ver == doctest::Approx(kPi));
    CHECK(hi.psi_hor == doctest::Approx(2 * kPi));
    const auto back = to_normalized(to_physical({0.25, -0.5, 0.75}, 20), 20);
    CHECK(back[0] == doctest::Approx(0.25));
    CHECK(back[1] == doctest::Approx(-0.5));
    CHECK(back[2] == doctest::Approx(0.75));
}

TEST_CASE("potential field state")
{
    const GridGeometry grid{100, 100, 1000};
    RewardWeights w;
    std::vector<GroundUser> users;
    for (int k = 0; k < 10; ++k)
        users.push_back(user(k, 105 + 80.0 * k, 505));
    Schedule order;
    for (int k = 0; k < 10; ++k)
        order.order.push_back(k);
    const Vec3 uav{500, 950, 40};

    const auto raw = build_s1(users, order, uav, grid, w, kPi / 4, 140, false);
    // User 0 sits on the centre of cell (10, 50) with strength K = 10.
    CHECK(raw[static_cast<std::size_t>(grid.index(10, 50))] == doctest::Approx(-500.0));
    // Far from every user and outside the UAV disc.
    CHECK(raw[static_cast<std::size_t>(grid.index(50, 5))] == 0.0);

    const auto norm = build_s1(users, order, uav, grid, w, kPi / 4, 140);
    CHECK(norm[static_cast<std::size_t>(grid.index(10, 50))] == doctest::Approx(-1.0));
    // The disc of radius z / cos(beta_com) around the UAV carries z / max_alt.
    CHECK(norm[static_cast<std::size_t>(grid.index(50, 95))] == doctest::Approx(40.0 / 140.0));

    for (auto& u : users)
        u.served = true;
    const auto none = build_s1(users, order, uav, grid, w, kPi / 4, 140);
    const double disc = coverage_radius(uav.z, kPi / 4);
    for (int i = 0; i < grid.rows; ++i)
        for (int j = 0; j < grid.cols; ++j)
            if (std::hypot(grid.center_x(i) - uav.x, grid.center_y(j) - uav.y) > disc)
                CHECK(none[static_cast<std::size_t>(grid.index(i, j))] == 0.0);
}

TEST_CASE("obstacle state")
{
    const GridGeometry grid{100, 100, 1000};
    VirtualEnv ve(grid, 150);
    const Vec3 uav{500, 500, 70};
    const auto empty = build_s2(ve, uav, kPi / 6, 140);
    const double disc = coverage_radius(uav.z, kPi / 6);
    for (int i = 0; i < grid.rows; ++i)
        for (int j = 0; j < grid.cols; ++j) {
            const bool in = std::hypot(grid.center_x(i) - uav.x, grid.center_y(j) - uav.y) <= disc;
            const double v = empty[static_cast<std::size_t>(grid.index(i, j))];
            CHECK(v == (in ? doctest::Approx(0.5) : doctest::Approx(0.0)));
        }

    SensingReport r;
    r.cells.push_back({5, 5, 140});
    ve.update(r, {55, 55, 100}, kPi / 6);
    CHECK(build_s2(ve, uav, kPi / 6, 140)[static_cast<std::size_t>(grid.index(5, 5))] == doctest::Approx(1.0));
}

TEST_CASE("service target: schedule priority, then nearest")
{
    std::vector<GroundUser> users{user(0, 0, 0), user(1, 100, 0), user(2, 300, 0)};
    const Schedule order{{1, 0, 2}};
    CHECK(select_service_target(order, users, {10, 0, 50}, 150) == 1);
    CHECK(select_service_target(order, users, {10, 0, 50}, 60) == 0);
    CHECK(select_service_target(order, users, {700, 700, 50}, 60) == std::nullopt);
    users[1].served = true;
    CHECK(select_service_target(order, users, {90, 0, 50}, 150) == 0);
}

TEST_CASE("reward shaping")
{
    CHECK(shape_reward(0.0) == 0.0);
    CHECK(shape_reward(1e6) < 1.0);
    CHECK(shape_reward(-1e6) > -1.0);
    CHECK(shape_reward(2.0) == doctest::Approx(-shape_reward(-2.0)));
    Rng rng(9);
    std::normal_distribution<double> n(0.0, 200.0);
    for (int i = 0; i < 10000; ++i) {
        const double g = shape_reward(n(rng));
        CHECK((g > -1.0 && g < 1.0));
    }
}

TEST_CASE("reward components")
{
    RewardWeights w;
    RewardContext quiet;
    quiet.v = 1.0;
    quiet.v_max = 1.0;
    quiet.delta_cells = 1;
    auto r = compute_reward(quiet, w);
    // Only the exploration term survives; no collision, speed, time or service part.
    CHECK(r.r[0] == 0.0);
    CHECK(r.r[1] == 0.0);
    CHECK(r.r[5] == doctest::Approx(0.5));

    RewardContext zero;
    zero.v = 1.0;
    zero.v_max = 1.0;
    zero.delta_cells = 0;
    w.w6 = 0.0;
    CHECK(compute_reward(zero, w).total == 0.0);
    w = RewardWeights{};

    RewardContext far;
    far.delta_d = 25;
    CHECK(compute_reward(far, w).r[4] == doctest::Approx(75.0));
    far.delta_d = 10;
    CHECK(compute_reward(far, w).r[4] == doctest::Approx(10.0));
    far.delta_d = -25;
    CHECK(compute_reward(far, w).r[4] == doctest::Approx(-75.0));

    RewardContext fin;
    fin.final_slot = true;
    fin.t_f = 100;
    fin.t = 100;
    const auto f = compute_reward(fin, w);
    CHECK(f.r[6] == doctest::Approx(400.0));
    CHECK(f.total == doctest::Approx(f.shaped + 400.0));

    RewardContext hit;
    hit.vetoed = true;
    hit.v = 0.0;
    hit.v_max = 20;
    const auto h = compute_reward(hit, w);
    CHECK(h.r[0] == -100.0);
    CHECK(h.r[1] == -3.0);
}

TEST_CASE("hovering in free space keeps position and raises no veto")
{
    auto sim = fixed_sim(desk_map({user(0, 180, 180)}));
    sim.reset(1, RunMode::Deploy, true);
    const Vec3 p0 = sim.position();
    const auto r = sim.step(kHover);
    CHECK(sim.position() == p0);
    CHECK_FALSE(r.vetoed);
    CHECK_FALSE(r.collided);
    CHECK_FALSE(r.done);
}

TEST_CASE("a user in range with a small demand is served in one slot")
{
    auto sim = fixed_sim(desk_map({user(0, 30, 30), user(1, 180, 180)}));
    sim.reset(1, RunMode::Deploy, true);
    const auto r = sim.step(kHover);
    REQUIRE(r.served_user.has_value());
    CHECK(*r.served_user == 0);
    CHECK(sim.map().users[0].served);
    CHECK(sim.log().t_k[0] == 1);
    CHECK(r.parts.r[3] > 1.0);
}

TEST_CASE("pre-served users end the episode after one slot with the completion bonus")
{
    auto sim = fixed_sim(desk_map({user(0, 150, 150, 0.0)}));
    sim.reset(1, RunMode::Deploy, true);
    const auto r = sim.step(kHover);
    CHECK(r.done);
    CHECK(r.terminal);
    CHECK(sim.log().t_f == 1);
    CHECK(r.parts.r[6] == doctest::Approx(sim.config().reward.w7 - 1.0));
    CHECK_THROWS_AS(sim.step(kHover), ContractError);
}

TEST_CASE("the slot limit ends an episode without a terminal flag")
{
    auto sim = fixed_sim(desk_map({user(0, 190, 190, 1e12)}));
    sim.reset(1, RunMode::Deploy, true);
    StepResult r;
    for (int t = 0; t < sim.config().timing.max_slots; ++t)
        r = sim.step(kHover);
    CHECK(r.done);
    CHECK_FALSE(r.terminal);
    CHECK_FALSE(sim.log().t_f.has_value());
}

TEST_CASE("reset is deterministic")
{
    SimConfig cfg = desk_config();
    validate_config(cfg);
    Simulation a(cfg), b(cfg);
    CHECK(a.reset(17, RunMode::Deploy, true) == b.reset(17, RunMode::Deploy, true));
    CHECK(a.reset(17, RunMode::Train, true) == b.reset(17, RunMode::Train, true));
    CHECK(a.map() == b.map());
}

TEST_CASE("without the twin, state and gate only see the current slot's sensing")
{
    // Within sensing range of the start, then left behind by flying along +y.
    const Building b{60, 80, 0, 20, 50};
    const auto map = desk_map({user(0, 20, 190, 1e12)}, {b});
    auto dt = fixed_sim(map), nodt = fixed_sim(map);
    dt.reset(1, RunMode::Deploy, true);
    nodt.reset(1, RunMode::Deploy, false);
    CHECK(dt.observe() == nodt.observe());
    CHECK(dt.twin().occupied().size() > 0);

    const FlightAction north{20, kPi / 2, kPi / 2};
    for (int t = 0; t < 4; ++t) {
        dt.step(north);
        nodt.step(north);
    }
    CHECK(dt.position() == nodt.position());
    const auto s_dt = dt.observe(), s_nodt = nodt.observe();
    CHECK(sum(s_dt.s2()) > sum(s_nodt.s2()));
    CHECK(sum(s_dt.s1()) == sum(s_nodt.s1()));
}

TEST_CASE("flying into a building: vetoed with the twin, a collision without")
{
    const Building b{60, 100, 0, 60, 60};
    const auto map = desk_map({user(0, 190, 190, 1e12)}, {b});
    const FlightAction east{20, kPi / 2, 0};

    auto dt = fixed_sim(map);
    dt.reset(1, RunMode::Deploy, true);
    int vetoes = 0;
    for (int t = 0; t < 5; ++t) {
        const auto r = dt.step(east);
        vetoes += r.vetoed ? 1 : 0;
        CHECK_FALSE(r.collided);
        CHECK_FALSE(point_in_building(dt.map(), dt.position()));
    }
    CHECK(vetoes > 0);
    CHECK(dt.log().collisions == 0);
}

TEST_CASE("episode JSON")
{
    auto sim = fixed_sim(desk_map({user(0, 30, 30), user(1, 180, 180)}));
    sim.reset(1, RunMode::Deploy, true);
    sim.step(kHover);
    const auto json = episode_to_json(sim, 1.2);
    CHECK(json.find("\"path\"") != std::string::npos);
    CHECK(json.find("\"schedule\"") != std::string::npos);
}

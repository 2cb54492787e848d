#pragma once

#include "uavdt/common.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace uavdt {

struct Building {
    double x_min = 0.0;
    double x_max = 0.0;
    double y_min = 0.0;
    double y_max = 0.0;
    double height = 0.0;

    double volume() const { return (x_max - x_min) * (y_max - y_min) * height; }
    friend bool operator==(const Building&, const Building&) = default;
};

struct GroundUser {
    int id = 0;
    Vec3 position;
    double demand_bits = 0.0;
    double delivered_bits = 0.0;
    bool served = false;
    // Slot index t_k at which cumulative delivery first met the demand.
    std::optional<int> served_slot;

    friend bool operator==(const GroundUser&, const GroundUser&) = default;
};

struct EnvironmentMap {
    double side_xy = 0.0;
    double max_alt = 0.0;
    std::vector<Building> buildings;
    std::vector<GroundUser> users;
    Vec3 bs_position;

    double obstacle_ratio() const;
    friend bool operator==(const EnvironmentMap&, const EnvironmentMap&) = default;
};

// Cell (i, j) covers [i*dx, (i+1)*dx) x [j*dy, (j+1)*dy); i runs along x.
struct GridGeometry {
    int rows = 0;
    int cols = 0;
    double side_xy = 0.0;

    double dx() const { return side_xy / rows; }
    double dy() const { return side_xy / cols; }
    double center_x(int i) const { return (i + 0.5) * dx(); }
    double center_y(int j) const { return (j + 0.5) * dy(); }
    int cell_count() const { return rows * cols; }
    int index(int i, int j) const { return i * cols + j; }
    bool contains(int i, int j) const { return i >= 0 && i < rows && j >= 0 && j < cols; }
};

struct WorldConfig {
    double side_xy = 1000.0;
    double max_alt = 150.0;
    int building_count = 8;
    double footprint_min = 50.0;
    double footprint_max = 150.0;
    // Footprint corners and extents snap to this multiple; 0 disables snapping.
    double footprint_quantum = 10.0;
    double height_scale = 100.0;
    double height_min = 40.0;
    double height_max = 150.0;
    int user_count = 10;
    double demand_bits = 10e6;
    Vec3 bs_position{0.0, 0.0, 30.0};
    // When > 0, buildings are added until this volume ratio is met (building_count ignored).
    double obstacle_ratio = 0.0;
    double obstacle_ratio_tolerance = 0.10;
    // Horizontal disc around the UAV start kept free of buildings.
    Vec3 keep_clear{0.0, 0.0, 0.0};
    double keep_clear_radius = 0.0;
    int max_retries = 10000;
};

struct SensedCell {
    int row = 0;
    int col = 0;
    double height = 0.0;
    friend bool operator==(const SensedCell&, const SensedCell&) = default;
};

struct SensingReport {
    std::vector<SensedCell> cells;
    int slot = 0;
};

EnvironmentMap generate_environment(const WorldConfig& cfg, std::uint64_t seed);

bool point_in_building(const Building& b, Vec3 p);
bool point_in_building(const EnvironmentMap& env, Vec3 p);

// Closed segment against the closed box [x_min,x_max] x [y_min,y_max] x [0,height].
bool segment_intersects_box(Vec3 p0, Vec3 p1, const Building& b);

// 1 for line of sight, 0 when any building obstructs the segment.
int line_of_sight(const EnvironmentMap& env, Vec3 p0, Vec3 p1);

// Slant-range coverage z / cos(beta), used as a horizontal disc radius.
double coverage_radius(double z, double beta);

SensingReport sense(const EnvironmentMap& env, Vec3 uav, double beta_sen, const GridGeometry& grid);

std::string environment_to_json(const EnvironmentMap& env);
EnvironmentMap environment_from_json(const std::string& text);

} // namespace uavdt

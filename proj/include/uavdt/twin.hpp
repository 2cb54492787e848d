#pragma once

#include "uavdt/common.hpp"
#include "uavdt/world.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace uavdt {

// Physical flight command for one slot: speed, vertical angle from the +z
// axis, and horizontal heading from the +x axis.
struct FlightAction {
    double v = 0.0;
    double psi_ver = 0.0;
    double psi_hor = 0.0;
};

struct FlightBounds {
    double side_xy = 1000.0;
    double min_alt = 0.0;
    double max_alt = 140.0;

    bool contains(Vec3 p) const
    {
        return p.x >= 0.0 && p.x <= side_xy && p.y >= 0.0 && p.y <= side_xy && p.z >= min_alt && p.z <= max_alt;
    }
};

Vec3 predict_next_position(Vec3 pos, const FlightAction& a, double delta_s);

enum class CellKind : std::uint8_t { Unknown = 0, FreeObserved = 1, Occupied = 2 };

struct CellState {
    CellKind kind = CellKind::Unknown;
    double height = 0.0;
    friend bool operator==(const CellState&, const CellState&) = default;
};

class VirtualEnv {
public:
    VirtualEnv() = default;
    VirtualEnv(GridGeometry grid, double max_alt);

    // Reported cells become Occupied; other cells inside the sensing disc
    // become FreeObserved. Occupied cells never revert.
    void update(const SensingReport& report, Vec3 uav, double beta_sen);
    void clear();

    const GridGeometry& grid() const { return grid_; }
    double max_alt() const { return max_alt_; }
    std::uint64_t revision() const { return revision_; }
    const CellState& at(int i, int j) const { return cells_[static_cast<std::size_t>(grid_.index(i, j))]; }
    const std::vector<CellState>& cells() const { return cells_; }
    const std::vector<int>& occupied() const { return occupied_; }

    Building cell_column(int index) const;

    // True when the closed segment touches any Occupied column below its sensed height.
    bool segment_blocked(Vec3 p0, Vec3 p1) const;

    std::string to_json() const;

private:
    GridGeometry grid_;
    double max_alt_ = 0.0;
    std::uint64_t revision_ = 0;
    std::vector<CellState> cells_;
    std::vector<int> occupied_;
};

enum class VetoReason { None = 0, BuildingCollision = 1, OutOfBounds = 2 };

struct SafetyVerdict {
    bool safe = true;
    VetoReason reason = VetoReason::None;
};

const char* to_string(VetoReason r);

// Checks the straight path pos -> predicted against the twin's knowledge.
SafetyVerdict safety_gate(const VirtualEnv& ve, Vec3 pos, const FlightAction& a, const FlightBounds& bounds,
                          double delta_s);

// Same check against ground truth, used to count actual collisions.
SafetyVerdict safety_gate(const EnvironmentMap& env, Vec3 pos, const FlightAction& a, const FlightBounds& bounds,
                          double delta_s);

// Unknown cells count as free.
int predict_los(const VirtualEnv& ve, Vec3 uav, Vec3 gu);

EnvironmentMap spawn_training_ve(const WorldConfig& cfg, std::uint64_t seed);

} // namespace uavdt

#include "uavdt/twin.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>

namespace uavdt {

Vec3 predict_next_position(Vec3 pos, const FlightAction& a, double delta_s)
{
    const double step = a.v * delta_s;
    return {pos.x + step * std::sin(a.psi_ver) * std::cos(a.psi_hor),
            pos.y + step * std::sin(a.psi_ver) * std::sin(a.psi_hor), pos.z + step * std::cos(a.psi_ver)};
}

VirtualEnv::VirtualEnv(GridGeometry grid, double max_alt)
    : grid_(grid), max_alt_(max_alt), cells_(static_cast<std::size_t>(grid.cell_count()))
{
    if (grid.rows <= 0 || grid.cols <= 0 || !(grid.side_xy > 0.0))
        throw DomainError("virtual environment grid must have positive dimensions");
}

void VirtualEnv::clear()
{
    std::fill(cells_.begin(), cells_.end(), CellState{});
    occupied_.clear();
    ++revision_;
}

void VirtualEnv::update(const SensingReport& report, Vec3 uav, double beta_sen)
{
    for (const auto& c : report.cells)
        if (!grid_.contains(c.row, c.col))
            throw DomainError("sensing report cell (" + std::to_string(c.row) + ", " + std::to_string(c.col)
                              + ") outside the grid");

    const double radius = coverage_radius(uav.z, beta_sen);
    const int i_lo = std::max(0, static_cast<int>(std::floor((uav.x - radius) / grid_.dx())));
    const int i_hi = std::min(grid_.rows - 1, static_cast<int>(std::floor((uav.x + radius) / grid_.dx())));
    const int j_lo = std::max(0, static_cast<int>(std::floor((uav.y - radius) / grid_.dy())));
    const int j_hi = std::min(grid_.cols - 1, static_cast<int>(std::floor((uav.y + radius) / grid_.dy())));
    for (int i = i_lo; i <= i_hi; ++i)
        for (int j = j_lo; j <= j_hi; ++j) {
            auto& cell = cells_[static_cast<std::size_t>(grid_.index(i, j))];
            if (cell.kind == CellKind::Unknown
                && std::hypot(grid_.center_x(i) - uav.x, grid_.center_y(j) - uav.y) <= radius)
                cell.kind = CellKind::FreeObserved;
        }

    for (const auto& c : report.cells) {
        const int idx = grid_.index(c.row, c.col);
        auto& cell = cells_[static_cast<std::size_t>(idx)];
        if (cell.kind != CellKind::Occupied)
            occupied_.insert(std::lower_bound(occupied_.begin(), occupied_.end(), idx), idx);
        cell.kind = CellKind::Occupied;
        cell.height = std::min(c.height, max_alt_);
    }
    ++revision_;
}

Building VirtualEnv::cell_column(int index) const
{
    const int i = index / grid_.cols;
    const int j = index % grid_.cols;
    return {i * grid_.dx(), (i + 1) * grid_.dx(), j * grid_.dy(), (j + 1) * grid_.dy(),
            cells_[static_cast<std::size_t>(index)].height};
}

bool VirtualEnv::segment_blocked(Vec3 p0, Vec3 p1) const
{
    for (int idx : occupied_)
        if (segment_intersects_box(p0, p1, cell_column(idx)))
            return true;
    return false;
}

std::string VirtualEnv::to_json() const
{
    nlohmann::ordered_json j;
    j["revision"] = revision_;
    j["rows"] = grid_.rows;
    j["cols"] = grid_.cols;
    j["side_xy"] = grid_.side_xy;
    j["max_alt"] = max_alt_;
    // -1 unknown, 0 observed free, otherwise the sensed height.
    auto& g = j["cells"] = nlohmann::ordered_json::array();
    for (int i = 0; i < grid_.rows; ++i) {
        auto row = nlohmann::ordered_json::array();
        for (int jj = 0; jj < grid_.cols; ++jj) {
            const auto& c = at(i, jj);
            row.push_back(c.kind == CellKind::Unknown ? -1.0 : c.kind == CellKind::Occupied ? c.height : 0.0);
        }
        g.push_back(std::move(row));
    }
    return j.dump();
}

const char* to_string(VetoReason r)
{
    switch (r) {
    case VetoReason::None: return "none";
    case VetoReason::BuildingCollision: return "building_collision";
    case VetoReason::OutOfBounds: return "out_of_bounds";
    }
    return "unknown";
}

SafetyVerdict safety_gate(const VirtualEnv& ve, Vec3 pos, const FlightAction& a, const FlightBounds& bounds,
                          double delta_s)
{
    const Vec3 next = predict_next_position(pos, a, delta_s);
    if (!bounds.contains(next))
        return {false, VetoReason::OutOfBounds};
    if (ve.segment_blocked(pos, next))
        return {false, VetoReason::BuildingCollision};
    return {};
}

SafetyVerdict safety_gate(const EnvironmentMap& env, Vec3 pos, const FlightAction& a, const FlightBounds& bounds,
                          double delta_s)
{
    const Vec3 next = predict_next_position(pos, a, delta_s);
    if (!bounds.contains(next))
        return {false, VetoReason::OutOfBounds};
    if (!line_of_sight(env, pos, next))
        return {false, VetoReason::BuildingCollision};
    return {};
}

int predict_los(const VirtualEnv& ve, Vec3 uav, Vec3 gu) { return ve.segment_blocked(uav, gu) ? 0 : 1; }

EnvironmentMap spawn_training_ve(const WorldConfig& cfg, std::uint64_t seed) { return generate_environment(cfg, seed); }

} // namespace uavdt

#pragma once

#include "certbench/pmdp.hpp"

#include "json.hpp"

#include <compare>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace certbench {

/// Grid cell; x grows rightward, y upward, both 0-based.
struct Cell {
    int x = 0;
    int y = 0;
    auto operator<=>(const Cell&) const = default;
};

int manhattan(Cell a, Cell b);
std::string to_string(Cell c);

enum class ContextKind { Open, Rooftop };
enum class FlightMode { Flying, Grounded, Delivered };

std::string to_string(ContextKind kind);
std::string to_string(FlightMode mode);

/// Layout of one deployment context.
struct GridScenario {
    ContextKind context = ContextKind::Open;
    int width = 5;
    int height = 5;
    Cell uav_start{0, 0};
    Cell robot_start{4, 4};
    Cell goal{4, 0};
    std::vector<Cell> rooftops;                       // Rooftop only
    std::vector<std::pair<Cell, Cell>> rooftop_edges;  // Rooftop only, undirected

    bool in_bounds(Cell c) const { return c.x >= 0 && c.y >= 0 && c.x < width && c.y < height; }

    /// First violated invariant as (field, reason), if any.
    std::optional<std::pair<std::string, std::string>> problem() const;
    /// Throws InvalidScenario when problem() is set.
    void validate() const;

    bool operator==(const GridScenario&) const = default;
};

struct CompositeState {
    Cell uav_pos;
    FlightMode mode = FlightMode::Flying;
    Cell robot_pos;
    bool operator==(const CompositeState&) const = default;
};

/// Bijection between composite states and dense state indices.
///
/// Open:    index = (uav_cell * 2 + mode) * cells + robot_cell
/// Rooftop: index = (rooftop * 2 + mode) * streets + street  for Flying/Grounded,
///          2 * rooftops * streets + street                   for Delivered
/// Cells, rooftops and streets are ordered by y * width + x.
class StateCodec {
public:
    explicit StateCodec(const GridScenario& s);

    std::size_t state_count() const;
    StateIndex encode(const CompositeState& c) const;  // throws InvalidScenario for states outside the space
    CompositeState decode(StateIndex s) const;        // throws Error when out of range

    const std::vector<Cell>& uav_cells() const { return uav_cells_; }
    const std::vector<Cell>& robot_cells() const { return robot_cells_; }

private:
    GridScenario scenario_;
    std::vector<Cell> uav_cells_;
    std::vector<Cell> robot_cells_;
    std::vector<int> uav_slot_;    // by cell index, -1 if absent
    std::vector<int> robot_slot_;  // by cell index, -1 if absent

    int cell_index(Cell c) const { return c.y * scenario_.width + c.x; }
};

/// p1, p2 in [0, 1].
ParameterRegion default_region();

/// Open context: UAV anywhere, loses link and lands in place with p1, relinks with p2.
PMDP build_open(const GridScenario& s, const ParameterRegion& region = default_region());
/// Rooftop context: UAV confined to rooftops, delivers from a rooftop next to the goal.
PMDP build_rooftop(const GridScenario& s, const ParameterRegion& region = default_region());
/// Dispatches on s.context.
PMDP build_scenario(const GridScenario& s, const ParameterRegion& region = default_region());

CompositeState decode(StateIndex state, const GridScenario& s);
StateIndex encode(const CompositeState& state, const GridScenario& s);

GridScenario scenario_from_json(const nlohmann::json& j);  // throws ParseError / InvalidScenario
nlohmann::json scenario_to_json(const GridScenario& s);

}  // namespace certbench

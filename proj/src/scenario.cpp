#include "certbench/scenario.hpp"

#include "certbench/errors.hpp"

#include <algorithm>
#include <array>
#include <deque>
#include <set>

namespace certbench {

int manhattan(Cell a, Cell b) { return std::abs(a.x - b.x) + std::abs(a.y - b.y); }

std::string to_string(Cell c) { return "(" + std::to_string(c.x) + "," + std::to_string(c.y) + ")"; }

std::string to_string(ContextKind kind) { return kind == ContextKind::Open ? "open" : "rooftop"; }

std::string to_string(FlightMode mode) {
    switch (mode) {
        case FlightMode::Flying: return "flying";
        case FlightMode::Grounded: return "grounded";
        case FlightMode::Delivered: return "delivered";
    }
    return "?";
}

ParameterRegion default_region() { return ParameterRegion{{"p1", Interval{0, 1}}, {"p2", Interval{0, 1}}}; }

namespace {

// Order of the UAV's and the robot's moves; action ids follow it.
constexpr std::array<std::pair<const char*, Cell>, 5> kMoves{{
    {"stay", {0, 0}},
    {"north", {0, 1}},
    {"south", {0, -1}},
    {"east", {1, 0}},
    {"west", {-1, 0}},
}};

Cell shift(Cell c, Cell d) { return {c.x + d.x, c.y + d.y}; }

bool is_rooftop(const GridScenario& s, Cell c) {
    return std::find(s.rooftops.begin(), s.rooftops.end(), c) != s.rooftops.end();
}

}  // namespace

std::optional<std::pair<std::string, std::string>> GridScenario::problem() const {
    using P = std::pair<std::string, std::string>;
    if (width < 1) return P{"width", "must be positive"};
    if (height < 1) return P{"height", "must be positive"};
    if (!in_bounds(uav_start)) return P{"uav_start", to_string(uav_start) + " is out of bounds"};
    if (!in_bounds(robot_start)) return P{"robot_start", to_string(robot_start) + " is out of bounds"};
    if (!in_bounds(goal)) return P{"goal", to_string(goal) + " is out of bounds"};
    if (uav_start == robot_start) return P{"robot_start", "must differ from uav_start"};

    if (context == ContextKind::Open) {
        if (!rooftops.empty()) return P{"rooftops", "only allowed in the rooftop context"};
        if (!rooftop_edges.empty()) return P{"rooftop_edges", "only allowed in the rooftop context"};
        return std::nullopt;
    }

    if (rooftops.empty()) return P{"rooftops", "rooftop context needs at least one rooftop"};
    std::set<Cell> roofs;
    for (Cell r : rooftops) {
        if (!in_bounds(r)) return P{"rooftops", to_string(r) + " is out of bounds"};
        if (!roofs.insert(r).second) return P{"rooftops", to_string(r) + " is listed twice"};
    }
    if (!roofs.count(uav_start)) return P{"uav_start", "must be a rooftop"};
    if (roofs.count(robot_start)) return P{"robot_start", "must be a street cell"};
    if (roofs.count(goal)) return P{"goal", "must be a street cell"};
    bool goal_adjacent = std::any_of(roofs.begin(), roofs.end(), [&](Cell r) { return manhattan(r, goal) == 1; });
    if (!goal_adjacent) return P{"goal", "must be adjacent to a rooftop"};

    std::map<Cell, std::vector<Cell>> adjacency;
    for (const auto& [a, b] : rooftop_edges) {
        if (!roofs.count(a) || !roofs.count(b)) {
            return P{"rooftop_edges", to_string(a) + "-" + to_string(b) + " joins a non-rooftop cell"};
        }
        if (a == b) return P{"rooftop_edges", "self-loop at " + to_string(a)};
        adjacency[a].push_back(b);
        adjacency[b].push_back(a);
    }
    std::set<Cell> seen{*roofs.begin()};
    std::deque<Cell> queue{*roofs.begin()};
    while (!queue.empty()) {
        Cell c = queue.front();
        queue.pop_front();
        for (Cell n : adjacency[c]) {
            if (seen.insert(n).second) queue.push_back(n);
        }
    }
    if (seen.size() != roofs.size()) return P{"rooftop_edges", "rooftop graph is not connected"};
    return std::nullopt;
}

void GridScenario::validate() const {
    if (auto p = problem()) throw InvalidScenario(p->first + ": " + p->second);
}

// ---------------------------------------------------------------------------
// StateCodec

StateCodec::StateCodec(const GridScenario& s) : scenario_(s) {
    scenario_.validate();
    const int cells = s.width * s.height;
    uav_slot_.assign(cells, -1);
    robot_slot_.assign(cells, -1);
    for (int y = 0; y < s.height; ++y) {
        for (int x = 0; x < s.width; ++x) {
            Cell c{x, y};
            bool roof = is_rooftop(s, c);
            if (s.context == ContextKind::Open || roof) {
                uav_slot_[cell_index(c)] = static_cast<int>(uav_cells_.size());
                uav_cells_.push_back(c);
            }
            if (s.context == ContextKind::Open || !roof) {
                robot_slot_[cell_index(c)] = static_cast<int>(robot_cells_.size());
                robot_cells_.push_back(c);
            }
        }
    }
}

std::size_t StateCodec::state_count() const {
    std::size_t base = 2 * uav_cells_.size() * robot_cells_.size();
    return scenario_.context == ContextKind::Open ? base : base + robot_cells_.size();
}

StateIndex StateCodec::encode(const CompositeState& c) const {
    if (!scenario_.in_bounds(c.robot_pos) || robot_slot_[cell_index(c.robot_pos)] < 0) {
        throw InvalidScenario("robot cannot occupy " + to_string(c.robot_pos));
    }
    const auto robot = static_cast<std::size_t>(robot_slot_[cell_index(c.robot_pos)]);
    const std::size_t streets = robot_cells_.size();
    if (c.mode == FlightMode::Delivered) {
        if (scenario_.context == ContextKind::Open) throw InvalidScenario("open context has no delivered mode");
        return static_cast<StateIndex>(2 * uav_cells_.size() * streets + robot);
    }
    if (!scenario_.in_bounds(c.uav_pos) || uav_slot_[cell_index(c.uav_pos)] < 0) {
        throw InvalidScenario("uav cannot occupy " + to_string(c.uav_pos));
    }
    const auto uav = static_cast<std::size_t>(uav_slot_[cell_index(c.uav_pos)]);
    const std::size_t mode = c.mode == FlightMode::Flying ? 0 : 1;
    return static_cast<StateIndex>((uav * 2 + mode) * streets + robot);
}

CompositeState StateCodec::decode(StateIndex s) const {
    if (s >= state_count()) throw Error("state " + std::to_string(s) + " is out of range");
    const std::size_t streets = robot_cells_.size();
    const std::size_t paired = 2 * uav_cells_.size() * streets;
    if (s >= paired) return {scenario_.goal, FlightMode::Delivered, robot_cells_[s - paired]};
    const std::size_t robot = s % streets;
    const std::size_t rest = s / streets;
    return {uav_cells_[rest / 2], rest % 2 == 0 ? FlightMode::Flying : FlightMode::Grounded, robot_cells_[robot]};
}

CompositeState decode(StateIndex state, const GridScenario& s) { return StateCodec(s).decode(state); }

StateIndex encode(const CompositeState& state, const GridScenario& s) { return StateCodec(s).encode(state); }

// ---------------------------------------------------------------------------
// Builders

namespace {

struct Terms {
    PmdpBuilder& builder;
    std::map<std::pair<std::string, int>, ExprIndex> cache;

    // (base) * 1/fanout, where base is one of "p1", "1-p1", "p2", "1-p2", "1".
    ExprIndex get(const std::string& base, int fanout) {
        auto key = std::make_pair(base, fanout);
        if (auto it = cache.find(key); it != cache.end()) return it->second;
        ParamExpr share = ParamExpr::constant(Rational(1, fanout));
        ParamExpr expr = base == "1" ? share : ParamExpr::parse(base);
        if (base != "1" && fanout != 1) expr = ParamExpr::product({expr, share});
        return cache[key] = builder.intern(expr);
    }
};

void require_parameters(const ParameterRegion& region) {
    for (const char* p : {"p1", "p2"}) {
        if (!region.contains(p)) throw InvalidScenario(std::string("parameter region lacks '") + p + "'");
    }
}

/// Robot successors: stay plus cardinal moves onto cells it may occupy.
std::vector<Cell> robot_moves(const GridScenario& s, Cell r) {
    std::vector<Cell> out;
    for (const auto& [_, d] : kMoves) {
        Cell n = shift(r, d);
        if (!s.in_bounds(n)) continue;
        if (s.context == ContextKind::Rooftop && is_rooftop(s, n)) continue;
        out.push_back(n);
    }
    return out;
}

/// Edges for a UAV outcome combined with every robot move.
void spread(std::vector<std::pair<StateIndex, ExprIndex>>& edges, const StateCodec& codec, Terms& terms,
            const std::vector<Cell>& robot_next, Cell uav, FlightMode mode, const std::string& base) {
    const int k = static_cast<int>(robot_next.size());
    for (Cell r : robot_next) edges.emplace_back(codec.encode({uav, mode, r}), terms.get(base, k));
}

void add_labels(PmdpBuilder& builder, const StateCodec& codec, const GridScenario& s) {
    builder.declare_label("crash");
    builder.declare_label("goal");
    for (StateIndex i = 0; i < codec.state_count(); ++i) {
        CompositeState c = codec.decode(i);
        bool crash = c.mode == FlightMode::Grounded && c.uav_pos == c.robot_pos;
        bool goal = c.mode == FlightMode::Delivered || (s.context == ContextKind::Open && c.uav_pos == s.goal);
        if (crash) builder.add_label("crash", i);
        if (goal && !crash) builder.add_label("goal", i);
    }
}

}  // namespace

PMDP build_open(const GridScenario& s, const ParameterRegion& region) {
    s.validate();
    if (s.context != ContextKind::Open) throw InvalidScenario("build_open needs an open-context scenario");
    require_parameters(region);
    StateCodec codec(s);
    PmdpBuilder builder(codec.state_count());
    Terms terms{builder, {}};

    for (StateIndex i = 0; i < codec.state_count(); ++i) {
        CompositeState c = codec.decode(i);
        auto robot_next = robot_moves(s, c.robot_pos);
        if (c.mode == FlightMode::Flying) {
            for (const auto& [name, d] : kMoves) {
                Cell dest = shift(c.uav_pos, d);
                if (!s.in_bounds(dest)) continue;
                std::vector<std::pair<StateIndex, ExprIndex>> edges;
                spread(edges, codec, terms, robot_next, dest, FlightMode::Grounded, "p1");
                spread(edges, codec, terms, robot_next, dest, FlightMode::Flying, "1-p1");
                builder.add_choice(i, name, std::move(edges));
            }
        } else {
            std::vector<std::pair<StateIndex, ExprIndex>> edges;
            spread(edges, codec, terms, robot_next, c.uav_pos, FlightMode::Flying, "p2");
            spread(edges, codec, terms, robot_next, c.uav_pos, FlightMode::Grounded, "1-p2");
            builder.add_choice(i, "wait", std::move(edges));
        }
    }
    add_labels(builder, codec, s);
    builder.set_initial(codec.encode({s.uav_start, FlightMode::Flying, s.robot_start}));
    builder.set_region(region);
    return std::move(builder).build();
}

PMDP build_rooftop(const GridScenario& s, const ParameterRegion& region) {
    s.validate();
    if (s.context != ContextKind::Rooftop) throw InvalidScenario("build_rooftop needs a rooftop-context scenario");
    require_parameters(region);
    StateCodec codec(s);
    PmdpBuilder builder(codec.state_count());
    Terms terms{builder, {}};

    std::map<Cell, std::set<Cell>> links;
    for (const auto& [a, b] : s.rooftop_edges) {
        links[a].insert(b);
        links[b].insert(a);
    }

    for (StateIndex i = 0; i < codec.state_count(); ++i) {
        CompositeState c = codec.decode(i);
        auto robot_next = robot_moves(s, c.robot_pos);
        switch (c.mode) {
            case FlightMode::Flying: {
                std::vector<Cell> destinations{c.uav_pos};
                destinations.insert(destinations.end(), links[c.uav_pos].begin(), links[c.uav_pos].end());
                for (Cell dest : destinations) {
                    std::vector<std::pair<StateIndex, ExprIndex>> edges;
                    spread(edges, codec, terms, robot_next, dest, FlightMode::Grounded, "p1");
                    spread(edges, codec, terms, robot_next, dest, FlightMode::Flying, "1-p1");
                    builder.add_choice(i, dest == c.uav_pos ? "loiter" : "fly" + to_string(dest), std::move(edges));
                }
                if (manhattan(c.uav_pos, s.goal) == 1 && manhattan(c.robot_pos, s.goal) >= 2) {
                    std::vector<std::pair<StateIndex, ExprIndex>> edges;
                    spread(edges, codec, terms, robot_next, s.goal, FlightMode::Delivered, "1");
                    builder.add_choice(i, "deliver", std::move(edges));
                }
                break;
            }
            case FlightMode::Grounded: {
                std::vector<std::pair<StateIndex, ExprIndex>> edges;
                spread(edges, codec, terms, robot_next, c.uav_pos, FlightMode::Flying, "p2");
                spread(edges, codec, terms, robot_next, c.uav_pos, FlightMode::Grounded, "1-p2");
                builder.add_choice(i, "wait", std::move(edges));
                break;
            }
            case FlightMode::Delivered: {
                std::vector<std::pair<StateIndex, ExprIndex>> edges;
                spread(edges, codec, terms, robot_next, s.goal, FlightMode::Delivered, "1");
                builder.add_choice(i, "wait", std::move(edges));
                break;
            }
        }
    }
    add_labels(builder, codec, s);
    builder.set_initial(codec.encode({s.uav_start, FlightMode::Flying, s.robot_start}));
    builder.set_region(region);
    return std::move(builder).build();
}

PMDP build_scenario(const GridScenario& s, const ParameterRegion& region) {
    return s.context == ContextKind::Open ? build_open(s, region) : build_rooftop(s, region);
}

// ---------------------------------------------------------------------------
// JSON

namespace {

Cell cell_from_json(const nlohmann::json& j, const std::string& field) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer()) {
        throw ParseError("field '" + field + "' must be an [x, y] integer pair");
    }
    return {j[0].get<int>(), j[1].get<int>()};
}

nlohmann::json cell_to_json(Cell c) { return nlohmann::json::array({c.x, c.y}); }

}  // namespace

GridScenario scenario_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ParseError("field 'scenario' must be an object");
    GridScenario s;
    std::string kind = j.value("kind", std::string("open"));
    if (kind == "open") {
        s.context = ContextKind::Open;
    } else if (kind == "rooftop") {
        s.context = ContextKind::Rooftop;
    } else {
        throw ParseError("field 'scenario.kind' must be \"open\" or \"rooftop\", got \"" + kind + "\"");
    }
    for (const char* key : {"width", "height"}) {
        if (!j.contains(key) || !j[key].is_number_integer()) {
            throw ParseError(std::string("field 'scenario.") + key + "' must be an integer");
        }
    }
    s.width = j["width"].get<int>();
    s.height = j["height"].get<int>();
    for (const char* key : {"uav_start", "robot_start", "goal"}) {
        if (!j.contains(key)) throw ParseError(std::string("field 'scenario.") + key + "' is required");
    }
    s.uav_start = cell_from_json(j["uav_start"], "scenario.uav_start");
    s.robot_start = cell_from_json(j["robot_start"], "scenario.robot_start");
    s.goal = cell_from_json(j["goal"], "scenario.goal");
    if (j.contains("rooftops")) {
        for (const auto& c : j["rooftops"]) s.rooftops.push_back(cell_from_json(c, "scenario.rooftops"));
    }
    if (j.contains("rooftop_edges")) {
        for (const auto& e : j["rooftop_edges"]) {
            if (!e.is_array() || e.size() != 2) throw ParseError("field 'scenario.rooftop_edges' holds [[x,y],[x,y]] pairs");
            s.rooftop_edges.emplace_back(cell_from_json(e[0], "scenario.rooftop_edges"),
                                         cell_from_json(e[1], "scenario.rooftop_edges"));
        }
    }
    return s;
}

nlohmann::json scenario_to_json(const GridScenario& s) {
    nlohmann::json j{{"kind", to_string(s.context)},
                     {"width", s.width},
                     {"height", s.height},
                     {"uav_start", cell_to_json(s.uav_start)},
                     {"robot_start", cell_to_json(s.robot_start)},
                     {"goal", cell_to_json(s.goal)}};
    if (s.context == ContextKind::Rooftop) {
        auto roofs = nlohmann::json::array();
        for (Cell c : s.rooftops) roofs.push_back(cell_to_json(c));
        auto edges = nlohmann::json::array();
        for (const auto& [a, b] : s.rooftop_edges) edges.push_back({cell_to_json(a), cell_to_json(b)});
        j["rooftops"] = roofs;
        j["rooftop_edges"] = edges;
    }
    return j;
}

}  // namespace certbench

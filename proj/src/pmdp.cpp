#include "certbench/pmdp.hpp"

#include "certbench/errors.hpp"

#include <algorithm>
#include <ostream>
#include <set>
#include <type_traits>

namespace certbench {

// ---------------------------------------------------------------------------
// StateSet

std::size_t StateSet::count() const { return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), true)); }

std::vector<StateIndex> StateSet::members() const {
    std::vector<StateIndex> out;
    for (std::size_t i = 0; i < bits_.size(); ++i) {
        if (bits_[i]) out.push_back(static_cast<StateIndex>(i));
    }
    return out;
}

StateSet StateSet::complement() const {
    StateSet out = *this;
    out.bits_.flip();
    return out;
}

StateSet StateSet::operator&(const StateSet& other) const {
    StateSet out(size());
    for (std::size_t i = 0; i < bits_.size(); ++i) out.bits_[i] = bits_[i] && other.bits_[i];
    return out;
}

StateSet StateSet::operator|(const StateSet& other) const {
    StateSet out(size());
    for (std::size_t i = 0; i < bits_.size(); ++i) out.bits_[i] = bits_[i] || other.bits_[i];
    return out;
}

// ---------------------------------------------------------------------------
// PMDP

PMDP::PMDP(std::vector<ParamExpr> expressions, std::vector<std::vector<ParametricChoice>> enabled, StateIndex initial,
           std::map<std::string, std::vector<StateIndex>> labels, ParameterRegion region)
    : expressions_(std::move(expressions)),
      enabled_(std::move(enabled)),
      initial_(initial),
      labels_(std::move(labels)),
      region_(std::move(region)) {
    for (auto& [_, states] : labels_) {
        std::sort(states.begin(), states.end());
        states.erase(std::unique(states.begin(), states.end()), states.end());
    }
}

const std::vector<StateIndex>& PMDP::label(const std::string& name) const {
    auto it = labels_.find(name);
    if (it == labels_.end()) throw UnknownLabel(name);
    return it->second;
}

std::size_t PMDP::choice_count() const {
    std::size_t n = 0;
    for (const auto& choices : enabled_) n += choices.size();
    return n;
}

std::size_t PMDP::edge_count() const {
    std::size_t n = 0;
    for (const auto& choices : enabled_) {
        for (const auto& c : choices) n += c.edges.size();
    }
    return n;
}

PmdpBuilder::PmdpBuilder(std::size_t state_count) : enabled_(state_count) {}

ExprIndex PmdpBuilder::intern(const ParamExpr& expr) {
    auto key = expr.to_string();
    auto [it, inserted] = interned_.emplace(key, static_cast<ExprIndex>(expressions_.size()));
    if (inserted) expressions_.push_back(expr);
    return it->second;
}

void PmdpBuilder::add_choice(StateIndex state, std::string action,
                             std::vector<std::pair<StateIndex, ExprIndex>> edges) {
    std::map<StateIndex, std::vector<ExprIndex>> by_target;
    std::vector<StateIndex> order;
    for (const auto& [target, expr] : edges) {
        auto& slot = by_target[target];
        if (slot.empty()) order.push_back(target);
        slot.push_back(expr);
    }
    ParametricChoice choice{std::move(action), {}};
    for (StateIndex target : order) {
        const auto& exprs = by_target[target];
        if (exprs.size() == 1) {
            choice.edges.push_back({target, exprs.front()});
        } else {
            std::vector<ParamExpr> terms;
            for (ExprIndex e : exprs) terms.push_back(expressions_[e]);
            choice.edges.push_back({target, intern(ParamExpr::sum(std::move(terms)))});
        }
    }
    enabled_.at(state).push_back(std::move(choice));
}

PMDP PmdpBuilder::build() && {
    return PMDP(std::move(expressions_), std::move(enabled_), initial_, std::move(labels_), std::move(region_));
}

// ---------------------------------------------------------------------------
// Validation

std::string to_string(Finding::Kind kind) {
    switch (kind) {
        case Finding::Kind::StateOutOfRange: return "StateOutOfRange";
        case Finding::Kind::InitialOutOfRange: return "InitialOutOfRange";
        case Finding::Kind::Deadlock: return "Deadlock";
        case Finding::Kind::DuplicateTarget: return "DuplicateTarget";
        case Finding::Kind::NotMultiAffine: return "NotMultiAffine";
        case Finding::Kind::NonUnitSum: return "NonUnitSum";
        case Finding::Kind::NegativeAtCorner: return "NegativeAtCorner";
        case Finding::Kind::MissingGoalLabel: return "MissingGoalLabel";
        case Finding::Kind::LabelOverlap: return "LabelOverlap";
        case Finding::Kind::UnboundParameter: return "UnboundParameter";
    }
    return "?";
}

ValidationReport validate(const PMDP& m) {
    ValidationReport report;
    const auto n = m.state_count();

    if (m.initial() >= n) report.push_back({Finding::Kind::InitialOutOfRange, m.initial(), "initial state out of range"});

    std::set<ParameterId> unbound;
    for (const auto& expr : m.expressions()) {
        for (const auto& p : expr.parameters()) {
            if (!m.region().contains(p)) unbound.insert(p);
        }
    }
    for (const auto& p : unbound) report.push_back({Finding::Kind::UnboundParameter, 0, "parameter '" + p + "' has no interval"});

    // Rows are checked once per distinct expression tuple.
    std::map<std::vector<ExprIndex>, WellFormedness> row_cache;
    for (StateIndex s = 0; s < n; ++s) {
        auto choices = m.choices(s);
        if (choices.empty()) report.push_back({Finding::Kind::Deadlock, s, "no enabled action"});
        for (std::size_t a = 0; a < choices.size(); ++a) {
            const auto& choice = choices[a];
            std::set<StateIndex> seen;
            std::vector<ExprIndex> row;
            bool in_range = true;
            for (const auto& edge : choice.edges) {
                if (edge.target >= n) {
                    report.push_back({Finding::Kind::StateOutOfRange, s,
                                      "action " + std::to_string(a) + " targets " + std::to_string(edge.target)});
                    in_range = false;
                }
                if (!seen.insert(edge.target).second) {
                    report.push_back({Finding::Kind::DuplicateTarget, s,
                                      "action " + std::to_string(a) + " repeats target " + std::to_string(edge.target)});
                }
                row.push_back(edge.expr);
            }
            if (!in_range || !unbound.empty()) continue;
            auto it = row_cache.find(row);
            if (it == row_cache.end()) {
                std::vector<ParamExpr> exprs;
                for (ExprIndex e : row) exprs.push_back(m.expression(e));
                it = row_cache.emplace(row, check_distribution_row(exprs, m.region())).first;
            }
            const auto& wf = it->second;
            if (wf.ok()) continue;
            Finding::Kind kind = wf.status == WellFormedness::Status::NotMultiAffine ? Finding::Kind::NotMultiAffine
                                 : wf.status == WellFormedness::Status::NonUnitSum  ? Finding::Kind::NonUnitSum
                                                                                     : Finding::Kind::NegativeAtCorner;
            report.push_back({kind, s, "action " + std::to_string(a) + ": " + wf.describe()});
        }
    }

    for (const auto& [name, states] : m.labels()) {
        for (StateIndex s : states) {
            if (s >= n) report.push_back({Finding::Kind::StateOutOfRange, s, "label '" + name + "' out of range"});
        }
    }
    if (!m.has_label("goal")) {
        report.push_back({Finding::Kind::MissingGoalLabel, 0, "no 'goal' label"});
    } else if (m.has_label("crash")) {
        const auto& goal = m.label("goal");
        for (StateIndex s : m.label("crash")) {
            if (std::binary_search(goal.begin(), goal.end(), s)) {
                report.push_back({Finding::Kind::LabelOverlap, s, "state is labeled both crash and goal"});
            }
        }
    }
    return report;
}

// ---------------------------------------------------------------------------
// Instantiation

ConcreteMDP::ConcreteMDP(std::vector<std::size_t> choice_start, std::vector<std::size_t> edge_start,
                         std::vector<Edge> edges, std::vector<std::string> action_names, StateIndex initial,
                         std::map<std::string, StateSet> labels)
    : choice_start_(std::move(choice_start)),
      edge_start_(std::move(edge_start)),
      edges_(std::move(edges)),
      action_names_(std::move(action_names)),
      initial_(initial),
      labels_(std::move(labels)) {}

const StateSet& ConcreteMDP::label(const std::string& name) const {
    auto it = labels_.find(name);
    if (it == labels_.end()) throw UnknownLabel(name);
    return it->second;
}

ConcreteMDP instantiate(const PMDP& m, const Valuation& v) {
    for (const auto& p : m.parameters()) {
        if (!v.contains(p)) throw MissingParameter(p);
    }
    if (!m.region().contains(v)) {
        throw ValuationOutOfRegion("valuation " + v.to_string() + " lies outside " + m.region().to_string());
    }

    std::vector<double> weights;
    weights.reserve(m.expressions().size());
    for (const auto& expr : m.expressions()) weights.push_back(to_double(evaluate(expr, v)));

    const auto n = m.state_count();
    std::vector<std::size_t> choice_start{0};
    std::vector<std::size_t> edge_start{0};
    std::vector<Edge> edges;
    std::vector<std::string> names;
    choice_start.reserve(n + 1);
    edges.reserve(m.edge_count());
    for (StateIndex s = 0; s < n; ++s) {
        for (const auto& choice : m.choices(s)) {
            for (const auto& edge : choice.edges) {
                double p = weights[edge.expr];
                if (p != 0.0) edges.push_back({edge.target, p});
            }
            edge_start.push_back(edges.size());
            names.push_back(choice.action);
        }
        choice_start.push_back(names.size());
    }

    std::map<std::string, StateSet> labels;
    for (const auto& [name, states] : m.labels()) {
        StateSet set(n);
        for (StateIndex s : states) set.insert(s);
        labels.emplace(name, std::move(set));
    }
    return ConcreteMDP(std::move(choice_start), std::move(edge_start), std::move(edges), std::move(names), m.initial(),
                       std::move(labels));
}

// ---------------------------------------------------------------------------
// Dumps

namespace {

template <typename Model>
void write_labels(std::ostream& out, const Model& m) {
    out << "#labels\n";
    for (const auto& [name, states] : m.labels()) {
        out << name << ':';
        if constexpr (std::is_same_v<Model, PMDP>) {
            for (StateIndex s : states) out << ' ' << s;
        } else {
            for (StateIndex s : states.members()) out << ' ' << s;
        }
        out << '\n';
    }
}

}  // namespace

void write_model(std::ostream& out, const PMDP& m) {
    out << "#states " << m.state_count() << "\n#initial " << m.initial() << "\n#parameters";
    for (const auto& p : m.parameters()) out << ' ' << p;
    out << "\n#transitions\n";
    for (StateIndex s = 0; s < m.state_count(); ++s) {
        auto choices = m.choices(s);
        for (ActionIndex a = 0; a < choices.size(); ++a) {
            for (const auto& edge : choices[a].edges) {
                out << s << ' ' << a << ' ' << edge.target << ' ' << m.expression(edge.expr).to_string() << '\n';
            }
        }
    }
    write_labels(out, m);
}

void write_model(std::ostream& out, const ConcreteMDP& m) {
    out << "#states " << m.state_count() << "\n#initial " << m.initial() << "\n#transitions\n";
    for (StateIndex s = 0; s < m.state_count(); ++s) {
        for (ActionIndex a = 0; a < m.action_count(s); ++a) {
            for (const auto& edge : m.edges(s, a)) {
                out << s << ' ' << a << ' ' << edge.target << ' ' << format_double(edge.probability) << '\n';
            }
        }
    }
    write_labels(out, m);
}

}  // namespace certbench

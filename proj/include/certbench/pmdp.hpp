#pragma once

#include "certbench/param_expr.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace certbench {

using StateIndex = std::uint32_t;
using ActionIndex = std::uint32_t;
using ExprIndex = std::uint32_t;

/// Dense membership set over [0, size).
class StateSet {
public:
    StateSet() = default;
    explicit StateSet(std::size_t size) : bits_(size, false) {}

    std::size_t size() const { return bits_.size(); }
    bool contains(StateIndex s) const { return bits_[s]; }
    void insert(StateIndex s) { bits_[s] = true; }
    void erase(StateIndex s) { bits_[s] = false; }
    std::size_t count() const;
    bool empty() const { return count() == 0; }
    std::vector<StateIndex> members() const;

    StateSet complement() const;
    StateSet operator&(const StateSet& other) const;
    StateSet operator|(const StateSet& other) const;
    bool operator==(const StateSet&) const = default;

private:
    std::vector<bool> bits_;
};

struct ParametricEdge {
    StateIndex target;
    ExprIndex expr;  // index into PMDP::expressions()
    bool operator==(const ParametricEdge&) const = default;
};

/// One enabled action: a named parametric distribution over successors.
struct ParametricChoice {
    std::string action;
    std::vector<ParametricEdge> edges;
    bool operator==(const ParametricChoice&) const = default;
};

/// Parametric MDP. Transition terms live in a deduplicated expression pool so
/// instantiation evaluates each distinct term once per valuation.
class PMDP {
public:
    PMDP() = default;
    PMDP(std::vector<ParamExpr> expressions, std::vector<std::vector<ParametricChoice>> enabled,
         StateIndex initial, std::map<std::string, std::vector<StateIndex>> labels, ParameterRegion region);

    std::size_t state_count() const { return enabled_.size(); }
    StateIndex initial() const { return initial_; }
    std::span<const ParamExpr> expressions() const { return expressions_; }
    const ParamExpr& expression(ExprIndex i) const { return expressions_.at(i); }
    std::span<const ParametricChoice> choices(StateIndex s) const { return enabled_.at(s); }
    const std::map<std::string, std::vector<StateIndex>>& labels() const { return labels_; }
    bool has_label(const std::string& name) const { return labels_.count(name) != 0; }
    const std::vector<StateIndex>& label(const std::string& name) const;  // throws UnknownLabel
    std::vector<ParameterId> parameters() const { return region_.parameters(); }
    const ParameterRegion& region() const { return region_; }
    std::size_t choice_count() const;
    std::size_t edge_count() const;

private:
    std::vector<ParamExpr> expressions_;
    std::vector<std::vector<ParametricChoice>> enabled_;
    StateIndex initial_ = 0;
    std::map<std::string, std::vector<StateIndex>> labels_;
    ParameterRegion region_;
};

/// Incremental PMDP construction with expression interning.
class PmdpBuilder {
public:
    explicit PmdpBuilder(std::size_t state_count);

    ExprIndex intern(const ParamExpr& expr);
    /// Adds an action to `state`; edges sharing a target are merged into one Sum term.
    void add_choice(StateIndex state, std::string action, std::vector<std::pair<StateIndex, ExprIndex>> edges);
    void set_initial(StateIndex s) { initial_ = s; }
    void add_label(const std::string& name, StateIndex s) { labels_[name].push_back(s); }
    void declare_label(const std::string& name) { labels_[name]; }
    void set_region(ParameterRegion region) { region_ = std::move(region); }

    PMDP build() &&;

private:
    std::vector<ParamExpr> expressions_;
    std::map<std::string, ExprIndex> interned_;
    std::vector<std::vector<ParametricChoice>> enabled_;
    StateIndex initial_ = 0;
    std::map<std::string, std::vector<StateIndex>> labels_;
    ParameterRegion region_;
};

struct Finding {
    enum class Kind {
        StateOutOfRange,
        InitialOutOfRange,
        Deadlock,
        DuplicateTarget,
        NotMultiAffine,
        NonUnitSum,
        NegativeAtCorner,
        MissingGoalLabel,
        LabelOverlap,
        UnboundParameter,
    };
    Kind kind;
    StateIndex state = 0;
    std::string detail;
};

using ValidationReport = std::vector<Finding>;

std::string to_string(Finding::Kind kind);

/// Lists every violated structural or probabilistic invariant. Empty = valid.
ValidationReport validate(const PMDP& m);

struct Edge {
    StateIndex target;
    double probability;
    bool operator==(const Edge&) const = default;
};

/// Concrete MDP in compressed sparse row form: state -> choices -> edges.
class ConcreteMDP {
public:
    ConcreteMDP() = default;
    ConcreteMDP(std::vector<std::size_t> choice_start, std::vector<std::size_t> edge_start, std::vector<Edge> edges,
                std::vector<std::string> action_names, StateIndex initial, std::map<std::string, StateSet> labels);

    std::size_t state_count() const { return choice_start_.empty() ? 0 : choice_start_.size() - 1; }
    std::size_t action_count(StateIndex s) const { return choice_start_[s + 1] - choice_start_[s]; }
    std::span<const Edge> edges(StateIndex s, ActionIndex a) const {
        std::size_t c = choice_start_[s] + a;
        return {edges_.data() + edge_start_[c], edges_.data() + edge_start_[c + 1]};
    }
    const std::string& action_name(StateIndex s, ActionIndex a) const { return action_names_[choice_start_[s] + a]; }
    StateIndex initial() const { return initial_; }
    const StateSet& label(const std::string& name) const;  // throws UnknownLabel
    const std::map<std::string, StateSet>& labels() const { return labels_; }
    std::size_t edge_count() const { return edges_.size(); }

    bool operator==(const ConcreteMDP&) const = default;

private:
    std::vector<std::size_t> choice_start_;
    std::vector<std::size_t> edge_start_;
    std::vector<Edge> edges_;
    std::vector<std::string> action_names_;
    StateIndex initial_ = 0;
    std::map<std::string, StateSet> labels_;
};

/// Substitutes `v` into every transition term; zero-probability edges are dropped.
/// Throws MissingParameter or ValuationOutOfRegion.
ConcreteMDP instantiate(const PMDP& m, const Valuation& v);

/// Explicit-state text dump: `state action target prob-or-expr` lines and a `#labels` section.
void write_model(std::ostream& out, const PMDP& m);
void write_model(std::ostream& out, const ConcreteMDP& m);

}  // namespace certbench

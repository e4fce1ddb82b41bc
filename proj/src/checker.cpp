#include "certbench/checker.hpp"

#include "certbench/errors.hpp"

#include <algorithm>
#include <deque>
#include <istream>
#include <ostream>
#include <queue>
#include <random>
#include <tuple>
#include <sstream>

namespace certbench {

void SolverConfig::validate() const {
    if (!(epsilon > 0.0)) throw Error("solver epsilon must be positive");
    if (max_iterations < 1) throw Error("solver max_iterations must be at least 1");
}

namespace {

struct Predecessor {
    StateIndex state;
    ActionIndex action;
};

/// Reverse adjacency over positive-probability edges, sorted by (state, action).
std::vector<std::vector<Predecessor>> predecessors(const ConcreteMDP& m) {
    std::vector<std::vector<Predecessor>> preds(m.state_count());
    for (StateIndex s = 0; s < m.state_count(); ++s) {
        for (ActionIndex a = 0; a < m.action_count(s); ++a) {
            for (const auto& e : m.edges(s, a)) {
                auto& list = preds[e.target];
                if (list.empty() || list.back().state != s || list.back().action != a) list.push_back({s, a});
            }
        }
    }
    return preds;
}

/// Avoid-states that do not also satisfy reach: runs entering them fail.
StateSet blocked_states(const ConcreteMDP& m, const UntilProperty& prop) {
    return m.label(prop.avoid) & m.label(prop.reach).complement();
}

struct Prob1Result {
    StateSet states;
    std::vector<ActionIndex> strategy;  // meaningful on states \ reach
};

Prob1Result compute_prob1(const ConcreteMDP& m, const UntilProperty& prop, const StateSet& prob0,
                          const std::vector<std::vector<Predecessor>>& preds) {
    const auto n = m.state_count();
    const StateSet& reach = m.label(prop.reach);
    const StateSet blocked = blocked_states(m, prop);

    StateSet candidates = prob0.complement();
    std::vector<ActionIndex> strategy(n, 0);
    for (;;) {
        // Choices whose whole support stays inside the candidate set.
        std::vector<std::vector<bool>> stays(n);
        for (StateIndex s = 0; s < n; ++s) {
            if (!candidates.contains(s)) continue;
            stays[s].resize(m.action_count(s));
            for (ActionIndex a = 0; a < m.action_count(s); ++a) {
                const auto edges = m.edges(s, a);
                stays[s][a] = std::all_of(edges.begin(), edges.end(),
                                          [&](const Edge& e) { return candidates.contains(e.target); });
            }
        }

        StateSet attracted(n);
        std::deque<StateIndex> queue;
        for (StateIndex s : (reach & candidates).members()) {
            attracted.insert(s);
            queue.push_back(s);
        }
        while (!queue.empty()) {
            StateIndex t = queue.front();
            queue.pop_front();
            for (const auto& [s, a] : preds[t]) {
                if (attracted.contains(s) || !candidates.contains(s) || blocked.contains(s) || !stays[s][a]) continue;
                attracted.insert(s);
                strategy[s] = a;
                queue.push_back(s);
            }
        }
        if (attracted == candidates) return {std::move(candidates), std::move(strategy)};
        candidates = std::move(attracted);
    }
}

StateSet compute_prob0(const ConcreteMDP& m, const UntilProperty& prop,
                       const std::vector<std::vector<Predecessor>>& preds) {
    const StateSet& reach = m.label(prop.reach);
    const StateSet blocked = blocked_states(m, prop);
    StateSet can_reach = reach;
    std::deque<StateIndex> queue;
    for (StateIndex s : reach.members()) queue.push_back(s);
    while (!queue.empty()) {
        StateIndex t = queue.front();
        queue.pop_front();
        for (const auto& pred : preds[t]) {
            if (can_reach.contains(pred.state) || blocked.contains(pred.state)) continue;
            can_reach.insert(pred.state);
            queue.push_back(pred.state);
        }
    }
    return can_reach.complement();
}

void check_labels(const ConcreteMDP& m, const UntilProperty& prop) {
    (void)m.label(prop.avoid);
    (void)m.label(prop.reach);
}

double expectation(std::span<const Edge> edges, const std::vector<double>& x) {
    double acc = 0.0;
    for (const auto& e : edges) acc += e.probability * x[e.target];
    return acc;
}

/// Argmax with ties can settle on a choice that circulates among maybe-states
/// forever (a loop worth exactly as much as leaving it). Such states are
/// re-pointed, smallest value gap first, at a choice that leads toward prob1.
/// Stops once the last change is below epsilon and the geometric tail it
/// implies, change * rho / (1 - rho), is too. rho is the worst successive
/// change ratio over a short window.
class StoppingRule {
public:
    explicit StoppingRule(double epsilon) : epsilon_(epsilon) {}

    bool done(double change) {
        recent_.push_back(change);
        if (recent_.size() > kWindow + 1) recent_.pop_front();
        if (change == 0.0) return true;
        if (change >= epsilon_ || recent_.size() < 3) return false;
        double rho = 0.0;
        for (std::size_t i = 1; i < recent_.size(); ++i) {
            if (recent_[i - 1] == 0.0) return false;
            rho = std::max(rho, recent_[i] / recent_[i - 1]);
        }
        return rho < 1.0 && change * rho / (1.0 - rho) < epsilon_;
    }

private:
    static constexpr std::size_t kWindow = 8;
    double epsilon_;
    std::deque<double> recent_;
};

void repair_traps(const ConcreteMDP& m, const std::vector<std::vector<Predecessor>>& preds, const StateSet& prob1,
                  const std::vector<StateIndex>& maybe, const std::vector<double>& x, Policy& policy) {
    StateSet is_maybe(m.state_count());
    for (StateIndex s : maybe) is_maybe.insert(s);

    StateSet anchored = prob1;
    std::deque<StateIndex> queue;
    for (StateIndex s : prob1.members()) queue.push_back(s);

    using Candidate = std::tuple<double, StateIndex, ActionIndex>;
    std::priority_queue<Candidate, std::vector<Candidate>, std::greater<>> open;
    bool offering = false;
    auto offer = [&](StateIndex t) {
        for (const auto& [s, a] : preds[t]) {
            if (!is_maybe.contains(s) || anchored.contains(s)) continue;
            double best = 0.0;
            for (ActionIndex b = 0; b < m.action_count(s); ++b) best = std::max(best, expectation(m.edges(s, b), x));
            open.emplace(best - expectation(m.edges(s, a), x), s, a);
        }
    };
    auto follow = [&] {
        while (!queue.empty()) {
            StateIndex t = queue.front();
            queue.pop_front();
            if (offering) offer(t);
            for (const auto& [s, a] : preds[t]) {
                if (!is_maybe.contains(s) || anchored.contains(s) || policy.at(s) != a) continue;
                anchored.insert(s);
                queue.push_back(s);
            }
        }
    };
    follow();
    if (std::all_of(maybe.begin(), maybe.end(), [&](StateIndex s) { return anchored.contains(s); })) return;

    offering = true;
    for (StateIndex t : anchored.members()) offer(t);
    while (!open.empty()) {
        auto [gap, s, a] = open.top();
        open.pop();
        if (anchored.contains(s)) continue;
        policy.set(s, a);
        anchored.insert(s);
        queue.push_back(s);
        follow();
    }
}

}  // namespace

StateSet prob0_max(const ConcreteMDP& m, const UntilProperty& prop) {
    check_labels(m, prop);
    return compute_prob0(m, prop, predecessors(m));
}

StateSet prob1_max(const ConcreteMDP& m, const UntilProperty& prop) {
    check_labels(m, prop);
    auto preds = predecessors(m);
    return compute_prob1(m, prop, compute_prob0(m, prop, preds), preds).states;
}

CheckResult max_until(const ConcreteMDP& m, const UntilProperty& prop, const SolverConfig& cfg) {
    cfg.validate();
    check_labels(m, prop);
    const auto n = m.state_count();
    const auto preds = predecessors(m);
    const StateSet prob0 = compute_prob0(m, prop, preds);
    const Prob1Result prob1 = compute_prob1(m, prop, prob0, preds);
    const StateSet& reach = m.label(prop.reach);

    std::vector<StateIndex> maybe;
    std::vector<double> x(n, 0.0);
    for (StateIndex s = 0; s < n; ++s) {
        if (prob1.states.contains(s)) {
            x[s] = 1.0;
        } else if (!prob0.contains(s)) {
            maybe.push_back(s);
        }
    }

    CheckResult result;
    std::vector<double> next = x;
    StoppingRule stop(cfg.epsilon);
    while (!maybe.empty()) {
        if (result.iterations >= cfg.max_iterations) throw NonConvergence(result.iterations);
        double change = 0.0;
        for (StateIndex s : maybe) {
            double best = 0.0;
            for (ActionIndex a = 0; a < m.action_count(s); ++a) best = std::max(best, expectation(m.edges(s, a), x));
            double delta = best - x[s];
            // Iterates from the 0/1 initialisation can only increase.
            if (delta < 0.0) throw std::logic_error("value iteration lost monotonicity");
            change = std::max(change, delta);
            next[s] = best;
        }
        std::swap(x, next);
        ++result.iterations;
        result.residual = change;
        if (stop.done(change)) break;
    }

    result.policy = Policy(n);
    for (StateIndex s = 0; s < n; ++s) {
        if (m.action_count(s) == 0) continue;
        if (prob1.states.contains(s) && !reach.contains(s)) {
            result.policy.set(s, prob1.strategy[s]);
        } else if (prob0.contains(s) || reach.contains(s)) {
            result.policy.set(s, 0);
        } else {
            ActionIndex best_action = 0;
            double best = -1.0;
            for (ActionIndex a = 0; a < m.action_count(s); ++a) {
                double q = expectation(m.edges(s, a), x);
                if (q > best) {
                    best = q;
                    best_action = a;
                }
            }
            result.policy.set(s, best_action);
        }
    }
    repair_traps(m, preds, prob1.states, maybe, x, result.policy);
    result.values = std::move(x);
    result.value_at_initial = result.values[m.initial()];
    return result;
}

double evaluate_policy(const ConcreteMDP& m, const Policy& pol, const UntilProperty& prop, const SolverConfig& cfg) {
    cfg.validate();
    check_labels(m, prop);
    const auto n = m.state_count();
    if (pol.state_count() != n) {
        throw PolicyIncomplete("policy covers " + std::to_string(pol.state_count()) + " states, model has " +
                               std::to_string(n));
    }
    const StateSet& reach = m.label(prop.reach);
    const StateSet prob0 = prob0_max(m, prop);

    // The induced chain over states whose value is not already fixed.
    std::vector<std::span<const Edge>> row(n);
    StateSet open(n);
    for (StateIndex s = 0; s < n; ++s) {
        if (prob0.contains(s) || reach.contains(s)) continue;
        auto a = pol.at(s);
        if (!a || *a >= m.action_count(s)) {
            throw PolicyIncomplete("policy has no valid action for state " + std::to_string(s));
        }
        row[s] = m.edges(s, *a);
        open.insert(s);
    }

    std::vector<std::vector<StateIndex>> chain_preds(n);
    for (StateIndex s : open.members()) {
        for (const auto& e : row[s]) chain_preds[e.target].push_back(s);
    }
    auto backward = [&](StateSet seed, const StateSet& through) {
        std::deque<StateIndex> queue;
        for (StateIndex s : seed.members()) queue.push_back(s);
        while (!queue.empty()) {
            StateIndex t = queue.front();
            queue.pop_front();
            for (StateIndex s : chain_preds[t]) {
                if (seed.contains(s) || !through.contains(s)) continue;
                seed.insert(s);
                queue.push_back(s);
            }
        }
        return seed;
    };
    const StateSet can_reach = backward(reach, open);
    const StateSet zero = can_reach.complement();
    const StateSet can_fail = backward(zero, open & reach.complement());
    const StateSet one = can_fail.complement();

    std::vector<double> x(n, 0.0);
    std::vector<StateIndex> maybe;
    for (StateIndex s = 0; s < n; ++s) {
        if (one.contains(s)) {
            x[s] = 1.0;
        } else if (!zero.contains(s)) {
            maybe.push_back(s);
        }
    }
    std::vector<double> next = x;
    std::uint64_t iterations = 0;
    StoppingRule stop(cfg.epsilon);
    while (!maybe.empty()) {
        if (iterations >= cfg.max_iterations) throw NonConvergence(iterations);
        double change = 0.0;
        for (StateIndex s : maybe) {
            double v = expectation(row[s], x);
            change = std::max(change, v - x[s]);
            next[s] = v;
        }
        std::swap(x, next);
        ++iterations;
        if (stop.done(change)) break;
    }
    return x[m.initial()];
}

double simulate(const ConcreteMDP& m, const Policy& pol, const UntilProperty& prop, const SimulationConfig& sim) {
    if (sim.episodes < 1) throw Error("simulation needs at least one episode");
    if (sim.horizon < 1) throw Error("simulation horizon must be at least 1");
    const StateSet& reach = m.label(prop.reach);
    const StateSet& avoid = m.label(prop.avoid);
    if (pol.state_count() != m.state_count()) throw PolicyIncomplete("policy does not match the model's state space");

    std::mt19937_64 rng(sim.seed);
    auto uniform = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };

    std::uint64_t successes = 0;
    for (std::uint64_t episode = 0; episode < sim.episodes; ++episode) {
        StateIndex s = m.initial();
        for (std::uint64_t step = 0;; ++step) {
            if (reach.contains(s)) {
                ++successes;
                break;
            }
            if (avoid.contains(s) || step == sim.horizon) break;
            auto a = pol.at(s);
            if (!a || *a >= m.action_count(s)) {
                throw PolicyIncomplete("policy has no valid action for state " + std::to_string(s));
            }
            const auto edges = m.edges(s, *a);
            double u = uniform();
            StateIndex next = edges.back().target;
            for (const auto& e : edges) {
                if (u < e.probability) {
                    next = e.target;
                    break;
                }
                u -= e.probability;
            }
            s = next;
        }
    }
    return static_cast<double>(successes) / static_cast<double>(sim.episodes);
}

void write_policy(std::ostream& out, const Policy& pol, const std::vector<std::string>& header) {
    out << "#policy states=" << pol.state_count() << '\n';
    for (const auto& line : header) out << "# " << line << '\n';
    for (StateIndex s = 0; s < pol.state_count(); ++s) {
        if (auto a = pol.at(s)) out << s << ' ' << *a << '\n';
    }
}

Policy read_policy(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line.rfind("#policy states=", 0) != 0) {
        throw Error("policy file must start with '#policy states=N'");
    }
    std::size_t n = 0;
    try {
        n = std::stoull(line.substr(15));
    } catch (const std::exception&) {
        throw Error("bad policy header '" + line + "'");
    }
    Policy pol(n);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line.front() == '#') continue;
        std::istringstream fields(line);
        long long s = -1, a = -1;
        std::string rest;
        if (!(fields >> s >> a) || (fields >> rest) || s < 0 || a < 0 || static_cast<std::size_t>(s) >= n) {
            throw Error("bad policy line " + std::to_string(line_no) + ": '" + line + "'");
        }
        pol.set(static_cast<StateIndex>(s), static_cast<ActionIndex>(a));
    }
    return pol;
}

}  // namespace certbench

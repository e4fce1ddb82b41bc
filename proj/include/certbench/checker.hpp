#pragma once

#include "certbench/pmdp.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace certbench {

/// Strong until: never visit `avoid` before reaching `reach`.
struct UntilProperty {
    std::string avoid = "crash";
    std::string reach = "goal";
    std::string to_string() const { return "!" + avoid + " U " + reach; }
    bool operator==(const UntilProperty&) const = default;
};

struct SolverConfig {
    double epsilon = 1e-6;  // target accuracy of the computed values
    std::uint64_t max_iterations = 1'000'000;
    void validate() const;
    bool operator==(const SolverConfig&) const = default;
};

/// Memoryless deterministic policy; states without a choice are left unset.
class Policy {
public:
    Policy() = default;
    explicit Policy(std::size_t state_count) : choice_(state_count) {}

    std::size_t state_count() const { return choice_.size(); }
    void set(StateIndex s, ActionIndex a) { choice_.at(s) = a; }
    std::optional<ActionIndex> at(StateIndex s) const { return choice_.at(s); }
    bool operator==(const Policy&) const = default;

private:
    std::vector<std::optional<ActionIndex>> choice_;
};

struct CheckResult {
    double value_at_initial = 0.0;
    std::vector<double> values;
    Policy policy;
    std::uint64_t iterations = 0;
    double residual = 0.0;
};

/// States from which no policy satisfies the property with positive probability.
StateSet prob0_max(const ConcreteMDP& m, const UntilProperty& prop);

/// States from which some policy satisfies the property with probability 1.
StateSet prob1_max(const ConcreteMDP& m, const UntilProperty& prop);

/// Maximal satisfaction probability by value iteration from below, with the
/// prob0/prob1 sets pinned to 0/1. Throws NonConvergence.
CheckResult max_until(const ConcreteMDP& m, const UntilProperty& prop, const SolverConfig& cfg = {});

/// Satisfaction probability at the initial state of the chain induced by `pol`.
/// Throws PolicyIncomplete or NonConvergence.
double evaluate_policy(const ConcreteMDP& m, const Policy& pol, const UntilProperty& prop,
                       const SolverConfig& cfg = {});

struct SimulationConfig {
    std::uint64_t episodes = 10'000;
    std::uint64_t horizon = 10'000;
    std::uint64_t seed = 0;
};

/// Fraction of simulated runs that reach `reach` before `avoid` within the horizon.
/// Runs hitting the horizon count as failures. Deterministic in the seed.
double simulate(const ConcreteMDP& m, const Policy& pol, const UntilProperty& prop, const SimulationConfig& sim);

/// Policy file: `#`-prefixed header lines, then one `state action` pair per line.
void write_policy(std::ostream& out, const Policy& pol, const std::vector<std::string>& header = {});
Policy read_policy(std::istream& in);

}  // namespace certbench

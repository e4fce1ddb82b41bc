#pragma once

#include "certbench/checker.hpp"
#include "certbench/scenario.hpp"
#include "certbench/sweep.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace certbench {

/// Testing stage. Any stage may follow any other.
enum class Stage { EarlyPhase, Transitional, Confirmatory };
enum class PairStatus { Proposed, Certified, Rejected };
enum class LedgerAction { Evaluated, StageChanged, RegionRefined };

std::string to_string(Stage s);
std::string to_string(PairStatus s);
std::string to_string(LedgerAction a);
Stage stage_from_string(const std::string& s);
PairStatus status_from_string(const std::string& s);
LedgerAction action_from_string(const std::string& s);

struct ContextSpec {
    std::string name;
    GridScenario scenario;
    ParameterRegion region;
};

/// Mission objective with the minimum satisfaction probability it must meet.
struct Use {
    UntilProperty property;
    double threshold = 0.0;
};

/// Modules, contexts, mappings and variations of the system under certification.
struct BaseModelSpec {
    std::vector<std::string> modules;
    std::map<std::string, ContextSpec> contexts;
    std::vector<Use> mappings;
    ParameterRegion variations;

    void validate() const;  // throws ValidationError
};

/// Suburban and urban communication-loss bands for p1; p2 spans `p2_range`.
ContextSpec suburban_context(const GridScenario& scenario, Interval p2_range = {Rational(1, 20), 1});
ContextSpec urban_context(const GridScenario& scenario, Interval p2_range = {Rational(1, 20), 1});

struct UseContextPair {
    std::string id;
    Use use;
    ContextSpec context;
    Stage stage = Stage::EarlyPhase;
    PairStatus status = PairStatus::Proposed;
};

struct LedgerEntry {
    std::uint64_t sequence = 0;
    std::string timestamp;
    std::string pair_id;
    LedgerAction action = LedgerAction::Evaluated;
    nlohmann::json evidence;
    std::string rationale;

    nlohmann::json to_json() const;
    static LedgerEntry from_json(const nlohmann::json& j);
};

/// Append-only evidence log, persisted as JSON lines when a path is given.
/// Appends are serialised; entries are committed in call order.
class Ledger {
public:
    Ledger() = default;
    /// Loads existing entries from `path` (if the file exists) and appends to it.
    explicit Ledger(std::filesystem::path path);

    const std::vector<LedgerEntry>& entries() const { return entries_; }
    const std::optional<std::filesystem::path>& path() const { return path_; }
    LedgerEntry append(const std::string& pair_id, LedgerAction action, nlohmann::json evidence,
                       std::string rationale);
    void set_clock(std::function<std::string()> clock) { clock_ = std::move(clock); }

    static std::vector<LedgerEntry> load(const std::filesystem::path& path);  // throws IoError / Error

private:
    std::vector<LedgerEntry> entries_;
    std::optional<std::filesystem::path> path_;
    std::function<std::string()> clock_;
    std::mutex mutex_;
};

/// Current stage/status/region of one pair, as reconstructed from a ledger.
struct PairState {
    Stage stage = Stage::EarlyPhase;
    PairStatus status = PairStatus::Proposed;
    std::optional<ParameterRegion> region;  // known once evaluated or refined
    bool operator==(const PairState&) const = default;
};

/// Folds entries in sequence order, starting each pair at EarlyPhase/Proposed.
std::map<std::string, PairState> replay(std::span<const LedgerEntry> entries);

/// Human-readable per-pair summary table.
std::string render_report(std::span<const LedgerEntry> entries);

struct Verdict {
    enum class Outcome { Pass, Fail, Undetermined };
    Outcome outcome = Outcome::Undetermined;
    nlohmann::json evidence;
};

std::string to_string(Verdict::Outcome o);

struct Refinement {
    Interval bound;                 // [lo, b] for the refined parameter
    std::optional<Rational> fails;  // smallest tested failing upper bound, if any
    LedgerEntry entry;
};

/// Drives evaluation, stage movement and bound refinement of ⟨use, context⟩
/// pairs, committing every action to the ledger.
class CertificationHarness {
public:
    explicit CertificationHarness(Ledger& ledger) : ledger_(ledger) {}

    /// Adds a pair; stage, status and region are taken as given.
    void register_pair(UseContextPair pair);
    const UseContextPair& pair(const std::string& id) const;  // throws UnknownPair
    std::vector<std::string> pair_ids() const;

    /// Sweeps the pair's context region; Pass iff the sampled minimum reaches the threshold.
    Verdict evaluate_context(const std::string& id, const SweepSpec& spec);
    LedgerEntry transition_stage(const std::string& id, Stage to, const std::string& rationale);
    /// Bisects the upper bound of `param` (search ceiling: the model's bound) to within `tol`.
    Refinement refine_parameter_bound(const std::string& id, const ParameterId& param, const SweepSpec& spec,
                                      double tol);

private:
    Ledger& ledger_;
    std::map<std::string, UseContextPair> pairs_;

    UseContextPair& lookup(const std::string& id);
};

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);

}  // namespace certbench

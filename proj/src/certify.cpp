#include "certbench/certify.hpp"

#include "certbench/errors.hpp"
#include "certbench/json_io.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace certbench {

// ---------------------------------------------------------------------------
// Enum text forms

std::string to_string(Stage s) {
    switch (s) {
        case Stage::EarlyPhase: return "early-phase";
        case Stage::Transitional: return "transitional";
        case Stage::Confirmatory: return "confirmatory";
    }
    return "?";
}

std::string to_string(PairStatus s) {
    switch (s) {
        case PairStatus::Proposed: return "proposed";
        case PairStatus::Certified: return "certified";
        case PairStatus::Rejected: return "rejected";
    }
    return "?";
}

std::string to_string(LedgerAction a) {
    switch (a) {
        case LedgerAction::Evaluated: return "evaluated";
        case LedgerAction::StageChanged: return "stage-changed";
        case LedgerAction::RegionRefined: return "region-refined";
    }
    return "?";
}

std::string to_string(Verdict::Outcome o) {
    switch (o) {
        case Verdict::Outcome::Pass: return "pass";
        case Verdict::Outcome::Fail: return "fail";
        case Verdict::Outcome::Undetermined: return "undetermined";
    }
    return "?";
}

Stage stage_from_string(const std::string& s) {
    for (Stage st : {Stage::EarlyPhase, Stage::Transitional, Stage::Confirmatory}) {
        if (to_string(st) == s) return st;
    }
    throw Error("unknown stage '" + s + "' (expected early-phase, transitional or confirmatory)");
}

PairStatus status_from_string(const std::string& s) {
    for (PairStatus st : {PairStatus::Proposed, PairStatus::Certified, PairStatus::Rejected}) {
        if (to_string(st) == s) return st;
    }
    throw Error("unknown status '" + s + "'");
}

LedgerAction action_from_string(const std::string& s) {
    for (LedgerAction a : {LedgerAction::Evaluated, LedgerAction::StageChanged, LedgerAction::RegionRefined}) {
        if (to_string(a) == s) return a;
    }
    throw Error("unknown ledger action '" + s + "'");
}

// ---------------------------------------------------------------------------
// Base model

void BaseModelSpec::validate() const {
    if (modules.empty()) throw ValidationError("certification.modules", "at least one module is required");
    for (std::size_t i = 0; i < mappings.size(); ++i) {
        double t = mappings[i].threshold;
        if (!(t >= 0.0 && t <= 1.0)) {
            throw ValidationError("certification.mappings[" + std::to_string(i) + "].threshold", "must lie in [0, 1]");
        }
    }
    for (const auto& [name, ctx] : contexts) {
        if (!variations.bounds().empty() && !variations.encloses(ctx.region)) {
            throw ValidationError("certification.contexts." + name, "region leaves the variations box");
        }
        if (auto p = ctx.scenario.problem()) throw ValidationError("certification.contexts." + name + "." + p->first, p->second);
    }
}

ContextSpec suburban_context(const GridScenario& scenario, Interval p2_range) {
    ParameterRegion region;
    region.set("p1", Interval{0, Rational(3, 20)});
    region.set("p2", std::move(p2_range));
    return {"suburban", scenario, region};
}

ContextSpec urban_context(const GridScenario& scenario, Interval p2_range) {
    ParameterRegion region;
    region.set("p1", Interval{Rational(1, 10), Rational(1, 4)});
    region.set("p2", std::move(p2_range));
    return {"urban", scenario, region};
}

// ---------------------------------------------------------------------------
// Ledger

nlohmann::json LedgerEntry::to_json() const {
    return {{"sequence", sequence},     {"timestamp", timestamp}, {"pair_id", pair_id},
            {"action", to_string(action)}, {"evidence", evidence},   {"rationale", rationale}};
}

LedgerEntry LedgerEntry::from_json(const nlohmann::json& j) {
    try {
        LedgerEntry e;
        e.sequence = j.at("sequence").get<std::uint64_t>();
        e.timestamp = j.at("timestamp").get<std::string>();
        e.pair_id = j.at("pair_id").get<std::string>();
        e.action = action_from_string(j.at("action").get<std::string>());
        e.evidence = j.at("evidence");
        e.rationale = j.value("rationale", std::string());
        return e;
    } catch (const nlohmann::json::exception& ex) {
        throw Error(std::string("malformed ledger entry: ") + ex.what());
    }
}

namespace {

std::string utc_now() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    auto millis = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream out;
    out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%S") << '.' << std::setw(3) << std::setfill('0') << millis << 'Z';
    return out.str();
}

}  // namespace

Ledger::Ledger(std::filesystem::path path) : path_(std::move(path)) {
    if (std::filesystem::exists(*path_)) entries_ = load(*path_);
}

std::vector<LedgerEntry> Ledger::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open ledger '" + path.string() + "'");
    std::vector<LedgerEntry> entries;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw Error("ledger line " + std::to_string(line_no) + " is not JSON: " + e.what());
        }
        auto entry = LedgerEntry::from_json(j);
        if (!entries.empty() && entry.sequence <= entries.back().sequence) {
            throw Error("ledger line " + std::to_string(line_no) + " breaks the sequence order");
        }
        entries.push_back(std::move(entry));
    }
    return entries;
}

LedgerEntry Ledger::append(const std::string& pair_id, LedgerAction action, nlohmann::json evidence,
                           std::string rationale) {
    std::lock_guard lock(mutex_);
    LedgerEntry entry;
    entry.sequence = entries_.empty() ? 1 : entries_.back().sequence + 1;
    entry.timestamp = clock_ ? clock_() : utc_now();
    entry.pair_id = pair_id;
    entry.action = action;
    entry.evidence = std::move(evidence);
    entry.rationale = std::move(rationale);
    if (path_) {
        std::ofstream out(*path_, std::ios::binary | std::ios::app);
        if (!out) throw IoError("cannot append to ledger '" + path_->string() + "'");
        out << entry.to_json().dump() << '\n';
        if (!out) throw IoError("failed writing ledger '" + path_->string() + "'");
    }
    entries_.push_back(entry);
    return entry;
}

std::map<std::string, PairState> replay(std::span<const LedgerEntry> entries) {
    std::map<std::string, PairState> states;
    std::uint64_t last = 0;
    for (const auto& e : entries) {
        if (e.sequence <= last) throw Error("ledger sequence is not strictly increasing at " + std::to_string(e.sequence));
        last = e.sequence;
        auto& state = states[e.pair_id];
        switch (e.action) {
            case LedgerAction::Evaluated:
                state.status = status_from_string(e.evidence.at("status").get<std::string>());
                state.region = region_from_json(e.evidence.at("region"), "evidence.region");
                break;
            case LedgerAction::StageChanged:
                state.stage = stage_from_string(e.evidence.at("to").get<std::string>());
                break;
            case LedgerAction::RegionRefined:
                state.region = region_from_json(e.evidence.at("region"), "evidence.region");
                break;
        }
    }
    return states;
}

std::string render_report(std::span<const LedgerEntry> entries) {
    auto states = replay(entries);
    std::map<std::string, std::pair<std::size_t, std::string>> extra;  // entry count, last verdict
    for (const auto& e : entries) {
        auto& [count, verdict] = extra[e.pair_id];
        ++count;
        if (e.action == LedgerAction::Evaluated) {
            std::ostringstream v;
            v << e.evidence.value("verdict", std::string("?"));
            if (e.evidence.contains("summary")) v << " (min " << e.evidence["summary"].value("min", 0.0) << ")";
            verdict = v.str();
        }
    }
    std::ostringstream out;
    out << std::left << std::setw(22) << "pair" << std::setw(14) << "stage" << std::setw(11) << "status"
        << std::setw(8) << "entries" << std::setw(26) << "last verdict"
        << "region\n";
    for (const auto& [id, state] : states) {
        const auto& [count, verdict] = extra[id];
        out << std::left << std::setw(22) << id << std::setw(14) << to_string(state.stage) << std::setw(11)
            << to_string(state.status) << std::setw(8) << count << std::setw(26) << (verdict.empty() ? "-" : verdict)
            << (state.region ? state.region->to_string() : "-") << '\n';
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// Harness

std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
        throw Error("SHA-256 digest failed");
    }
    std::ostringstream out;
    for (unsigned int i = 0; i < length; ++i) out << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
    return out.str();
}

void CertificationHarness::register_pair(UseContextPair pair) {
    if (pair.id.empty()) throw Error("pair id must not be empty");
    if (!(pair.use.threshold >= 0.0 && pair.use.threshold <= 1.0)) throw Error("threshold must lie in [0, 1]");
    pair.context.scenario.validate();
    if (!default_region().encloses(pair.context.region)) throw Error("context region leaves the model region");
    auto id = pair.id;
    pairs_.insert_or_assign(id, std::move(pair));
}

const UseContextPair& CertificationHarness::pair(const std::string& id) const {
    auto it = pairs_.find(id);
    if (it == pairs_.end()) throw UnknownPair(id);
    return it->second;
}

UseContextPair& CertificationHarness::lookup(const std::string& id) {
    auto it = pairs_.find(id);
    if (it == pairs_.end()) throw UnknownPair(id);
    return it->second;
}

std::vector<std::string> CertificationHarness::pair_ids() const {
    std::vector<std::string> ids;
    for (const auto& [id, _] : pairs_) ids.push_back(id);
    return ids;
}

namespace {

SweepSpec over(const SweepSpec& spec, const ParameterRegion& region) {
    SweepSpec s = spec;
    s.region = region;
    return s;
}

nlohmann::json sweep_evidence(const SweepResult& r) {
    return {{"summary", summary_json(r)}, {"csv_sha256", sha256_hex(to_csv(r))}};
}

}  // namespace

Verdict CertificationHarness::evaluate_context(const std::string& id, const SweepSpec& spec) {
    auto& p = lookup(id);
    const SweepSpec scoped = over(spec, p.context.region);
    const PMDP model = build_scenario(p.context.scenario);

    Verdict verdict;
    verdict.evidence = {{"context", p.context.name},
                        {"property", property_to_json(p.use.property)},
                        {"theta", p.use.threshold},
                        {"region", region_to_json(p.context.region)},
                        {"sampling", sampling_to_json(spec.mode)},
                        {"solver", solver_to_json(spec.solver)}};
    try {
        SweepResult result = run_sweep(model, p.use.property, scoped);
        verdict.evidence.update(sweep_evidence(result));
        verdict.outcome = result.min >= p.use.threshold ? Verdict::Outcome::Pass : Verdict::Outcome::Fail;
        p.status = verdict.outcome == Verdict::Outcome::Pass ? PairStatus::Certified : PairStatus::Rejected;
    } catch (const SweepNonConvergence& e) {
        verdict.outcome = Verdict::Outcome::Undetermined;
        verdict.evidence["nonconvergence"] = {{"valuation", valuation_to_json(e.valuation())},
                                              {"iterations", e.iterations()}};
    }
    verdict.evidence["verdict"] = to_string(verdict.outcome);
    verdict.evidence["status"] = to_string(p.status);
    ledger_.append(id, LedgerAction::Evaluated, verdict.evidence,
                   "sampled minimum vs threshold " + format_double(p.use.threshold));
    return verdict;
}

LedgerEntry CertificationHarness::transition_stage(const std::string& id, Stage to, const std::string& rationale) {
    auto& p = lookup(id);
    nlohmann::json evidence{{"from", to_string(p.stage)}, {"to", to_string(to)}, {"no_op", p.stage == to}};
    p.stage = to;
    return ledger_.append(id, LedgerAction::StageChanged, std::move(evidence), rationale);
}

Refinement CertificationHarness::refine_parameter_bound(const std::string& id, const ParameterId& param,
                                                        const SweepSpec& spec, double tol) {
    if (!(tol > 0.0)) throw Error("refinement tolerance must be positive");
    auto& p = lookup(id);
    if (!p.context.region.contains(param)) throw MissingParameter(param);
    const PMDP model = build_scenario(p.context.scenario);
    const Rational lower = p.context.region.at(param).lo;
    const Rational ceiling = model.region().at(param).hi;
    const Rational tolerance = decimal_rational(tol);

    auto region_upto = [&](const Rational& b) {
        ParameterRegion r = p.context.region;
        r.set(param, Interval{lower, b});
        return r;
    };
    auto sweep_upto = [&](const Rational& b) { return run_sweep(model, p.use.property, over(spec, region_upto(b))); };

    SweepResult at_lower = sweep_upto(lower);
    if (at_lower.min < p.use.threshold) {
        throw NoFeasibleBound("no upper bound for '" + param + "' passes threshold " + format_double(p.use.threshold) +
                              ": minimum " + format_double(at_lower.min) + " at " + param + " = " + to_string(lower));
    }

    Rational pass = lower;
    SweepResult pass_result = std::move(at_lower);
    std::optional<Rational> fail;
    std::optional<SweepResult> fail_result;
    if (SweepResult top = sweep_upto(ceiling); top.min >= p.use.threshold) {
        pass = ceiling;
        pass_result = std::move(top);
    } else {
        fail = ceiling;
        fail_result = std::move(top);
        while (*fail - pass > tolerance) {
            Rational mid = (pass + *fail) / 2;
            SweepResult r = sweep_upto(mid);
            if (r.min >= p.use.threshold) {
                pass = mid;
                pass_result = std::move(r);
            } else {
                fail = mid;
                fail_result = std::move(r);
            }
        }
    }

    p.context.region = region_upto(pass);
    nlohmann::json evidence{{"parameter", param},
                            {"bound", rational_to_json(pass)},
                            {"tolerance", tol},
                            {"theta", p.use.threshold},
                            {"sampling", sampling_to_json(spec.mode)},
                            {"region", region_to_json(p.context.region)},
                            {"pass", sweep_evidence(pass_result)}};
    if (fail) {
        evidence["fail_bound"] = rational_to_json(*fail);
        evidence["fail"] = sweep_evidence(*fail_result);
    } else {
        evidence["fail_bound"] = nullptr;
    }
    auto entry = ledger_.append(id, LedgerAction::RegionRefined, std::move(evidence),
                                "bisection on the upper bound of " + param);
    return {Interval{lower, pass}, fail, std::move(entry)};
}

}  // namespace certbench

#include "certbench/sweep.hpp"

#include "certbench/errors.hpp"
#include "certbench/json_io.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <exception>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

namespace certbench {

namespace {

/// Uniform dyadic rational in [0, 1) from the top 53 bits of one draw.
Rational unit_draw(std::mt19937_64& rng) { return Rational(static_cast<double>(rng() >> 11) * 0x1.0p-53); }

std::vector<Rational> lattice(const Interval& range, unsigned points) {
    if (range.lo == range.hi || points == 1) return {range.lo};
    std::vector<Rational> out;
    for (unsigned i = 0; i < points; ++i) {
        Rational t(i, points - 1);
        t.canonicalize();
        out.push_back(range.lo + t * (range.hi - range.lo));
    }
    return out;
}

}  // namespace

void SweepSpec::validate() const {
    solver.validate();
    if (region.bounds().empty()) throw InvalidSweep("sweep region has no parameters");
    if (const auto* grid = std::get_if<GridSampling>(&mode)) {
        if (grid->points < 1) throw InvalidSweep("grid sweep needs at least one point per dimension");
    } else if (const auto* random = std::get_if<RandomSampling>(&mode)) {
        if (random->samples < 1) throw InvalidSweep("random sweep needs at least one sample");
    } else {
        const auto& tied = std::get<TiedSampling>(mode);
        if (tied.samples < 1) throw InvalidSweep("tied sweep needs at least one sample");
        if (tied.parameters.empty()) throw InvalidSweep("tied sweep names no parameters");
        if (tied.range.lo > tied.range.hi || tied.range.lo < 0 || tied.range.hi > 1) {
            throw InvalidSweep("tied range must satisfy 0 <= lo <= hi <= 1");
        }
        for (const auto& p : tied.parameters) {
            if (!region.contains(p)) throw InvalidSweep("tied parameter '" + p + "' is not in the region");
            const auto& b = region.at(p);
            if (tied.range.lo < b.lo || tied.range.hi > b.hi) {
                throw InvalidSweep("tied range leaves the region of '" + p + "'");
            }
        }
        for (const auto& [name, b] : region.bounds()) {
            bool is_tied = std::find(tied.parameters.begin(), tied.parameters.end(), name) != tied.parameters.end();
            if (!is_tied && b.lo != b.hi) {
                throw InvalidSweep("untied parameter '" + name + "' must have a single-point interval");
            }
        }
    }
}

void SweepResult::summarize() {
    if (records.empty()) throw Error("sweep result has no records");
    argmin = argmax = 0;
    for (std::size_t i = 1; i < records.size(); ++i) {
        if (records[i].value < records[argmin].value) argmin = i;
        if (records[i].value > records[argmax].value) argmax = i;
    }
    min = records[argmin].value;
    max = records[argmax].value;
}

SweepNonConvergence::SweepNonConvergence(const NonConvergence& cause, Valuation valuation)
    : NonConvergence(cause.iterations(), std::string(cause.what()) + " at " + valuation.to_string()),
      valuation_(std::move(valuation)) {}

std::vector<Valuation> sample_valuations(const SweepSpec& spec) {
    spec.validate();
    const auto& bounds = spec.region.bounds();
    std::vector<Valuation> out;

    if (const auto* grid = std::get_if<GridSampling>(&spec.mode)) {
        out.emplace_back();
        for (const auto& [name, b] : bounds) {
            std::vector<Valuation> next;
            for (const auto& partial : out) {
                for (const auto& value : lattice(b, grid->points)) {
                    Valuation v = partial;
                    v.set(name, value);
                    next.push_back(std::move(v));
                }
            }
            out = std::move(next);
        }
    } else if (const auto* random = std::get_if<RandomSampling>(&spec.mode)) {
        std::mt19937_64 rng(random->seed);
        for (unsigned i = 0; i < random->samples; ++i) {
            Valuation v;
            for (const auto& [name, b] : bounds) v.set(name, b.lo + unit_draw(rng) * (b.hi - b.lo));
            out.push_back(std::move(v));
        }
    } else {
        const auto& tied = std::get<TiedSampling>(spec.mode);
        std::vector<Rational> values;
        if (tied.seed) {
            std::mt19937_64 rng(*tied.seed);
            for (unsigned i = 0; i < tied.samples; ++i) {
                values.push_back(tied.range.lo + unit_draw(rng) * (tied.range.hi - tied.range.lo));
            }
        } else {
            values = lattice(tied.range, tied.samples);
        }
        for (const auto& value : values) {
            Valuation v;
            for (const auto& [name, b] : bounds) v.set(name, b.lo);
            for (const auto& p : tied.parameters) v.set(p, value);
            out.push_back(std::move(v));
        }
    }
    return out;
}

std::vector<std::vector<ParameterId>> sweep_columns(const SweepSpec& spec) {
    std::vector<std::vector<ParameterId>> columns;
    const auto* tied = std::get_if<TiedSampling>(&spec.mode);
    if (tied) columns.push_back(tied->parameters);
    for (const auto& name : spec.region.parameters()) {
        if (tied && std::find(tied->parameters.begin(), tied->parameters.end(), name) != tied->parameters.end()) {
            continue;
        }
        columns.push_back({name});
    }
    return columns;
}

namespace {

/// Evaluates `work(i)` for every sample on a small worker pool; results land
/// at their sample index so output order never depends on scheduling.
template <typename Work>
SweepResult sweep(const SweepSpec& spec, Work work) {
    auto valuations = sample_valuations(spec);
    SweepResult result;
    result.columns = sweep_columns(spec);
    result.records.resize(valuations.size());
    std::vector<std::exception_ptr> errors(valuations.size());

    unsigned threads = spec.threads != 0 ? spec.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(valuations.size()));
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < valuations.size(); i = next++) {
            try {
                result.records[i] = work(valuations[i]);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    }

    for (std::size_t i = 0; i < errors.size(); ++i) {
        if (!errors[i]) continue;
        try {
            std::rethrow_exception(errors[i]);
        } catch (const NonConvergence& e) {
            throw SweepNonConvergence(e, valuations[i]);
        }
    }
    result.summarize();
    return result;
}

void check_region(const PMDP& m, const SweepSpec& spec) {
    if (!m.region().encloses(spec.region)) {
        throw InvalidSweep("sweep region " + spec.region.to_string() + " is not inside the model region " +
                           m.region().to_string());
    }
    for (const auto& p : m.parameters()) {
        if (!spec.region.contains(p)) throw InvalidSweep("sweep region does not bound parameter '" + p + "'");
    }
}

}  // namespace

SweepResult run_sweep(const PMDP& m, const UntilProperty& prop, const SweepSpec& spec) {
    check_region(m, spec);
    return sweep(spec, [&](const Valuation& v) {
        auto check = max_until(instantiate(m, v), prop, spec.solver);
        return SampleRecord{v, check.value_at_initial, check.iterations, check.residual};
    });
}

SweepResult evaluate_fixed_policy_sweep(const PMDP& m, const Policy& pol, const UntilProperty& prop,
                                        const SweepSpec& spec) {
    check_region(m, spec);
    if (pol.state_count() != m.state_count()) throw PolicyIncomplete("policy does not match the model's state space");
    return sweep(spec, [&](const Valuation& v) {
        double value = evaluate_policy(instantiate(m, v), pol, prop, spec.solver);
        return SampleRecord{v, value, 0, 0.0};
    });
}

// ---------------------------------------------------------------------------
// CSV

void write_csv(const SweepResult& r, std::ostream& out) {
    for (const auto& group : r.columns) {
        for (std::size_t k = 0; k < group.size(); ++k) out << (k == 0 ? "" : "=") << group[k];
        out << ',';
    }
    out << "value\n";
    for (const auto& rec : r.records) {
        for (const auto& group : r.columns) out << format_double(to_double(rec.valuation.at(group.front()))) << ',';
        out << format_double(rec.value) << '\n';
    }
}

std::string to_csv(const SweepResult& r) {
    std::ostringstream out;
    write_csv(r, out);
    return out.str();
}

void write_csv(const SweepResult& r, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    write_csv(r, out);
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, sep)) out.push_back(field);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

double parse_field(const std::string& text, std::size_t line) {
    double value = 0.0;
    auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || end != text.data() + text.size() || text.empty()) {
        throw MalformedCsv(line, "'" + text + "' is not a number");
    }
    return value;
}

}  // namespace

SweepResult read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw MalformedCsv(1, "missing header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto header = split(line, ',');
    if (header.size() < 2 || header.back() != "value") throw MalformedCsv(1, "header must end with 'value'");

    SweepResult result;
    for (std::size_t c = 0; c + 1 < header.size(); ++c) {
        std::vector<ParameterId> group;
        for (auto& name : split(header[c], '=')) {
            if (name.empty()) throw MalformedCsv(1, "empty column name");
            group.push_back(name);
        }
        if (group.empty()) throw MalformedCsv(1, "empty column name");
        result.columns.push_back(std::move(group));
    }

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split(line, ',');
        if (fields.size() != header.size()) {
            throw MalformedCsv(line_no, "expected " + std::to_string(header.size()) + " fields, got " +
                                            std::to_string(fields.size()));
        }
        SampleRecord rec;
        for (std::size_t c = 0; c < result.columns.size(); ++c) {
            double x = parse_field(fields[c], line_no);
            if (!(x >= 0.0 && x <= 1.0)) throw MalformedCsv(line_no, "parameter value outside [0, 1]");
            for (const auto& name : result.columns[c]) rec.valuation.set(name, Rational(x));
        }
        rec.value = parse_field(fields.back(), line_no);
        if (!(rec.value >= 0.0 && rec.value <= 1.0)) throw MalformedCsv(line_no, "value outside [0, 1]");
        result.records.push_back(std::move(rec));
    }
    if (result.records.empty()) throw MalformedCsv(line_no, "no records");
    result.summarize();
    return result;
}

SweepResult read_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    return read_csv(in);
}

nlohmann::json summary_json(const SweepResult& r) {
    return {{"min", r.min},
            {"argmin", valuation_to_json(r.records.at(r.argmin).valuation)},
            {"max", r.max},
            {"argmax", valuation_to_json(r.records.at(r.argmax).valuation)},
            {"samples", r.records.size()}};
}

}  // namespace certbench

#pragma once

#include "certbench/checker.hpp"
#include "certbench/errors.hpp"
#include "certbench/param_expr.hpp"
#include "certbench/pmdp.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace certbench {

/// Cartesian lattice with `points` values per free dimension, endpoints included.
/// Dimensions whose interval is a single point are held fixed.
struct GridSampling {
    unsigned points = 10;
    bool operator==(const GridSampling&) const = default;
};

/// Independent uniform draws per dimension.
struct RandomSampling {
    unsigned samples = 100;
    std::uint64_t seed = 0;
    bool operator==(const RandomSampling&) const = default;
};

/// One shared value copied to every tied parameter; a lattice when `seed` is
/// unset, uniform draws otherwise. Untied parameters must be fixed in the region.
struct TiedSampling {
    std::vector<ParameterId> parameters{"p1", "p2"};
    Interval range{0, 1};
    unsigned samples = 100;
    std::optional<std::uint64_t> seed;
    bool operator==(const TiedSampling&) const = default;
};

using SamplingMode = std::variant<GridSampling, RandomSampling, TiedSampling>;

struct SweepSpec {
    SamplingMode mode = RandomSampling{};
    ParameterRegion region;
    SolverConfig solver;
    unsigned threads = 0;  // 0 = hardware concurrency

    void validate() const;  // throws InvalidSweep
    bool operator==(const SweepSpec&) const = default;
};

struct SampleRecord {
    Valuation valuation;
    double value = 0.0;
    std::uint64_t iterations = 0;
    double residual = 0.0;
};

struct SweepResult {
    /// CSV column groups; a group with several names is a tied column.
    std::vector<std::vector<ParameterId>> columns;
    std::vector<SampleRecord> records;
    double min = 0.0;
    double max = 0.0;
    std::size_t argmin = 0;
    std::size_t argmax = 0;

    /// Recomputes min/max/argmin/argmax from the records (first index wins ties).
    void summarize();
};

/// Thrown when a sample fails to converge; carries the offending valuation.
class SweepNonConvergence : public NonConvergence {
public:
    SweepNonConvergence(const NonConvergence& cause, Valuation valuation);
    const Valuation& valuation() const noexcept { return valuation_; }

private:
    Valuation valuation_;
};

/// Valuations in sampling order; deterministic in the spec.
std::vector<Valuation> sample_valuations(const SweepSpec& spec);
std::vector<std::vector<ParameterId>> sweep_columns(const SweepSpec& spec);

/// Optimal satisfaction probability at every sampled valuation.
SweepResult run_sweep(const PMDP& m, const UntilProperty& prop, const SweepSpec& spec);

/// Value of one fixed policy at every sampled valuation.
SweepResult evaluate_fixed_policy_sweep(const PMDP& m, const Policy& pol, const UntilProperty& prop,
                                        const SweepSpec& spec);

void write_csv(const SweepResult& r, std::ostream& out);
void write_csv(const SweepResult& r, const std::filesystem::path& path);  // throws IoError
std::string to_csv(const SweepResult& r);
SweepResult read_csv(std::istream& in);                    // throws MalformedCsv
SweepResult read_csv(const std::filesystem::path& path);  // throws IoError / MalformedCsv

/// {min, argmin, max, argmax, samples}
nlohmann::json summary_json(const SweepResult& r);

}  // namespace certbench

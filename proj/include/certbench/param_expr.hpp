#pragma once

#include "certbench/rational.hpp"

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace certbench {

using ParameterId = std::string;

/// Point assignment of parameter values.
class Valuation {
public:
    Valuation() = default;
    Valuation(std::initializer_list<std::pair<const ParameterId, Rational>> init) : values_(init) {}

    void set(const ParameterId& name, Rational value) { values_[name] = std::move(value); }
    const Rational& at(const ParameterId& name) const;  // throws MissingParameter
    bool contains(const ParameterId& name) const { return values_.count(name) != 0; }
    const std::map<ParameterId, Rational>& values() const { return values_; }
    std::map<ParameterId, double> to_doubles() const;
    std::string to_string() const;

    bool operator==(const Valuation&) const = default;

private:
    std::map<ParameterId, Rational> values_;
};

struct Interval {
    Rational lo;
    Rational hi;
    bool contains(const Rational& x) const { return lo <= x && x <= hi; }
    bool operator==(const Interval&) const = default;
};

/// Closed box over parameters; every bound lies in [0, 1].
class ParameterRegion {
public:
    ParameterRegion() = default;
    ParameterRegion(std::initializer_list<std::pair<const ParameterId, Interval>> init);

    /// Box [0,1]^n over the given parameters.
    static ParameterRegion unit(std::span<const ParameterId> parameters);

    void set(const ParameterId& name, Interval bounds);
    const Interval& at(const ParameterId& name) const;  // throws MissingParameter
    bool contains(const ParameterId& name) const { return bounds_.count(name) != 0; }
    const std::map<ParameterId, Interval>& bounds() const { return bounds_; }
    std::vector<ParameterId> parameters() const;

    /// True iff `v` assigns every parameter of the box a value inside its interval.
    bool contains(const Valuation& v) const;
    /// True iff every interval of `inner` lies inside the matching interval here.
    bool encloses(const ParameterRegion& inner) const;
    /// All 2^n corner valuations, first parameter varying slowest.
    std::vector<Valuation> corners() const;
    std::string to_string() const;

    bool operator==(const ParameterRegion&) const = default;

private:
    std::map<ParameterId, Interval> bounds_;
};

/// Monomial as sorted (parameter, degree) pairs; empty = constant term.
using Monomial = std::vector<std::pair<ParameterId, unsigned>>;

/// Expanded polynomial with exact coefficients; zero terms are never stored.
class Polynomial {
public:
    Polynomial() = default;
    static Polynomial constant(const Rational& c);
    static Polynomial variable(const ParameterId& name);

    Polynomial& operator+=(const Polynomial& other);
    friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
    friend Polynomial operator*(const Polynomial& a, const Polynomial& b);
    bool operator==(const Polynomial&) const = default;

    bool is_constant() const;
    bool is_zero() const { return terms_.empty(); }
    unsigned max_degree_per_parameter() const;
    const std::map<Monomial, Rational>& terms() const { return terms_; }
    std::string to_string() const;

private:
    std::map<Monomial, Rational> terms_;
};

/// Symbolic transition probability: a tree over constants and parameters.
class ParamExpr {
public:
    enum class Kind { Const, Var, Sum, Product };

    ParamExpr() = default;  // the constant 0
    static ParamExpr constant(Rational value);
    static ParamExpr var(ParameterId name);
    static ParamExpr sum(std::vector<ParamExpr> terms);
    static ParamExpr product(std::vector<ParamExpr> factors);

    /// Parses `+ - *`, parentheses, decimal and `p/q` literals, parameter names.
    static ParamExpr parse(std::string_view text);

    Kind kind() const { return kind_; }
    const Rational& value() const { return value_; }
    const ParameterId& name() const { return name_; }
    std::span<const ParamExpr> children() const { return children_; }

    /// Distinct parameter names referenced by Var leaves.
    std::vector<ParameterId> parameters() const;
    Polynomial expand() const;
    std::string to_string() const;

    bool operator==(const ParamExpr&) const = default;

private:
    Kind kind_ = Kind::Const;
    Rational value_;
    ParameterId name_;
    std::vector<ParamExpr> children_;
};

ParamExpr operator+(const ParamExpr& a, const ParamExpr& b);
ParamExpr operator-(const ParamExpr& a, const ParamExpr& b);
ParamExpr operator*(const ParamExpr& a, const ParamExpr& b);

/// Exact value of `expr` at `v`. Throws MissingParameter for an uncovered leaf.
Rational evaluate(const ParamExpr& expr, const Valuation& v);
/// Floating-point evaluation of the same tree.
double evaluate(const ParamExpr& expr, const std::map<ParameterId, double>& v);

/// True iff every parameter has degree <= 1 after expansion.
bool is_multi_affine(const ParamExpr& expr);

struct WellFormedness {
    enum class Status { Pass, NotMultiAffine, NonUnitSum, NegativeAtCorner };

    Status status = Status::Pass;
    std::size_t expr_index = 0;  // NotMultiAffine / NegativeAtCorner
    Polynomial residual;         // NonUnitSum: symbolic sum minus 1
    Valuation corner;            // NegativeAtCorner

    bool ok() const { return status == Status::Pass; }
    std::string describe() const;
};

/// Checks that `exprs` form a probability distribution everywhere in `region`.
/// Multi-affine terms attain their box extrema at corners, so corners suffice.
WellFormedness check_distribution_row(std::span<const ParamExpr> exprs, const ParameterRegion& region);

}  // namespace certbench

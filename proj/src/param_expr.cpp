#include "certbench/param_expr.hpp"

#include "certbench/errors.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

namespace certbench {

// ---------------------------------------------------------------------------
// Valuation / ParameterRegion

const Rational& Valuation::at(const ParameterId& name) const {
    auto it = values_.find(name);
    if (it == values_.end()) throw MissingParameter(name);
    return it->second;
}

std::map<ParameterId, double> Valuation::to_doubles() const {
    std::map<ParameterId, double> out;
    for (const auto& [name, value] : values_) out.emplace(name, to_double(value));
    return out;
}

std::string Valuation::to_string() const {
    std::string out = "{";
    for (const auto& [name, value] : values_) {
        if (out.size() > 1) out += ", ";
        out += name + "=" + certbench::to_string(value);
    }
    return out + "}";
}

ParameterRegion::ParameterRegion(std::initializer_list<std::pair<const ParameterId, Interval>> init) {
    for (const auto& [name, bounds] : init) set(name, bounds);
}

ParameterRegion ParameterRegion::unit(std::span<const ParameterId> parameters) {
    ParameterRegion region;
    for (const auto& name : parameters) region.set(name, Interval{0, 1});
    return region;
}

void ParameterRegion::set(const ParameterId& name, Interval bounds) {
    if (name.empty()) throw Error("empty parameter name");
    if (bounds.lo < 0 || bounds.hi > 1 || bounds.lo > bounds.hi) {
        throw Error("interval for '" + name + "' must satisfy 0 <= lo <= hi <= 1, got [" +
                    certbench::to_string(bounds.lo) + ", " + certbench::to_string(bounds.hi) + "]");
    }
    bounds_[name] = std::move(bounds);
}

const Interval& ParameterRegion::at(const ParameterId& name) const {
    auto it = bounds_.find(name);
    if (it == bounds_.end()) throw MissingParameter(name);
    return it->second;
}

std::vector<ParameterId> ParameterRegion::parameters() const {
    std::vector<ParameterId> names;
    for (const auto& [name, _] : bounds_) names.push_back(name);
    return names;
}

bool ParameterRegion::contains(const Valuation& v) const {
    for (const auto& [name, bounds] : bounds_) {
        if (!v.contains(name) || !bounds.contains(v.at(name))) return false;
    }
    return true;
}

bool ParameterRegion::encloses(const ParameterRegion& inner) const {
    for (const auto& [name, bounds] : inner.bounds_) {
        auto it = bounds_.find(name);
        if (it == bounds_.end()) return false;
        if (bounds.lo < it->second.lo || bounds.hi > it->second.hi) return false;
    }
    return true;
}

std::vector<Valuation> ParameterRegion::corners() const {
    std::vector<Valuation> out(1);
    for (const auto& [name, bounds] : bounds_) {
        std::vector<Valuation> next;
        for (const auto& partial : out) {
            Valuation low = partial;
            low.set(name, bounds.lo);
            next.push_back(std::move(low));
            if (bounds.hi != bounds.lo) {
                Valuation high = partial;
                high.set(name, bounds.hi);
                next.push_back(std::move(high));
            }
        }
        out = std::move(next);
    }
    return out;
}

std::string ParameterRegion::to_string() const {
    std::string out;
    for (const auto& [name, b] : bounds_) {
        if (!out.empty()) out += " x ";
        out += name + " in [" + certbench::to_string(b.lo) + ", " + certbench::to_string(b.hi) + "]";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Polynomial

Polynomial Polynomial::constant(const Rational& c) {
    Polynomial p;
    if (c != 0) p.terms_.emplace(Monomial{}, c);
    return p;
}

Polynomial Polynomial::variable(const ParameterId& name) {
    Polynomial p;
    p.terms_.emplace(Monomial{{name, 1}}, Rational(1));
    return p;
}

Polynomial& Polynomial::operator+=(const Polynomial& other) {
    for (const auto& [mono, coeff] : other.terms_) {
        auto [it, inserted] = terms_.emplace(mono, coeff);
        if (!inserted) {
            it->second += coeff;
            if (it->second == 0) terms_.erase(it);
        }
    }
    return *this;
}

namespace {

Monomial multiply(const Monomial& a, const Monomial& b) {
    Monomial out;
    std::size_t i = 0, j = 0;
    while (i < a.size() || j < b.size()) {
        if (j == b.size() || (i < a.size() && a[i].first < b[j].first)) {
            out.push_back(a[i++]);
        } else if (i == a.size() || b[j].first < a[i].first) {
            out.push_back(b[j++]);
        } else {
            out.emplace_back(a[i].first, a[i].second + b[j].second);
            ++i;
            ++j;
        }
    }
    return out;
}

}  // namespace

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    Polynomial out;
    for (const auto& [ma, ca] : a.terms_) {
        for (const auto& [mb, cb] : b.terms_) {
            out += [&] {
                Polynomial term;
                term.terms_.emplace(multiply(ma, mb), ca * cb);
                return term;
            }();
        }
    }
    return out;
}

bool Polynomial::is_constant() const {
    return terms_.empty() || (terms_.size() == 1 && terms_.begin()->first.empty());
}

unsigned Polynomial::max_degree_per_parameter() const {
    unsigned degree = 0;
    for (const auto& [mono, _] : terms_) {
        for (const auto& [name, d] : mono) degree = std::max(degree, d);
    }
    return degree;
}

std::string Polynomial::to_string() const {
    if (terms_.empty()) return "0";
    std::string out;
    for (const auto& [mono, coeff] : terms_) {
        Rational magnitude = abs(coeff);
        if (out.empty()) {
            if (coeff < 0) out += "-";
        } else {
            out += coeff < 0 ? " - " : " + ";
        }
        std::string factors;
        for (const auto& [name, d] : mono) {
            for (unsigned k = 0; k < d; ++k) factors += (factors.empty() ? "" : "*") + name;
        }
        if (factors.empty()) {
            out += certbench::to_string(magnitude);
        } else if (magnitude == 1) {
            out += factors;
        } else {
            out += certbench::to_string(magnitude) + "*" + factors;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// ParamExpr construction

ParamExpr ParamExpr::constant(Rational value) {
    ParamExpr e;
    e.kind_ = Kind::Const;
    e.value_ = std::move(value);
    return e;
}

ParamExpr ParamExpr::var(ParameterId name) {
    if (name.empty()) throw Error("empty parameter name");
    ParamExpr e;
    e.kind_ = Kind::Var;
    e.name_ = std::move(name);
    return e;
}

ParamExpr ParamExpr::sum(std::vector<ParamExpr> terms) {
    ParamExpr e;
    e.kind_ = Kind::Sum;
    e.children_ = std::move(terms);
    return e;
}

ParamExpr ParamExpr::product(std::vector<ParamExpr> factors) {
    ParamExpr e;
    e.kind_ = Kind::Product;
    e.children_ = std::move(factors);
    return e;
}

ParamExpr operator+(const ParamExpr& a, const ParamExpr& b) { return ParamExpr::sum({a, b}); }
ParamExpr operator-(const ParamExpr& a, const ParamExpr& b) {
    return ParamExpr::sum({a, ParamExpr::product({ParamExpr::constant(-1), b})});
}
ParamExpr operator*(const ParamExpr& a, const ParamExpr& b) { return ParamExpr::product({a, b}); }

std::vector<ParameterId> ParamExpr::parameters() const {
    std::set<ParameterId> names;
    auto visit = [&](auto&& self, const ParamExpr& e) -> void {
        if (e.kind_ == Kind::Var) names.insert(e.name_);
        for (const auto& c : e.children_) self(self, c);
    };
    visit(visit, *this);
    return {names.begin(), names.end()};
}

Polynomial ParamExpr::expand() const {
    switch (kind_) {
        case Kind::Const: return Polynomial::constant(value_);
        case Kind::Var: return Polynomial::variable(name_);
        case Kind::Sum: {
            Polynomial out;
            for (const auto& c : children_) out += c.expand();
            return out;
        }
        case Kind::Product: {
            Polynomial out = Polynomial::constant(1);
            for (const auto& c : children_) out = out * c.expand();
            return out;
        }
    }
    return {};
}

namespace {

bool negated_product(const ParamExpr& e, ParamExpr& rest) {
    if (e.kind() != ParamExpr::Kind::Product || e.children().empty()) return false;
    const auto& head = e.children().front();
    if (head.kind() != ParamExpr::Kind::Const || head.value() >= 0) return false;
    std::vector<ParamExpr> factors;
    if (head.value() != -1) factors.push_back(ParamExpr::constant(-head.value()));
    factors.insert(factors.end(), e.children().begin() + 1, e.children().end());
    if (factors.empty()) {
        rest = ParamExpr::constant(1);
    } else if (factors.size() == 1) {
        rest = factors.front();
    } else {
        rest = ParamExpr::product(std::move(factors));
    }
    return true;
}

void print(const ParamExpr& e, std::string& out, bool nested) {
    using Kind = ParamExpr::Kind;
    switch (e.kind()) {
        case Kind::Const: {
            std::string text = to_string(e.value());
            if (e.value() < 0 || (nested && text.find('/') != std::string::npos)) {
                out += "(" + text + ")";
            } else {
                out += text;
            }
            return;
        }
        case Kind::Var: out += e.name(); return;
        case Kind::Sum: {
            if (e.children().empty()) {
                out += "0";
                return;
            }
            if (nested) out += "(";
            bool first = true;
            for (const auto& c : e.children()) {
                ParamExpr rest;
                if (!first && negated_product(c, rest)) {
                    out += " - ";
                    print(rest, out, true);
                } else {
                    if (!first) out += " + ";
                    print(c, out, false);
                }
                first = false;
            }
            if (nested) out += ")";
            return;
        }
        case Kind::Product: {
            if (e.children().empty()) {
                out += "1";
                return;
            }
            bool first = true;
            for (const auto& c : e.children()) {
                if (!first) out += "*";
                print(c, out, true);
                first = false;
            }
            return;
        }
    }
}

}  // namespace

std::string ParamExpr::to_string() const {
    std::string out;
    print(*this, out, false);
    return out;
}

// ---------------------------------------------------------------------------
// Parser

namespace {

class ExprParser {
public:
    explicit ExprParser(std::string_view text) : text_(text) {}

    ParamExpr parse() {
        ParamExpr e = parse_sum();
        skip_space();
        if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
        return e;
    }

private:
    std::string_view text_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& what) const {
        throw ExpressionSyntaxError(std::string(text_), pos_, what);
    }

    void skip_space() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip_space();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    ParamExpr parse_sum() {
        std::vector<ParamExpr> terms{parse_product()};
        for (;;) {
            if (accept('+')) {
                terms.push_back(parse_product());
            } else if (accept('-')) {
                terms.push_back(ParamExpr::product({ParamExpr::constant(-1), parse_product()}));
            } else {
                break;
            }
        }
        return terms.size() == 1 ? terms.front() : ParamExpr::sum(std::move(terms));
    }

    ParamExpr parse_product() {
        std::vector<ParamExpr> factors{parse_unary()};
        while (accept('*')) factors.push_back(parse_unary());
        return factors.size() == 1 ? factors.front() : ParamExpr::product(std::move(factors));
    }

    ParamExpr parse_unary() {
        if (accept('-')) return ParamExpr::product({ParamExpr::constant(-1), parse_unary()});
        if (accept('+')) return parse_unary();
        return parse_primary();
    }

    std::string_view scan_number() {
        std::size_t start = pos_;
        while (pos_ < text_.size() && (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.')) {
            ++pos_;
        }
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            std::size_t save = pos_++;
            if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
            if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
                while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
            } else {
                pos_ = save;
            }
        }
        return text_.substr(start, pos_ - start);
    }

    ParamExpr parse_primary() {
        skip_space();
        if (pos_ >= text_.size()) fail("unexpected end of input");
        char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            ParamExpr inner = parse_sum();
            if (!accept(')')) fail("expected ')'");
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            std::size_t start = pos_;
            Rational value;
            try {
                value = parse_rational(scan_number());
                skip_space();
                if (pos_ < text_.size() && text_[pos_] == '/') {
                    ++pos_;
                    skip_space();
                    Rational den = parse_rational(scan_number());
                    if (den == 0) fail("zero denominator");
                    value /= den;
                }
            } catch (const ExpressionSyntaxError&) {
                throw;
            } catch (const Error& e) {
                pos_ = start;
                fail(e.what());
            }
            return ParamExpr::constant(value);
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t start = pos_;
            while (pos_ < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
                ++pos_;
            }
            return ParamExpr::var(std::string(text_.substr(start, pos_ - start)));
        }
        fail("unexpected '" + std::string(1, c) + "'");
    }
};

}  // namespace

ParamExpr ParamExpr::parse(std::string_view text) { return ExprParser(text).parse(); }

// ---------------------------------------------------------------------------
// Evaluation and checks

Rational evaluate(const ParamExpr& expr, const Valuation& v) {
    using Kind = ParamExpr::Kind;
    switch (expr.kind()) {
        case Kind::Const: return expr.value();
        case Kind::Var: return v.at(expr.name());
        case Kind::Sum: {
            Rational acc = 0;
            for (const auto& c : expr.children()) acc += evaluate(c, v);
            return acc;
        }
        case Kind::Product: {
            Rational acc = 1;
            for (const auto& c : expr.children()) acc *= evaluate(c, v);
            return acc;
        }
    }
    return 0;
}

double evaluate(const ParamExpr& expr, const std::map<ParameterId, double>& v) {
    using Kind = ParamExpr::Kind;
    switch (expr.kind()) {
        case Kind::Const: return to_double(expr.value());
        case Kind::Var: {
            auto it = v.find(expr.name());
            if (it == v.end()) throw MissingParameter(expr.name());
            return it->second;
        }
        case Kind::Sum: {
            double acc = 0;
            for (const auto& c : expr.children()) acc += evaluate(c, v);
            return acc;
        }
        case Kind::Product: {
            double acc = 1;
            for (const auto& c : expr.children()) acc *= evaluate(c, v);
            return acc;
        }
    }
    return 0;
}

bool is_multi_affine(const ParamExpr& expr) { return expr.expand().max_degree_per_parameter() <= 1; }

std::string WellFormedness::describe() const {
    switch (status) {
        case Status::Pass: return "PASS";
        case Status::NotMultiAffine: return "expression " + std::to_string(expr_index) + " is not multi-affine";
        case Status::NonUnitSum: return "row sums to 1 + (" + residual.to_string() + ")";
        case Status::NegativeAtCorner:
            return "expression " + std::to_string(expr_index) + " is negative at corner " + corner.to_string();
    }
    return {};
}

WellFormedness check_distribution_row(std::span<const ParamExpr> exprs, const ParameterRegion& region) {
    WellFormedness result;
    Polynomial total;
    for (std::size_t i = 0; i < exprs.size(); ++i) {
        Polynomial p = exprs[i].expand();
        if (p.max_degree_per_parameter() > 1) {
            result.status = WellFormedness::Status::NotMultiAffine;
            result.expr_index = i;
            return result;
        }
        total += p;
    }
    Polynomial residual = total + Polynomial::constant(-1);
    if (!residual.is_zero()) {
        result.status = WellFormedness::Status::NonUnitSum;
        result.residual = std::move(residual);
        return result;
    }
    for (const auto& corner : region.corners()) {
        for (std::size_t i = 0; i < exprs.size(); ++i) {
            if (evaluate(exprs[i], corner) < 0) {
                result.status = WellFormedness::Status::NegativeAtCorner;
                result.expr_index = i;
                result.corner = corner;
                return result;
            }
        }
    }
    return result;
}

}  // namespace certbench

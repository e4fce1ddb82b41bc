#include "certbench/rational.hpp"

#include "certbench/errors.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <system_error>

namespace certbench {

namespace {

bool all_digits(std::string_view s) {
    if (s.empty()) return false;
    for (char c : s) {
        if (c < '0' || c > '9') return false;
    }
    return true;
}

Rational parse_decimal(std::string_view text, std::string_view original) {
    auto fail = [&] { throw Error("invalid number '" + std::string(original) + "'"); };
    bool negative = false;
    if (!text.empty() && (text.front() == '-' || text.front() == '+')) {
        negative = text.front() == '-';
        text.remove_prefix(1);
    }
    long exponent = 0;
    if (auto e = text.find_first_of("eE"); e != std::string_view::npos) {
        auto exp_text = text.substr(e + 1);
        bool exp_negative = false;
        if (!exp_text.empty() && (exp_text.front() == '-' || exp_text.front() == '+')) {
            exp_negative = exp_text.front() == '-';
            exp_text.remove_prefix(1);
        }
        if (!all_digits(exp_text) || exp_text.size() > 6) fail();
        exponent = std::stol(std::string(exp_text));
        if (exp_negative) exponent = -exponent;
        text = text.substr(0, e);
    }
    std::string digits;
    long fraction_digits = 0;
    if (auto dot = text.find('.'); dot != std::string_view::npos) {
        auto whole = text.substr(0, dot);
        auto frac = text.substr(dot + 1);
        if (whole.empty() && frac.empty()) fail();
        if ((!whole.empty() && !all_digits(whole)) || (!frac.empty() && !all_digits(frac))) fail();
        digits = std::string(whole) + std::string(frac);
        fraction_digits = static_cast<long>(frac.size());
    } else {
        if (!all_digits(text)) fail();
        digits = std::string(text);
    }
    mpz_class numerator(digits, 10);
    long scale = exponent - fraction_digits;
    mpz_class power;
    mpz_ui_pow_ui(power.get_mpz_t(), 10, static_cast<unsigned long>(scale < 0 ? -scale : scale));
    Rational result = scale < 0 ? Rational(numerator, power) : Rational(numerator * power);
    result.canonicalize();
    return negative ? Rational(-result) : result;
}

}  // namespace

Rational parse_rational(std::string_view text) {
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
    if (text.empty()) throw Error("empty number");
    if (auto slash = text.find('/'); slash != std::string_view::npos) {
        Rational num = parse_decimal(text.substr(0, slash), text);
        Rational den = parse_decimal(text.substr(slash + 1), text);
        if (den == 0) throw Error("zero denominator in '" + std::string(text) + "'");
        return num / den;
    }
    return parse_decimal(text, text);
}

std::string to_string(const Rational& value) {
    mpz_class den = value.get_den();
    unsigned long twos = mpz_remove(den.get_mpz_t(), den.get_mpz_t(), mpz_class(2).get_mpz_t());
    unsigned long fives = mpz_remove(den.get_mpz_t(), den.get_mpz_t(), mpz_class(5).get_mpz_t());
    if (den != 1) return value.get_str(10);

    unsigned long places = std::max(twos, fives);
    mpz_class scale;
    mpz_ui_pow_ui(scale.get_mpz_t(), 10, places);
    mpz_class scaled = value.get_num() * scale / value.get_den();
    bool negative = scaled < 0;
    if (negative) scaled = -scaled;
    std::string digits = scaled.get_str(10);
    if (places > 0) {
        if (digits.size() <= places) digits.insert(0, places - digits.size() + 1, '0');
        digits.insert(digits.size() - places, ".");
    }
    return negative ? "-" + digits : digits;
}

double to_double(const Rational& value) {
    double truncated = value.get_d();
    if (!std::isfinite(truncated) || Rational(truncated) == value) return truncated;
    double away = std::nextafter(truncated, value > 0 ? std::numeric_limits<double>::infinity()
                                                      : -std::numeric_limits<double>::infinity());
    Rational err_truncated = abs(value - Rational(truncated));
    Rational err_away = abs(Rational(away) - value);
    if (err_away < err_truncated) return away;
    if (err_truncated < err_away) return truncated;
    // Tie: pick the candidate with an even mantissa.
    int exp = 0;
    double mantissa = std::frexp(truncated, &exp);
    auto bits = static_cast<long long>(std::ldexp(mantissa, 53));
    return (bits % 2 == 0) ? truncated : away;
}

std::string format_double(double value) {
    char buffer[64];
    auto [end, ec] = std::to_chars(buffer, buffer + sizeof buffer, value);
    if (ec != std::errc()) throw Error("cannot format double");
    return std::string(buffer, end);
}

Rational decimal_rational(double value) {
    if (!std::isfinite(value)) throw Error("non-finite number");
    return parse_rational(format_double(value));
}

}  // namespace certbench

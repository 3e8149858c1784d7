#include "bch/rational.hpp"

#include "bch/errors.hpp"

#include <limits>

namespace bch {

namespace {

using u128 = unsigned __int128;

std::uint64_t narrow(u128 v) {
    if (v > std::numeric_limits<std::uint64_t>::max()) {
        throw Error(ErrorCode::InvalidArgument, "rational arithmetic overflow");
    }
    return static_cast<std::uint64_t>(v);
}

}  // namespace

const char* to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidArgument: return "invalid-argument";
        case ErrorCode::EmptySystem: return "empty-system";
        case ErrorCode::AlreadyPresent: return "already-present";
        case ErrorCode::NotFound: return "not-found";
        case ErrorCode::InvalidOperation: return "invalid-operation";
        case ErrorCode::Infeasible: return "infeasible";
    }
    return "unknown";
}

Rational::Rational(std::uint64_t num, std::uint64_t den) {
    if (den == 0) throw Error(ErrorCode::InvalidArgument, "rational with zero denominator");
    const std::uint64_t g = std::gcd(num, den);
    num_ = g ? num / g : 0;
    den_ = g ? den / g : 1;
}

Rational Rational::parse_decimal(std::string_view text) {
    if (text.empty()) throw Error(ErrorCode::InvalidArgument, "empty decimal");
    std::uint64_t num = 0;
    std::uint64_t den = 1;
    bool seen_point = false;
    bool seen_digit = false;
    for (char ch : text) {
        if (ch == '.') {
            if (seen_point) throw Error(ErrorCode::InvalidArgument, "malformed decimal: " + std::string(text));
            seen_point = true;
            continue;
        }
        if (ch < '0' || ch > '9') {
            throw Error(ErrorCode::InvalidArgument, "malformed decimal: " + std::string(text));
        }
        seen_digit = true;
        if (num > std::numeric_limits<std::uint64_t>::max() / 10 || (seen_point && den > std::numeric_limits<std::uint64_t>::max() / 10)) {
            throw Error(ErrorCode::InvalidArgument, "decimal too long: " + std::string(text));
        }
        num = num * 10 + static_cast<std::uint64_t>(ch - '0');
        if (seen_point) den *= 10;
    }
    if (!seen_digit) throw Error(ErrorCode::InvalidArgument, "malformed decimal: " + std::string(text));
    return Rational(num, den);
}

std::uint64_t Rational::ceil_mul(std::uint64_t k) const { return ceil_mul_div(k, 1); }

std::uint64_t Rational::floor_mul(std::uint64_t k) const { return floor_mul_div(k, 1); }

std::uint64_t Rational::ceil_mul_div(std::uint64_t k, std::uint64_t d) const {
    const u128 top = static_cast<u128>(num_) * k;
    const u128 bottom = static_cast<u128>(den_) * d;
    return narrow((top + bottom - 1) / bottom);
}

std::uint64_t Rational::floor_mul_div(std::uint64_t k, std::uint64_t d) const {
    const u128 top = static_cast<u128>(num_) * k;
    const u128 bottom = static_cast<u128>(den_) * d;
    return narrow(top / bottom);
}

bool Rational::mul_less_than(std::uint64_t k, std::uint64_t d) const {
    return static_cast<u128>(num_) * k < static_cast<u128>(den_) * d;
}

Rational operator+(const Rational& a, const Rational& b) {
    const u128 num = static_cast<u128>(a.num_) * b.den_ + static_cast<u128>(b.num_) * a.den_;
    const u128 den = static_cast<u128>(a.den_) * b.den_;
    // Reduce before narrowing so decimal inputs with shared powers of ten fit.
    u128 x = num, y = den;
    while (y != 0) {
        const u128 t = x % y;
        x = y;
        y = t;
    }
    const u128 g = x == 0 ? 1 : x;
    return Rational(narrow(num / g), narrow(den / g));
}

std::string Rational::to_string() const {
    if (den_ == 1) return std::to_string(num_);
    return std::to_string(num_) + "/" + std::to_string(den_);
}

}  // namespace bch

#pragma once

#include <cstdint>
#include <numeric>
#include <string>
#include <string_view>

namespace bch {

// Exact non-negative rational used for the balancing parameter c = 1 + eps.
// Keeping c exact means ceil(c*m) and floor(c*m/n) are computed in integer
// arithmetic with no floating point drift.
class Rational {
public:
    constexpr Rational() = default;
    Rational(std::uint64_t num, std::uint64_t den);

    // Parses a plain decimal such as "0.05", "3" or "1.25". Exponents and
    // signs are rejected.
    static Rational parse_decimal(std::string_view text);

    std::uint64_t num() const noexcept { return num_; }
    std::uint64_t den() const noexcept { return den_; }

    double to_double() const noexcept { return static_cast<double>(num_) / static_cast<double>(den_); }

    // ceil(this * k)
    std::uint64_t ceil_mul(std::uint64_t k) const;
    // floor(this * k)
    std::uint64_t floor_mul(std::uint64_t k) const;
    // ceil(this * k / d)
    std::uint64_t ceil_mul_div(std::uint64_t k, std::uint64_t d) const;
    // floor(this * k / d)
    std::uint64_t floor_mul_div(std::uint64_t k, std::uint64_t d) const;
    // this * k < d
    bool mul_less_than(std::uint64_t k, std::uint64_t d) const;

    friend Rational operator+(const Rational& a, const Rational& b);
    friend bool operator==(const Rational& a, const Rational& b) = default;
    friend bool operator<(const Rational& a, const Rational& b) {
        return static_cast<unsigned __int128>(a.num_) * b.den_ <
               static_cast<unsigned __int128>(b.num_) * a.den_;
    }
    friend bool operator>(const Rational& a, const Rational& b) { return b < a; }
    friend bool operator<=(const Rational& a, const Rational& b) { return !(b < a); }

    std::string to_string() const;

private:
    std::uint64_t num_ = 0;
    std::uint64_t den_ = 1;
};

}  // namespace bch

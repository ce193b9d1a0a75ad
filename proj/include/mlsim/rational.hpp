#pragma once
// Exact rational arithmetic for simulated time and level frequencies.
// Firing times are k/f sums; doubles would drift, rationals do not.

#include <cstdint>
#include <numeric>
#include <string>

#include "mlsim/core.hpp"

namespace mlsim {

class Rational {
public:
    Rational() = default;
    Rational(std::int64_t n) : num_(n) {}  // NOLINT: implicit from integer is intended
    Rational(std::int64_t n, std::int64_t d) : num_(n), den_(d) { normalize(); }

    std::int64_t num() const { return num_; }
    std::int64_t den() const { return den_; }

    double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }

    // "n" when integral, "n/d" otherwise.
    std::string str() const {
        std::string s = std::to_string(num_);
        if (den_ != 1) s += "/" + std::to_string(den_);
        return s;
    }

    friend Rational operator+(const Rational& a, const Rational& b) {
        return make(i128(a.num_) * b.den_ + i128(b.num_) * a.den_, i128(a.den_) * b.den_);
    }
    friend Rational operator-(const Rational& a, const Rational& b) {
        return make(i128(a.num_) * b.den_ - i128(b.num_) * a.den_, i128(a.den_) * b.den_);
    }
    friend Rational operator*(const Rational& a, const Rational& b) {
        return make(i128(a.num_) * b.num_, i128(a.den_) * b.den_);
    }
    friend Rational operator/(const Rational& a, const Rational& b) {
        if (b.num_ == 0) throw Error(Errc::overflow, "rational division by zero");
        return make(i128(a.num_) * b.den_, i128(a.den_) * b.num_);
    }
    Rational& operator+=(const Rational& o) { return *this = *this + o; }
    Rational& operator-=(const Rational& o) { return *this = *this - o; }

    friend bool operator==(const Rational& a, const Rational& b) {
        return a.num_ == b.num_ && a.den_ == b.den_;
    }
    friend bool operator<(const Rational& a, const Rational& b) {
        return i128(a.num_) * b.den_ < i128(b.num_) * a.den_;
    }
    friend bool operator<=(const Rational& a, const Rational& b) { return a == b || a < b; }
    friend bool operator>(const Rational& a, const Rational& b) { return b < a; }
    friend bool operator>=(const Rational& a, const Rational& b) { return b <= a; }
    friend bool operator!=(const Rational& a, const Rational& b) { return !(a == b); }

    Rational reciprocal() const { return Rational(1) / *this; }

    // Largest integer <= value.
    std::int64_t floor() const {
        std::int64_t q = num_ / den_;
        if (num_ % den_ != 0 && num_ < 0) --q;
        return q;
    }
    std::int64_t ceil() const {
        std::int64_t q = num_ / den_;
        if (num_ % den_ != 0 && num_ > 0) ++q;
        return q;
    }

    // Parses "n", "n/d", or a plain decimal ("0.25" -> 1/4, exactly).
    static Rational parse(const std::string& text) {
        if (text.empty()) throw Error(Errc::parse, "empty rational");
        auto slash = text.find('/');
        try {
            if (slash != std::string::npos) {
                return Rational(std::stoll(text.substr(0, slash)), std::stoll(text.substr(slash + 1)));
            }
            auto dot = text.find('.');
            if (dot == std::string::npos) return Rational(std::stoll(text));
            std::string whole = text.substr(0, dot), frac = text.substr(dot + 1);
            if (whole.empty() || whole == "-" || whole == "+") whole += "0";
            std::int64_t den = 1;
            for (std::size_t i = 0; i < frac.size(); ++i) {
                if (den > 1'000'000'000'000'000LL) throw Error(Errc::parse, "too many decimals: " + text);
                den *= 10;
            }
            std::int64_t w = std::stoll(whole);
            std::int64_t f = frac.empty() ? 0 : std::stoll(frac);
            bool neg = !text.empty() && text[0] == '-';
            std::int64_t mag = (w < 0 ? -w : w) * den + f;
            return Rational(neg ? -mag : mag, den);
        } catch (const std::invalid_argument&) {
            throw Error(Errc::parse, "bad rational: " + text);
        } catch (const std::out_of_range&) {
            throw Error(Errc::parse, "rational out of range: " + text);
        }
    }

private:
    using i128 = __int128;

    static Rational make(i128 n, i128 d) {
        if (d == 0) throw Error(Errc::overflow, "rational with zero denominator");
        if (d < 0) { n = -n; d = -d; }
        i128 g = gcd128(n < 0 ? -n : n, d);
        if (g > 1) { n /= g; d /= g; }
        constexpr i128 lim = INT64_MAX;
        if (n > lim || n < -lim || d > lim) throw Error(Errc::overflow, "rational overflow");
        Rational r;
        r.num_ = static_cast<std::int64_t>(n);
        r.den_ = static_cast<std::int64_t>(d);
        return r;
    }

    static i128 gcd128(i128 a, i128 b) {
        while (b != 0) { i128 t = a % b; a = b; b = t; }
        return a < 0 ? -a : (a == 0 ? 1 : a);
    }

    void normalize() { *this = make(num_, den_); }

    std::int64_t num_ = 0;
    std::int64_t den_ = 1;
};

}  // namespace mlsim

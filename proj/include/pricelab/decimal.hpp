#pragma once

#include <charconv>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace pricelab {

// Fixed-point decimal with six fractional digits. Sums are exact, so panel
// construction does not depend on record order.
class Decimal {
public:
    static constexpr int digits = 6;
    static constexpr std::int64_t scale = 1'000'000;

    constexpr Decimal() = default;
    static constexpr Decimal from_units(std::int64_t units) {
        Decimal d;
        d.units_ = units;
        return d;
    }

    // Plain decimal notation: optional sign, digits, optional '.' fraction.
    // More than six fractional digits is accepted only if the excess is zeros.
    static std::optional<Decimal> parse(std::string_view text) {
        while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
        while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
        if (text.empty()) return std::nullopt;
        bool negative = false;
        if (text.front() == '-' || text.front() == '+') {
            negative = text.front() == '-';
            text.remove_prefix(1);
        }
        auto dot = text.find('.');
        std::string_view whole = text.substr(0, dot);
        std::string_view frac = dot == std::string_view::npos ? std::string_view{} : text.substr(dot + 1);
        if (whole.empty() && frac.empty()) return std::nullopt;
        if (whole.size() > 12) return std::nullopt;
        for (char c : whole)
            if (c < '0' || c > '9') return std::nullopt;
        for (char c : frac)
            if (c < '0' || c > '9') return std::nullopt;
        std::int64_t units = 0;
        if (!whole.empty()) {
            auto r = std::from_chars(whole.data(), whole.data() + whole.size(), units);
            if (r.ec != std::errc{}) return std::nullopt;
        }
        units *= scale;
        std::int64_t place = scale / 10;
        for (std::size_t i = 0; i < frac.size(); ++i) {
            int digit = frac[i] - '0';
            if (i < static_cast<std::size_t>(digits)) {
                units += digit * place;
                place /= 10;
            } else if (digit != 0) {
                return std::nullopt;
            }
        }
        return from_units(negative ? -units : units);
    }

    static Decimal from_double(double value) {
        double scaled = value * static_cast<double>(scale);
        return from_units(static_cast<std::int64_t>(scaled < 0 ? scaled - 0.5 : scaled + 0.5));
    }

    constexpr std::int64_t units() const { return units_; }
    constexpr double to_double() const { return static_cast<double>(units_) / static_cast<double>(scale); }

    // Shortest exact decimal text: trailing fractional zeros dropped.
    std::string str() const {
        std::int64_t abs = units_ < 0 ? -units_ : units_;
        std::string out = units_ < 0 ? "-" : "";
        out += std::to_string(abs / scale);
        std::int64_t frac = abs % scale;
        if (frac != 0) {
            std::string f = std::to_string(frac);
            f.insert(0, digits - f.size(), '0');
            while (f.back() == '0') f.pop_back();
            out += '.';
            out += f;
        }
        return out;
    }

    constexpr Decimal& operator+=(Decimal other) {
        units_ += other.units_;
        return *this;
    }
    constexpr Decimal operator+(Decimal other) const { return from_units(units_ + other.units_); }
    constexpr Decimal operator-() const { return from_units(-units_); }
    constexpr auto operator<=>(const Decimal&) const = default;

private:
    std::int64_t units_ = 0;
};

} // namespace pricelab

#pragma once

#include <charconv>
#include <compare>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

namespace pricelab {

// Calendar year-month, ordered and usable as a dense index via ordinal().
class Month {
public:
    constexpr Month() = default;
    constexpr Month(int year, int month) : ordinal_(year * 12 + (month - 1)) {}

    static constexpr Month from_ordinal(int ordinal) {
        Month m;
        m.ordinal_ = ordinal;
        return m;
    }

    // Accepts "YYYY-MM" only.
    static std::optional<Month> parse(std::string_view text) {
        if (text.size() != 7 || text[4] != '-') return std::nullopt;
        int year = 0, month = 0;
        auto ry = std::from_chars(text.data(), text.data() + 4, year);
        auto rm = std::from_chars(text.data() + 5, text.data() + 7, month);
        if (ry.ec != std::errc{} || ry.ptr != text.data() + 4) return std::nullopt;
        if (rm.ec != std::errc{} || rm.ptr != text.data() + 7) return std::nullopt;
        if (month < 1 || month > 12 || year < 1) return std::nullopt;
        return Month(year, month);
    }

    constexpr int year() const { return ordinal_ / 12; }
    constexpr int month() const { return ordinal_ % 12 + 1; }
    constexpr int ordinal() const { return ordinal_; }
    constexpr bool is_december() const { return month() == 12; }

    // December of the previous year; a December maps to the one before it.
    constexpr Month previous_december() const { return Month(year() - 1, 12); }

    std::string str() const {
        char buf[16];
        std::snprintf(buf, sizeof buf, "%04d-%02d", year(), month());
        return buf;
    }

    constexpr Month operator+(int months) const { return from_ordinal(ordinal_ + months); }
    constexpr Month operator-(int months) const { return from_ordinal(ordinal_ - months); }
    constexpr int operator-(Month other) const { return ordinal_ - other.ordinal_; }
    constexpr Month& operator++() {
        ++ordinal_;
        return *this;
    }

    constexpr auto operator<=>(const Month&) const = default;

private:
    int ordinal_ = 0;
};

} // namespace pricelab

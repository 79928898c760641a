#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pricelab/error.hpp"
#include "pricelab/month.hpp"

namespace pricelab {

// Shortest text that parses back to the same double.
inline std::string format_double(double value) {
    char buf[32];
    auto r = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, r.ptr);
}

// Shortest round-trip text in plain (non-exponent) notation.
inline std::string format_fixed(double value) {
    char buf[400];
    auto r = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::fixed);
    return std::string(buf, r.ptr);
}

struct SeriesMetadata {
    std::string formula;
    int window = 0;
    std::string splice = "none";
    std::vector<std::string> filters;
    std::string aggregation = "none";
};

struct SeriesPoint {
    Month month;
    double value = 1.0;
};

// A base month plus (month, value) pairs in increasing month order.
class IndexSeries {
public:
    IndexSeries() = default;
    explicit IndexSeries(Month base, SeriesMetadata meta = {}) : base_(base), meta_(std::move(meta)) {}

    Month base() const { return base_; }
    const SeriesMetadata& metadata() const { return meta_; }
    SeriesMetadata& metadata() { return meta_; }
    const std::vector<SeriesPoint>& points() const { return points_; }
    std::size_t size() const { return points_.size(); }
    bool empty() const { return points_.empty(); }

    void append(Month month, double value) {
        if (!points_.empty() && month <= points_.back().month)
            throw DataError("series months must increase: " + month.str());
        if (!std::isfinite(value) || value <= 0.0)
            throw NumericalError("non-positive or non-finite index value at " + month.str());
        points_.push_back({month, value});
    }

    std::optional<double> at(Month month) const {
        auto it = std::lower_bound(points_.begin(), points_.end(), month,
                                   [](const SeriesPoint& p, Month m) { return p.month < m; });
        if (it == points_.end() || it->month != month) return std::nullopt;
        return it->value;
    }

    double value(Month month) const {
        auto v = at(month);
        if (!v) throw DataError("series has no value at " + month.str());
        return *v;
    }

private:
    Month base_;
    SeriesMetadata meta_;
    std::vector<SeriesPoint> points_;
};

} // namespace pricelab

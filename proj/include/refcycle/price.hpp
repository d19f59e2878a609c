#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace refcycle {

/// Exact rational price level. Always stored reduced with a positive denominator.
class Price {
public:
    constexpr Price() = default;
    Price(std::int64_t num, std::int64_t den = 1);

    /// Parses "12", "-3", "0.85", "1.5e-1" or "7/4".
    static Price parse(std::string_view text);
    /// Converts through the shortest round-trip decimal form of `value`, so
    /// 0.85 maps to 17/20 rather than the nearest binary fraction.
    static Price from_double(double value);

    std::int64_t num() const { return num_; }
    std::int64_t den() const { return den_; }
    double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }
    /// Decimal when the denominator divides a power of ten, "n/d" otherwise.
    std::string to_string() const;

    friend bool operator==(const Price&, const Price&) = default;
    friend std::strong_ordering operator<=>(const Price& a, const Price& b);

private:
    std::int64_t num_ = 0;
    std::int64_t den_ = 1;
};

}  // namespace refcycle

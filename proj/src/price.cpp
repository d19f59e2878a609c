#include "refcycle/price.hpp"

#include "refcycle/errors.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <system_error>

namespace refcycle {

namespace {

__extension__ using i128 = __int128;

constexpr std::int64_t kMaxMagnitude = std::numeric_limits<std::int64_t>::max() / 10;

std::int64_t parse_int(std::string_view text, std::string_view whole) {
    std::int64_t value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size())
        throw ValidationError("invalid price '" + std::string(whole) + "'");
    return value;
}

}  // namespace

Price::Price(std::int64_t num, std::int64_t den) : num_(num), den_(den) {
    if (den_ == 0) throw ValidationError("price with zero denominator");
    if (den_ < 0) {
        num_ = -num_;
        den_ = -den_;
    }
    const std::int64_t g = std::gcd(num_, den_);
    if (g > 1) {
        num_ /= g;
        den_ /= g;
    }
}

Price Price::parse(std::string_view text) {
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
    if (text.empty()) throw ValidationError("empty price");
    const std::string_view whole = text;

    if (auto slash = text.find('/'); slash != std::string_view::npos)
        return Price(parse_int(text.substr(0, slash), whole), parse_int(text.substr(slash + 1), whole));

    int exponent = 0;
    if (auto e = text.find_first_of("eE"); e != std::string_view::npos) {
        std::string_view digits = text.substr(e + 1);
        if (!digits.empty() && digits.front() == '+') digits.remove_prefix(1);
        const std::int64_t parsed = parse_int(digits, whole);
        if (parsed > 40 || parsed < -40) throw ValidationError("price exponent out of range '" + std::string(whole) + "'");
        exponent = static_cast<int>(parsed);
        text = text.substr(0, e);
    }
    bool negative = false;
    if (!text.empty() && (text.front() == '-' || text.front() == '+')) {
        negative = text.front() == '-';
        text.remove_prefix(1);
    }
    std::int64_t mantissa = 0;
    bool seen_digit = false;
    bool seen_point = false;
    for (char ch : text) {
        if (ch == '.') {
            if (seen_point) throw ValidationError("invalid price '" + std::string(whole) + "'");
            seen_point = true;
            continue;
        }
        if (ch < '0' || ch > '9') throw ValidationError("invalid price '" + std::string(whole) + "'");
        if (mantissa > kMaxMagnitude) throw ValidationError("price out of range '" + std::string(whole) + "'");
        mantissa = mantissa * 10 + (ch - '0');
        seen_digit = true;
        if (seen_point) --exponent;
    }
    if (!seen_digit) throw ValidationError("invalid price '" + std::string(whole) + "'");

    std::int64_t num = negative ? -mantissa : mantissa;
    std::int64_t den = 1;
    for (; exponent > 0; --exponent) {
        if (std::abs(num) > kMaxMagnitude) throw ValidationError("price out of range '" + std::string(whole) + "'");
        num *= 10;
    }
    for (; exponent < 0; ++exponent) {
        if (den > kMaxMagnitude) throw ValidationError("price out of range '" + std::string(whole) + "'");
        den *= 10;
    }
    return Price(num, den);
}

Price Price::from_double(double value) {
    if (!std::isfinite(value)) throw ValidationError("non-finite price");
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    if (ec != std::errc{}) throw ValidationError("cannot format price");
    return parse(std::string_view(buf, static_cast<std::size_t>(ptr - buf)));
}

std::string Price::to_string() const {
    if (den_ == 1) return std::to_string(num_);
    std::int64_t d = den_;
    int twos = 0;
    int fives = 0;
    while (d % 2 == 0) {
        d /= 2;
        ++twos;
    }
    while (d % 5 == 0) {
        d /= 5;
        ++fives;
    }
    if (d != 1) return std::to_string(num_) + "/" + std::to_string(den_);

    const int digits = std::max(twos, fives);
    std::int64_t scale = 1;
    for (int i = 0; i < digits; ++i) scale *= 10;
    i128 scaled = static_cast<i128>(num_) * (scale / den_);
    const bool negative = scaled < 0;
    if (negative) scaled = -scaled;
    const auto whole = static_cast<std::int64_t>(scaled / scale);
    auto frac = static_cast<std::int64_t>(scaled % scale);
    std::string frac_text(static_cast<std::size_t>(digits), '0');
    for (int i = digits - 1; i >= 0; --i) {
        frac_text[static_cast<std::size_t>(i)] = static_cast<char>('0' + frac % 10);
        frac /= 10;
    }
    while (!frac_text.empty() && frac_text.back() == '0') frac_text.pop_back();
    return (negative ? "-" : "") + std::to_string(whole) + "." + frac_text;
}

std::strong_ordering operator<=>(const Price& a, const Price& b) {
    const i128 lhs = static_cast<i128>(a.num_) * b.den_;
    const i128 rhs = static_cast<i128>(b.num_) * a.den_;
    if (lhs < rhs) return std::strong_ordering::less;
    if (lhs > rhs) return std::strong_ordering::greater;
    return std::strong_ordering::equal;
}

}  // namespace refcycle

#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mmn {

using Date = std::chrono::year_month_day;

/// Parses `YYYY-MM-DD`. Throws ParseError on anything else, including
/// calendar-invalid dates such as 2025-02-30.
Date parse_iso_date(std::string_view text);
std::string format_iso_date(const Date& d);

/// One call quote. Prices are in the underlying's price units, expiry in
/// trading days.
struct OptionQuote {
    int expiry_days = 0;
    double strike = 0.0;
    double last_price = 0.0;
    double bid = 0.0;
    double ask = 0.0;
    std::int64_t volume = 0;
    std::int64_t open_interest = 0;
    double moneyness = 0.0;  ///< strike / spot, set at load

    bool operator==(const OptionQuote&) const = default;
};

/// A single day's call chain. Quotes are sorted by (expiry_days, strike)
/// with no duplicate keys.
struct OptionChain {
    std::string symbol;
    Date quote_date{};
    double spot = 0.0;
    double annual_rate = 0.0;
    std::vector<OptionQuote> quotes;
};

/// Daily arithmetic returns, dates strictly increasing. `window` is the count.
struct ReturnSeries {
    std::vector<Date> dates;
    std::vector<double> returns;
    std::size_t window = 0;
};

enum class ReturnsFormat { returns, prices };

/// Reads a chain CSV with header
/// `expiry_days,strike,last_price,bid,ask,volume,open_interest`.
OptionChain load_chain(const std::filesystem::path& path, double spot, double annual_rate,
                       Date quote_date, std::string symbol = {});
OptionChain read_chain(std::istream& in, double spot, double annual_rate, Date quote_date,
                       std::string symbol = {});

/// Writes the chain back in the same CSV schema (moneyness is not a column).
void write_chain(std::ostream& out, const OptionChain& chain);

/// Drops zero-price quotes and quotes with both zero volume and zero open
/// interest. Everything else is passed through untouched.
OptionChain clean_chain(const OptionChain& chain);

/// `first` holds expiries <= boundary_days, `second` the rest.
std::pair<OptionChain, OptionChain> split_by_horizon(const OptionChain& chain, int boundary_days);

/// `date,return` in returns mode; `date,price` in prices mode, where n prices
/// become n-1 returns P_k / P_{k-1} - 1 dated at the later day.
ReturnSeries load_returns(const std::filesystem::path& path,
                          ReturnsFormat format = ReturnsFormat::returns);
ReturnSeries read_returns(std::istream& in, ReturnsFormat format = ReturnsFormat::returns);

}  // namespace mmn

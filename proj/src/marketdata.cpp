#include "mmnoise/marketdata.hpp"

#include "mmnoise/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace mmn {

namespace {

constexpr std::string_view kChainHeader =
    "expiry_days,strike,last_price,bid,ask,volume,open_interest";

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            return out;
        }
        out.push_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
}

template <typename T>
T parse_number(std::string_view field, std::string_view column, std::size_t line) {
    T value{};
    const auto* first = field.data();
    const auto* last = field.data() + field.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (field.empty() || ec != std::errc{} || ptr != last) {
        throw ParseError("cannot parse " + std::string(column) + " value '" +
                             std::string(field) + "'",
                         line);
    }
    if constexpr (std::is_floating_point_v<T>) {
        if (!std::isfinite(value)) {
            throw ParseError("non-finite " + std::string(column), line);
        }
    }
    return value;
}

std::ifstream open_or_throw(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    return in;
}

}  // namespace

Date parse_iso_date(std::string_view text) {
    text = trim(text);
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
        throw ParseError("expected ISO date YYYY-MM-DD, got '" + std::string(text) + "'");
    }
    int y = 0;
    unsigned m = 0;
    unsigned d = 0;
    auto digits = [&](std::string_view s, auto& out) {
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
        if (ec != std::errc{} || ptr != s.data() + s.size()) {
            throw ParseError("expected ISO date YYYY-MM-DD, got '" + std::string(text) + "'");
        }
    };
    digits(text.substr(0, 4), y);
    digits(text.substr(5, 2), m);
    digits(text.substr(8, 2), d);
    const Date date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
    if (!date.ok()) throw ParseError("invalid calendar date '" + std::string(text) + "'");
    return date;
}

std::string format_iso_date(const Date& d) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()),
                  static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
    return buf;
}

OptionChain read_chain(std::istream& in, double spot, double annual_rate, Date quote_date,
                       std::string symbol) {
    if (!(spot > 0.0) || !std::isfinite(spot)) throw DomainError("spot must be positive");
    if (!(annual_rate >= 0.0) || !std::isfinite(annual_rate))
        throw DomainError("annual rate must be non-negative");

    OptionChain chain;
    chain.symbol = std::move(symbol);
    chain.quote_date = quote_date;
    chain.spot = spot;
    chain.annual_rate = annual_rate;

    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        const auto view = trim(line);
        if (view.empty()) continue;
        if (!header_seen) {
            if (view != kChainHeader) {
                throw ParseError("expected header '" + std::string(kChainHeader) + "'", line_no);
            }
            header_seen = true;
            continue;
        }
        const auto f = split_fields(view);
        if (f.size() != 7) {
            throw ParseError("expected 7 fields, got " + std::to_string(f.size()), line_no);
        }
        OptionQuote q;
        q.expiry_days = parse_number<int>(f[0], "expiry_days", line_no);
        q.strike = parse_number<double>(f[1], "strike", line_no);
        q.last_price = parse_number<double>(f[2], "last_price", line_no);
        q.bid = parse_number<double>(f[3], "bid", line_no);
        q.ask = parse_number<double>(f[4], "ask", line_no);
        q.volume = parse_number<std::int64_t>(f[5], "volume", line_no);
        q.open_interest = parse_number<std::int64_t>(f[6], "open_interest", line_no);
        if (q.expiry_days < 1) throw ParseError("expiry_days must be >= 1", line_no);
        if (!(q.strike > 0.0)) throw ParseError("strike must be positive", line_no);
        if (q.last_price < 0.0) throw ParseError("last_price must be non-negative", line_no);
        if (q.volume < 0 || q.open_interest < 0)
            throw ParseError("volume and open_interest must be non-negative", line_no);
        q.moneyness = q.strike / spot;
        chain.quotes.push_back(q);
    }
    if (!header_seen) throw ParseError("missing header", line_no);

    std::sort(chain.quotes.begin(), chain.quotes.end(), [](const auto& a, const auto& b) {
        return a.expiry_days != b.expiry_days ? a.expiry_days < b.expiry_days
                                              : a.strike < b.strike;
    });
    const auto dup = std::adjacent_find(
        chain.quotes.begin(), chain.quotes.end(), [](const auto& a, const auto& b) {
            return a.expiry_days == b.expiry_days && a.strike == b.strike;
        });
    if (dup != chain.quotes.end()) {
        std::ostringstream msg;
        msg << "duplicate quote for expiry_days=" << dup->expiry_days
            << " strike=" << dup->strike;
        throw DuplicateKeyError(msg.str());
    }
    return chain;
}

OptionChain load_chain(const std::filesystem::path& path, double spot, double annual_rate,
                       Date quote_date, std::string symbol) {
    auto in = open_or_throw(path);
    try {
        return read_chain(in, spot, annual_rate, quote_date, std::move(symbol));
    } catch (const ParseError& e) {
        throw ParseError(path.string(), e);
    }
}

void write_chain(std::ostream& out, const OptionChain& chain) {
    out << kChainHeader << '\n';
    char buf[256];
    for (const auto& q : chain.quotes) {
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g,%lld,%lld\n", q.expiry_days,
                      q.strike, q.last_price, q.bid, q.ask, static_cast<long long>(q.volume),
                      static_cast<long long>(q.open_interest));
        out << buf;
    }
}

OptionChain clean_chain(const OptionChain& chain) {
    OptionChain out = chain;
    out.quotes.clear();
    for (const auto& q : chain.quotes) {
        if (q.last_price == 0.0) continue;
        if (q.volume == 0 && q.open_interest == 0) continue;
        out.quotes.push_back(q);
    }
    return out;
}

std::pair<OptionChain, OptionChain> split_by_horizon(const OptionChain& chain, int boundary_days) {
    if (boundary_days < 1) throw DomainError("horizon boundary must be >= 1 day");
    OptionChain short_term = chain;
    OptionChain long_term = chain;
    short_term.quotes.clear();
    long_term.quotes.clear();
    for (const auto& q : chain.quotes) {
        (q.expiry_days <= boundary_days ? short_term : long_term).quotes.push_back(q);
    }
    return {std::move(short_term), std::move(long_term)};
}

ReturnSeries read_returns(std::istream& in, ReturnsFormat format) {
    const std::string_view expected =
        format == ReturnsFormat::returns ? "date,return" : "date,price";
    std::vector<Date> dates;
    std::vector<double> values;
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        const auto view = trim(line);
        if (view.empty()) continue;
        if (!header_seen) {
            if (view != expected) {
                throw ParseError("expected header '" + std::string(expected) + "'", line_no);
            }
            header_seen = true;
            continue;
        }
        const auto f = split_fields(view);
        if (f.size() != 2) {
            throw ParseError("expected 2 fields, got " + std::to_string(f.size()), line_no);
        }
        Date d;
        try {
            d = parse_iso_date(f[0]);
        } catch (const ParseError& e) {
            throw ParseError(e.what(), line_no);
        }
        const double v = parse_number<double>(f[1], expected.substr(5), line_no);
        if (!dates.empty() && !(std::chrono::sys_days{dates.back()} < std::chrono::sys_days{d})) {
            throw OrderingError("line " + std::to_string(line_no) + ": date " +
                                format_iso_date(d) + " does not follow " +
                                format_iso_date(dates.back()));
        }
        if (format == ReturnsFormat::prices && !(v > 0.0)) {
            throw ParseError("price must be positive", line_no);
        }
        dates.push_back(d);
        values.push_back(v);
    }
    if (!header_seen) throw ParseError("missing header", line_no);

    ReturnSeries series;
    if (format == ReturnsFormat::returns) {
        series.dates = std::move(dates);
        series.returns = std::move(values);
    } else if (!values.empty()) {
        series.dates.assign(dates.begin() + 1, dates.end());
        series.returns.reserve(values.size() - 1);
        for (std::size_t k = 1; k < values.size(); ++k) {
            series.returns.push_back(values[k] / values[k - 1] - 1.0);
        }
    }
    series.window = series.returns.size();
    return series;
}

ReturnSeries load_returns(const std::filesystem::path& path, ReturnsFormat format) {
    auto in = open_or_throw(path);
    try {
        return read_returns(in, format);
    } catch (const ParseError& e) {
        throw ParseError(path.string(), e);
    } catch (const OrderingError& e) {
        throw OrderingError(path.string() + ": " + e.what());
    }
}

}  // namespace mmn

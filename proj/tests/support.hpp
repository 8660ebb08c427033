#pragma once

// Shared helpers for the test binaries: temp directories, independent
// numerical oracles (quadrature, KS p-values) and synthetic inputs.

#include "mmnoise/marketdata.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

namespace testing {

namespace fs = std::filesystem;

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = fs::temp_directory_path() /
                ("mmnoise_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& name) const { return path_ / name; }

private:
    fs::path path_;
};

inline void write_file(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

inline std::string read_file(const fs::path& p) {
    std::ifstream in(p);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Composite Simpson rule on [a, b] with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n) {
    if (n % 2) ++n;
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

inline double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

/// Standard normal CDF by quadrature of the density; independent of erfc.
inline double normal_cdf_quadrature(double x) {
    const double half = simpson(normal_pdf, 0.0, std::abs(x), 20000);
    return x >= 0 ? 0.5 + half : 0.5 - half;
}

/// E[max(S_T - K, 0)] e^{-r tau} for lognormal S_T, by quadrature over z.
inline double lognormal_call_quadrature(double s, double k, double tau, double r, double vol) {
    const auto payoff = [&](double z) {
        const double st = s * std::exp((r - 0.5 * vol * vol) * tau + vol * std::sqrt(tau) * z);
        return std::max(st - k, 0.0) * normal_pdf(z);
    };
    return std::exp(-r * tau) * simpson(payoff, -12.0, 12.0, 200000);
}

/// Kolmogorov-Smirnov statistic and asymptotic p-value of a sample against
/// a continuous CDF (Stephens' small-sample correction).
struct KsResult {
    double d = 0.0;
    double p_value = 0.0;
};

inline KsResult ks_test(std::vector<double> sample, const std::function<double(double)>& cdf) {
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double f = cdf(sample[i]);
        d = std::max({d, (i + 1) / n - f, f - i / n});
    }
    const double lambda = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
    double p = 0.0;
    for (int k = 1; k <= 100; ++k) {
        p += 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
    }
    return {d, std::clamp(p, 0.0, 1.0)};
}

inline mmn::OptionQuote make_quote(int expiry, double strike, double price, double spot) {
    mmn::OptionQuote q;
    q.expiry_days = expiry;
    q.strike = strike;
    q.last_price = price;
    q.bid = price;
    q.ask = price;
    q.volume = 10;
    q.open_interest = 10;
    q.moneyness = strike / spot;
    return q;
}

inline std::string chain_csv(const std::vector<mmn::OptionQuote>& quotes) {
    std::string s = "expiry_days,strike,last_price,bid,ask,volume,open_interest\n";
    char buf[256];
    for (const auto& q : quotes) {
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g,%lld,%lld\n", q.expiry_days, q.strike,
                      q.last_price, q.bid, q.ask, static_cast<long long>(q.volume),
                      static_cast<long long>(q.open_interest));
        s += buf;
    }
    return s;
}

/// `date,return` CSV with consecutive calendar days from 2021-01-01.
inline std::string returns_csv(const std::vector<double>& r) {
    std::string s = "date,return\n";
    auto day = std::chrono::sys_days{std::chrono::year{2021} / 1 / 1};
    char buf[64];
    for (double x : r) {
        s += mmn::format_iso_date(std::chrono::year_month_day{day});
        std::snprintf(buf, sizeof buf, ",%.17g\n", x);
        s += buf;
        day += std::chrono::days{1};
    }
    return s;
}

}  // namespace testing

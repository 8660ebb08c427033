#include "mmnoise/calibration.hpp"

#include "mmnoise/analytic.hpp"
#include "mmnoise/dgsm_tree.hpp"
#include "mmnoise/optimize.hpp"
#include "mmnoise/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace mmn {

namespace {

constexpr double kVolLow = 1e-8;
constexpr double kVolHigh = 5.0;
constexpr double kPenalty = 1e3;

ImpliedPoint point_for(const OptionQuote& q) {
    ImpliedPoint p;
    p.expiry_days = q.expiry_days;
    p.strike = q.strike;
    p.moneyness = q.moneyness;
    return p;
}

void check_quote(const OptionQuote& q, const QuoteContext& ctx, const char* who) {
    if (!(ctx.spot > 0.0)) throw DomainError(std::string(who) + ": spot must be positive");
    if (q.expiry_days < 1 || !(q.strike > 0.0) || !(q.last_price > 0.0)) {
        throw DomainError(std::string(who) + ": quote needs expiry >= 1, strike > 0, price > 0");
    }
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

QuoteContext context_of(const OptionChain& chain) {
    return {chain.spot, daily_rate(chain.annual_rate)};
}

ImpliedPoint implied_epsilon(const OptionQuote& quote, const QuoteContext& ctx, double sigma) {
    check_quote(quote, ctx, "implied_epsilon");
    if (!(sigma > 0.0)) throw DomainError("implied_epsilon: sigma must be positive");

    const double target = quote.last_price;
    const auto rel_error = [&](double vol) {
        const NoisePricingInputs<double> in{ctx.spot, quote.strike,
                                            static_cast<double>(quote.expiry_days), ctx.rate, vol, 0.0};
        return (bsm_noise_call(in) - target) / target;
    };

    ImpliedPoint out = point_for(quote);
    const auto finish = [&](double vol, bool solved) {
        const double err = rel_error(vol);
        out.value_eps = vol - sigma;
        out.objective = err * err;
        out.converged = solved && std::abs(err) <= kEpsilonTolerance;
        return out;
    };

    double lo = kVolLow;
    double hi = kVolHigh;
    double f_hi = rel_error(hi);
    for (int i = 0; i < 12 && f_hi < 0.0; ++i) {
        hi *= 2.0;
        f_hi = rel_error(hi);
    }
    if (f_hi < 0.0) return finish(hi, false);
    double f_lo = rel_error(lo);
    for (int i = 0; i < 12 && f_lo > 0.0; ++i) {
        lo *= 1e-2;
        f_lo = rel_error(lo);
    }
    if (f_lo > 0.0) return finish(lo, false);

    const auto root = opt::brent_root(rel_error, lo, hi);
    return finish(root.x, root.converged);
}

std::optional<double> tree_implied_sigma(const OptionQuote& quote, const QuoteContext& ctx,
                                         double p_up, double mu, int n_steps) {
    check_quote(quote, ctx, "tree_implied_sigma");
    if (!(p_up > 0.0 && p_up < 1.0)) throw DomainError("tree_implied_sigma: p_up must lie in (0, 1)");
    if (n_steps < 0) throw DomainError("tree_implied_sigma: n_steps must be >= 0");
    const int n = n_steps > 0 ? n_steps : quote.expiry_days;
    const double maturity = quote.expiry_days;
    const double dt = maturity / n;

    // 0 < q < 1 needs sigma above a drift-dependent floor; d > -1 caps it.
    const double spread = std::sqrt(p_up * (1.0 - p_up) * dt);
    double floor = 0.0;
    if (mu > ctx.rate) floor = (mu - ctx.rate) * spread / p_up;
    if (mu < ctx.rate) floor = (ctx.rate - mu) * spread / (1.0 - p_up);
    const double lo = floor * (1.0 + 1e-12) + 1e-14;
    const double cap = (1.0 + mu * dt) * std::sqrt((1.0 - p_up) / p_up) / std::sqrt(dt);
    const double hi = std::min(kVolHigh, cap * (1.0 - 1e-12));
    if (!(hi > lo)) return std::nullopt;

    const auto rel_error = [&](double s) {
        const auto tp = tree_params(mu, s, p_up, ctx.rate, maturity, n);
        return (price_european(ctx.spot, quote.strike, tp) - quote.last_price) / quote.last_price;
    };
    try {
        const double f_lo = rel_error(lo);
        const double f_hi = rel_error(hi);
        if ((f_lo > 0.0) == (f_hi > 0.0) && f_lo != 0.0 && f_hi != 0.0) return std::nullopt;
        const auto root = opt::brent_root(rel_error, lo, hi);
        if (!root.converged) return std::nullopt;
        return root.x;
    } catch (const DomainError&) {
        return std::nullopt;
    }
}

ImpliedPoint implied_mu_sigma(const OptionQuote& quote, const QuoteContext& ctx, double p_up,
                              double mu0, double sigma0, const MuSigmaOptions& options) {
    check_quote(quote, ctx, "implied_mu_sigma");
    if (!(p_up > 0.0 && p_up < 1.0)) throw DomainError("implied_mu_sigma: p_up must lie in (0, 1)");
    if (options.n_steps < 0) throw DomainError("implied_mu_sigma: n_steps must be >= 0");
    if (!(sigma0 > 0.0) || !std::isfinite(mu0)) {
        throw DomainError("implied_mu_sigma: need finite mu0 and sigma0 > 0");
    }
    const int n = options.n_steps > 0 ? options.n_steps : quote.expiry_days;
    const double maturity = quote.expiry_days;
    const double target = quote.last_price;

    const auto objective = [&](double mu, double sigma) {
        if (!(sigma > 0.0)) return kPenalty * (1.0 - sigma / sigma0);
        const auto tp = tree_params(mu, sigma, p_up, ctx.rate, maturity, n);
        // q leaves (0, 1) exactly when rate*dt leaves (d, u)
        const double growth = ctx.rate * tp.dt;
        const double width = tp.u - tp.d;
        const double excess = std::max({tp.d - growth, growth - tp.u, -1.0 - tp.d});
        if (excess >= 0.0) return kPenalty * (1.0 + excess / width);
        const double err = (price_european(ctx.spot, quote.strike, tp) - target) / target;
        return err * err;
    };

    // Both coordinates are scaled to order one so a single step size works.
    const double mu_scale = std::max(std::abs(mu0), 1e-4);
    const double sigma_scale = sigma0;
    const opt::ObjectiveFn scaled = [&](const Eigen::VectorXd& x) {
        return objective(x(0) * mu_scale, x(1) * sigma_scale);
    };
    opt::SimplexOptions sopts;
    sopts.max_evaluations = options.max_evaluations;
    sopts.f_target = 1e-26;
    sopts.x_tol = 1e-10;
    sopts.f_tol = 1e-30;
    const auto res = opt::nelder_mead(scaled, Eigen::Vector2d(mu0 / mu_scale, 1.0),
                                      Eigen::Vector2d(0.05, 0.05), sopts);

    ImpliedPoint out = point_for(quote);
    out.value_mu = res.x(0) * mu_scale;
    out.value_sigma = res.x(1) * sigma_scale;
    out.objective = res.fx;
    out.converged = res.fx <= kMuSigmaTolerance;

    if (out.converged && options.probe_flat_direction) {
        int flat = 0;
        for (double delta : {-1e-4, 1e-4}) {
            const double mu = *out.value_mu + delta;
            const auto s = tree_implied_sigma(quote, ctx, p_up, mu, n);
            if (s && objective(mu, *s) <= kMuSigmaTolerance) ++flat;
        }
        out.flat_direction = flat == 2;
    }
    return out;
}

std::vector<ImpliedPoint> implied_epsilon_surface(const OptionChain& chain, double sigma,
                                                  unsigned workers) {
    const QuoteContext ctx = context_of(chain);
    std::vector<ImpliedPoint> out(chain.quotes.size());
    parallel_for(out.size(), workers,
                 [&](std::size_t i) { out[i] = implied_epsilon(chain.quotes[i], ctx, sigma); });
    return out;
}

std::vector<ImpliedPoint> implied_mu_sigma_surface(const OptionChain& chain, double p_up,
                                                   double mu0, double sigma0,
                                                   const MuSigmaOptions& options,
                                                   unsigned workers) {
    const QuoteContext ctx = context_of(chain);
    std::vector<ImpliedPoint> out(chain.quotes.size());
    parallel_for(out.size(), workers, [&](std::size_t i) {
        out[i] = implied_mu_sigma(chain.quotes[i], ctx, p_up, mu0, sigma0, options);
    });
    return out;
}

double lower_median(std::span<const double> values) {
    if (values.empty()) throw InsufficientDataError("lower_median: no values");
    std::vector<double> v(values.begin(), values.end());
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>((v.size() - 1) / 2);
    std::nth_element(v.begin(), mid, v.end());
    return *mid;
}

NoiseParams calibrate_noise_params(std::span<const ImpliedPoint> surface,
                                   const HistoricalMoments& moments) {
    if (moments.mu_o == 0.0) {
        throw DomainError("calibrate_noise_params: mu_o = 0 leaves w_er undefined");
    }
    std::vector<double> mus;
    std::vector<double> sigmas;
    for (const auto& p : surface) {
        if (!p.converged || !p.value_mu || !p.value_sigma) continue;
        mus.push_back(*p.value_mu);
        sigmas.push_back(*p.value_sigma);
    }
    if (mus.empty()) throw InsufficientDataError("calibrate_noise_params: no converged (mu, sigma) points");

    NoiseParams out;
    out.w_er = lower_median(mus) / moments.mu_o;
    out.sigma_n = lower_median(sigmas) - moments.sigma_o;
    return out;
}

EfficientParams assemble_params(const HistoricalMoments& moments, const NoiseParams& noise) {
    EfficientParams out;
    out.mu_o = moments.mu_o;
    out.sigma_o = moments.sigma_o;
    out.p_up = moments.p_up;
    out.w_er = noise.w_er;
    out.sigma_n = noise.sigma_n;
    out.mu = moments.mu_o * noise.w_er;
    out.sigma = moments.sigma_o + noise.sigma_n;
    out.mu_n = moments.mu_o * (noise.w_er - 1.0);
    return out;
}

void write_implied_csv(std::ostream& out, std::span<const ImpliedPoint> points, ImpliedField field) {
    out << "expiry_days,strike,moneyness,value,converged,objective\n";
    for (const auto& p : points) {
        const std::optional<double>& v = field == ImpliedField::epsilon ? p.value_eps
                                         : field == ImpliedField::mu    ? p.value_mu
                                                                        : p.value_sigma;
        out << p.expiry_days << ',' << fmt(p.strike) << ',' << fmt(p.moneyness) << ','
            << (v ? fmt(*v) : std::string()) << ',' << (p.converged ? 1 : 0) << ','
            << fmt(p.objective) << '\n';
    }
    if (!out) throw IoError("write_implied_csv: write failed");
}

std::vector<ImpliedPoint> read_implied_csv(std::istream& in, ImpliedField field) {
    std::string line;
    if (!std::getline(in, line) || line != "expiry_days,strike,moneyness,value,converged,objective") {
        throw ParseError("expected header expiry_days,strike,moneyness,value,converged,objective", 1);
    }
    std::vector<ImpliedPoint> out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (line.back() == ',') f.emplace_back();
        if (f.size() != 6) throw ParseError("expected 6 fields", line_no);
        ImpliedPoint p;
        try {
            std::size_t used = 0;
            p.expiry_days = std::stoi(f[0], &used);
            p.strike = std::stod(f[1]);
            p.moneyness = std::stod(f[2]);
            if (!f[3].empty()) {
                const double v = std::stod(f[3]);
                (field == ImpliedField::epsilon ? p.value_eps
                 : field == ImpliedField::mu    ? p.value_mu
                                                : p.value_sigma) = v;
            }
            if (f[4] != "0" && f[4] != "1") throw std::invalid_argument("converged");
            p.converged = f[4] == "1";
            p.objective = std::stod(f[5]);
        } catch (const std::logic_error&) {
            throw ParseError("malformed row '" + line + "'", line_no);
        }
        out.push_back(p);
    }
    return out;
}

nlohmann::json to_json(const EfficientParams& p) {
    return {{"mu_o", p.mu_o}, {"sigma_o", p.sigma_o}, {"p_n", p.p_up},   {"w_er", p.w_er},
            {"sigma_n", p.sigma_n}, {"mu", p.mu},     {"sigma", p.sigma}, {"mu_n", p.mu_n}};
}

}  // namespace mmn

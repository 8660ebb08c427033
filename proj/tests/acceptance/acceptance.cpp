// Acceptance checks. One line per criterion: PASS/FAIL, a label and the
// measured quantities. Exit status is the number of failures.

#include "mmnoise/analytic.hpp"
#include "mmnoise/calibration.hpp"
#include "mmnoise/dgsm_tree.hpp"
#include "mmnoise/noise_sim.hpp"
#include "mmnoise/pipeline.hpp"
#include "mmnoise/volmodels.hpp"

#include "../support.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

using namespace mmn;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

const double kRate = 0.04 / 252;

Outcome tree_convergence() {
    const auto t0 = Clock::now();
    double worst = 0.0;
    int within = 0;
    std::string worst_case;
    for (double tau : {1.0, 252.0}) {
        for (double k : {90.0, 100.0, 110.0}) {
            const double tree = price_european(100, k, tree_params(kRate, 0.0112, 0.524, kRate, tau, 2000));
            const double bsm = bsm_noise_call(NoisePricingInputs<double>{100, k, tau, kRate, 0.0112, 0.0});
            const double rel = std::abs(tree - bsm) / bsm;
            within += rel <= 1e-3;
            if (!(rel <= worst)) {
                worst = rel;
                worst_case = fmt("K=%g tau=%g tree=%.6g bsm=%.6g", k, tau, tree, bsm);
            }
        }
    }
    const double secs = seconds_since(t0);
    return {worst <= 1e-3 && secs <= 5.0,
            fmt("%d/6 cases within tol 1e-3; max rel err %.3g at %s, %.2f s", within, worst, worst_case.c_str(),
                secs)};
}

Outcome mc_vs_analytic() {
    const auto t0 = Clock::now();
    PathConfig c;
    c.sigma = 0.15;
    c.epsilon = 0.05;
    c.horizon_days = 1;
    c.steps = 400;
    c.seed = 20250421;
    c.mode = SimMode::risk_neutral;
    const auto mc = mc_call_price(c, 100, 1000000);
    const double exact = bsm_noise_call(NoisePricingInputs<double>{100, 100, 1, 0, 0.15, 0.05});
    const double secs = seconds_since(t0);
    const double z = (mc.price - exact) / mc.std_error;
    return {std::abs(z) <= 3.0 && mc.std_error <= 0.02 && secs <= 30.0,
            fmt("mc=%.5f exact=%.5f se=%.4f |z|=%.2f, %zu paths x %d steps, %.1f s", mc.price, exact,
                mc.std_error, std::abs(z), mc.n_paths, c.steps, secs)};
}

Outcome absorption() {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int mismatches = 0;
    for (int i = 0; i < 1000; ++i) {
        const double total = 3.0 * (1.0 - u(rng));  // (0, 3]
        const double sigma = total * (1.0 - u(rng)) * 1.5 + 1e-6;
        const double eps = total - sigma;
        const double s = 50 + 100 * u(rng);
        const double k = s * (0.5 + u(rng));
        const double tau = 1 + 500 * u(rng);
        const double r = 1e-3 * u(rng);
        const double a = bsm_noise_call(NoisePricingInputs<double>{s, k, tau, r, sigma, eps});
        const double b = bsm_noise_call(NoisePricingInputs<double>{s, k, tau, r, sigma + eps, 0.0});
        mismatches += !(a == b);
    }
    return {mismatches == 0, fmt("%d of 1000 points differ", mismatches)};
}

Outcome implied_eps_round_trip() {
    const double sigma = 0.0112;
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> eps_d(-0.5 * sigma, sigma), z_d(-2.5, 2.5);
    std::uniform_int_distribution<int> exp_d(5, 750);
    const QuoteContext ctx{100, kRate};
    std::vector<OptionQuote> quotes;
    std::vector<double> truth;
    for (int i = 0; i < 200; ++i) {
        const double eps = eps_d(rng);
        const int e = exp_d(rng);
        const double k = 100 * std::exp(z_d(rng) * (sigma + eps) * std::sqrt(double(e)));
        const double c = bsm_noise_call(NoisePricingInputs<double>{100, k, double(e), kRate, sigma, eps});
        quotes.push_back(testing::make_quote(e, k, c, 100));
        truth.push_back(eps);
    }
    const auto t0 = Clock::now();
    double worst = 0.0;
    int unconverged = 0;
    for (std::size_t i = 0; i < quotes.size(); ++i) {
        const auto p = implied_epsilon(quotes[i], ctx, sigma);
        unconverged += !p.converged;
        worst = std::max(worst, std::abs(*p.value_eps - truth[i]));
    }
    const double secs = seconds_since(t0);
    return {worst <= 1e-6 && unconverged == 0 && secs <= 2.0,
            fmt("max |eps - eps*| = %.3g (tol 1e-6), %d unconverged, %.3f s", worst, unconverged, secs)};
}

Outcome implied_mu_sigma_round_trip() {
    const double p = 0.524;
    const double mu = 1.15e-4;
    const double sigma = 0.014;
    const QuoteContext ctx{100, kRate};
    auto quote = [&](int e, double k, double m, double s) {
        return testing::make_quote(e, k, price_european(100, k, tree_params(m, s, p, kRate, e, e)), 100);
    };
    double worst_mu = 0.0;
    double worst_sigma = 0.0;
    int unconverged = 0;
    for (int e : {10, 20, 60, 120})
        for (double k : {95.0, 100.0, 105.0}) {
            const auto pt = implied_mu_sigma(quote(e, k, mu, sigma), ctx, p, mu + 3e-5, sigma - 3e-4);
            unconverged += !pt.converged;
            worst_mu = std::max(worst_mu, std::abs(*pt.value_mu - mu));
            worst_sigma = std::max(worst_sigma, std::abs(*pt.value_sigma - sigma));
        }
    int flagged = 0;
    int degenerate = 0;
    for (int e : {20, 60})
        for (double k : {97.0, 103.0}) {
            const auto pt = implied_mu_sigma(quote(e, k, kRate, 0.0112), ctx, p, kRate + 2e-5, 0.0112 * 1.02);
            ++degenerate;
            flagged += pt.converged && pt.flat_direction;
        }
    return {worst_mu <= 1e-4 && worst_sigma <= 1e-4 && unconverged == 0 && flagged == degenerate,
            fmt("max |mu err| %.3g, max |sigma err| %.3g (tol 1e-4), %d unconverged; mu=r flagged %d/%d",
                worst_mu, worst_sigma, unconverged, flagged, degenerate)};
}

Outcome no_arbitrage_q() {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> mu_d(-0.02, 0.02), sig_d(1e-4, 0.1), p_d(0.01, 0.99), r_d(0.0, 0.002),
        dt_d(0.01, 5.0);
    int passing = 0;
    int bad = 0;
    for (int i = 0; i < 100000; ++i) {
        const double dt = dt_d(rng);
        const auto t = tree_params(mu_d(rng), sig_d(rng), p_d(rng), r_d(rng), dt, 1);
        if (!check_no_arbitrage(t)) continue;
        ++passing;
        bad += !(t.q > 0.0 && t.q < 1.0);
    }
    return {bad == 0 && passing > 0, fmt("%d of %d arbitrage-free draws have q outside (0,1)", bad, passing)};
}

Outcome median_optimality() {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> n_d(1, 60);
    std::normal_distribution<double> v_d(2e-4, 3e-4);
    double worst_gap = -1e300;
    for (int set = 0; set < 100; ++set) {
        std::vector<double> v(n_d(rng));
        for (auto& x : v) x = v_d(rng);
        const auto mae = [&](double c) {
            double s = 0.0;
            for (double x : v) s += std::abs(x - c);
            return s / v.size();
        };
        const double lo = *std::min_element(v.begin(), v.end());
        const double hi = *std::max_element(v.begin(), v.end());
        double best = mae(lo);
        for (int g = 0; g <= 20000; ++g) best = std::min(best, mae(lo + (hi - lo) * g / 20000.0));
        for (double x : v) best = std::min(best, mae(x));
        worst_gap = std::max(worst_gap, mae(lower_median(v)) - best);
    }
    return {worst_gap <= 1e-12, fmt("max MAE(median) - MAE(grid optimum) = %.3g (tol 1e-12)", worst_gap)};
}

Outcome h_distribution() {
    const double T = 1.0;
    const auto h = simulate_H_terminals(T, 1000, 8, 10000);
    const auto ks = testing::ks_test(h, [T](double x) { return norm_cdf(x / std::sqrt(T)); });
    return {ks.p_value > 0.01, fmt("KS D=%.4f p=%.3f (alpha 0.01, 10^4 paths)", ks.d, ks.p_value)};
}

Outcome garch_recovery() {
    ArmaGarchParams truth;
    truth.a0 = 2e-6;
    truth.a1 = 0.08;
    truth.beta1 = 0.90;
    truth.nu = 8;
    const auto r = simulate_arma_garch(truth, 100000, 99);
    const auto t0 = Clock::now();
    ArmaGarchFit fit;
    std::string note;
    try {
        fit = fit_arma_garch(r);
    } catch (const GarchConvergenceError& e) {
        fit = e.best();
        note = " (iteration budget exhausted)";
    }
    const double secs = seconds_since(t0);
    const double persistence = fit.params.a1 + fit.params.beta1;
    return {std::abs(persistence - 0.98) <= 0.05 && std::abs(fit.params.nu - 8.0) <= 2.0 && secs <= 60.0 && note.empty(),
            fmt("a1+beta1=%.4f nu=%.3f, %.1f s%s", persistence, fit.params.nu, secs, note.c_str())};
}

Outcome pipeline_round_trip() {
    testing::TempDir dir("acceptance");
    std::mt19937_64 rng(2025);
    std::normal_distribution<double> z(2.7e-4, 0.0112);
    std::vector<double> r(1008);
    for (auto& x : r) x = z(rng);
    testing::write_file(dir / "returns.csv", testing::returns_csv(r));
    const auto m = historical_moments(r);
    const double w = 0.9;
    const double sn = 0.0028;
    std::vector<OptionQuote> quotes;
    for (int e : {5, 10, 20, 40, 80, 160})
        for (double k : {92.0, 96.0, 100.0, 104.0, 108.0})
            quotes.push_back(testing::make_quote(
                e, k, price_european(100, k, tree_params(w * m.mu_o, m.sigma_o + sn, m.p_up, kRate, e, e)), 100));
    testing::write_file(dir / "chain.csv", testing::chain_csv(quotes));

    PipelineConfig c;
    c.chain_path = dir / "chain.csv";
    c.returns_path = dir / "returns.csv";
    c.spot = 100;
    c.annual_rate = 0.04;
    c.horizon_boundary_days = 30;
    c.output_dir = dir / "out";
    const auto res = run_pipeline(c);
    double worst_w = 0.0;
    double worst_sn = 0.0;
    for (const char* tag : {"short", "long"}) {
        const auto& t3 = res.report["subsets"][tag]["table3"];
        worst_w = std::max(worst_w, std::abs(t3["w_er"].get<double>() - w));
        worst_sn = std::max(worst_sn, std::abs(t3["sigma_n"].get<double>() - sn));
    }
    const double w_tol = 1e-4 / std::abs(m.mu_o);
    return {worst_w <= w_tol && worst_sn <= 1e-4,
            fmt("synthetic chain: |w_er err| %.3g (tol %.3g), |sigma_n err| %.3g (tol 1e-4); "
                "published numbers need the user's own chain (README)",
                worst_w, w_tol, worst_sn)};
}

Outcome moment_estimators() {
    const auto a = historical_moments(std::vector<double>{0.01, 0.01, 0.01});
    const auto b = historical_moments(std::vector<double>{0.02, 0.00});
    const double e1 = std::abs(a.mu_o - 0.01) / 0.01;
    const double e2 = std::abs(a.sigma_o);
    const double e3 = std::abs(b.mu_o - 0.01) / 0.01;
    const double e4 = std::abs(b.sigma_o - std::sqrt(2.0) * 0.01) / (std::sqrt(2.0) * 0.01);
    const double worst = std::max({e1, e2, e3, e4});
    return {worst <= 1e-15, fmt("max error %.3g (tol 1e-15; absolute for sigma=0)", worst)};
}

}  // namespace

int main() {
    const std::pair<const char*, std::function<Outcome()>> criteria[] = {
        {"1  tree -> closed form", tree_convergence},
        {"2  Monte Carlo vs closed form", mc_vs_analytic},
        {"3  noise absorbed into total vol", absorption},
        {"4  implied eps round trip", implied_eps_round_trip},
        {"5  implied (mu, sigma) round trip", implied_mu_sigma_round_trip},
        {"6  no arbitrage => 0 < q < 1", no_arbitrage_q},
        {"7  L1 median optimality", median_optimality},
        {"8  H_T ~ N(0, T)", h_distribution},
        {"9  GARCH recovery", garch_recovery},
        {"10 pipeline round trip", pipeline_round_trip},
        {"11 moment estimators", moment_estimators},
    };
    int failures = 0;
    for (const auto& [name, check] : criteria) {
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        failures += !o.pass;
        std::printf("%s  %-36s %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
        std::fflush(stdout);
    }
    return failures;
}

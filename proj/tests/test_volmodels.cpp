#include "mmnoise/error.hpp"
#include "mmnoise/volmodels.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

using namespace mmn;

namespace {

/// Standardized-t NLL with constant variance, written out from the density.
double constant_variance_t_nll(const std::vector<double>& resid, double var, double nu) {
    double total = 0.0;
    for (double a : resid) {
        const double z2 = a * a / ((nu - 2.0) * var);
        const double log_density = std::lgamma((nu + 1) / 2) - std::lgamma(nu / 2) -
                                   0.5 * std::log(std::numbers::pi * (nu - 2.0) * var) -
                                   (nu + 1) / 2 * std::log(1 + z2);
        total -= log_density;
    }
    return total;
}

std::vector<double> gaussian_series(std::size_t n, double sd, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z(0.0, sd);
    std::vector<double> out(n);
    for (auto& x : out) x = z(rng);
    return out;
}

ArmaGarchParams reference_params() {
    ArmaGarchParams p;
    p.phi = {1e-4, 0.05, -0.03, 0.02};
    p.theta = {-0.04, 0.02, 0.01};
    p.a0 = 2e-6;
    p.a1 = 0.08;
    p.beta1 = 0.90;
    p.nu = 8.0;
    return p;
}

}  // namespace

TEST_CASE("moments of hand-computable series") {
    const std::vector<double> flat{0.01, 0.01, 0.01};
    const auto a = historical_moments(flat);
    CHECK(std::abs(a.mu_o - 0.01) <= 1e-15 * 0.01);
    CHECK(std::abs(a.sigma_o) <= 1e-15);
    CHECK(a.p_up == 1.0);

    const std::vector<double> two{0.02, 0.00};
    const auto b = historical_moments(two);
    CHECK(std::abs(b.mu_o - 0.01) <= 1e-15 * 0.01);
    CHECK(std::abs(b.sigma_o - std::sqrt(2.0) * 0.01) <= 1e-15 * std::sqrt(2.0) * 0.01);
    CHECK(b.p_up == 0.5);

    CHECK_THROWS_AS(historical_moments(std::vector<double>{0.1}), InsufficientDataError);
}

TEST_CASE("moments scale with dt") {
    const std::vector<double> r{0.02, -0.01, 0.005, 0.0};
    const auto one = historical_moments(r, 1.0);
    const auto five = historical_moments(r, 5.0);
    CHECK(five.mu_o == doctest::Approx(one.mu_o / 5).epsilon(1e-15));
    CHECK(five.sigma_o == doctest::Approx(one.sigma_o / std::sqrt(5.0)).epsilon(1e-15));
    CHECK(one.p_up == 0.5);
}

TEST_CASE("moments do not depend on the order of returns") {
    std::mt19937_64 rng(3);
    auto r = gaussian_series(1008, 0.011, 5);
    const auto ref = historical_moments(r);
    for (int i = 0; i < 20; ++i) {
        std::shuffle(r.begin(), r.end(), rng);
        const auto m = historical_moments(r);
        CHECK(m.mu_o == ref.mu_o);
        CHECK(m.sigma_o == ref.sigma_o);
        CHECK(m.p_up == ref.p_up);
    }
}

TEST_CASE("parameter vector round trip and validity") {
    const auto p = reference_params();
    const auto q = ArmaGarchParams::from_vector(p.to_vector());
    CHECK(q.to_vector() == p.to_vector());
    CHECK(p.valid());
    auto bad = p;
    bad.a1 = 0.2;
    CHECK_FALSE(bad.valid());
    bad = p;
    bad.nu = 2.0;
    CHECK_FALSE(bad.valid());
    CHECK_THROWS_AS(garch_nll(bad, gaussian_series(300, 0.01, 1)), DomainError);
}

TEST_CASE("constant-variance NLL reduces to the plain t likelihood") {
    const auto r = gaussian_series(2000, 0.01, 9);
    ArmaGarchParams p;
    p.phi = {1e-4, 0.1, 0.0, -0.05};
    p.theta = {0.2, 0.0, 0.0};
    p.a0 = 1.1e-4;
    p.a1 = 0.0;
    p.beta1 = 0.0;
    p.nu = 6.0;

    // residuals recomputed here from the ARMA recursion
    std::vector<double> a(r.size(), 0.0);
    for (std::size_t s = 3; s < r.size(); ++s) {
        a[s] = r[s] - (p.phi[0] + p.phi[1] * r[s - 1] + p.phi[2] * r[s - 2] + p.phi[3] * r[s - 3] +
                       p.theta[0] * a[s - 1] + p.theta[1] * a[s - 2] + p.theta[2] * a[s - 3]);
    }
    const std::vector<double> resid(a.begin() + 3, a.end());
    const auto filt = arma_garch_filter(p, r);
    REQUIRE(filt.residuals.size() == resid.size());
    for (double s : filt.sigma) CHECK(s == doctest::Approx(std::sqrt(p.a0)).epsilon(1e-15));
    CHECK(garch_nll(p, r) == doctest::Approx(constant_variance_t_nll(resid, p.a0, p.nu)).epsilon(1e-12));
}

TEST_CASE("filtered sigma is positive") {
    const auto r = simulate_arma_garch(reference_params(), 3000, 17);
    const auto filt = arma_garch_filter(reference_params(), r);
    CHECK(filt.sigma.size() == r.size() - 3);
    for (double s : filt.sigma) CHECK(s > 0.0);
}

TEST_CASE("true parameters beat a perturbed a1") {
    auto truth = reference_params();
    truth.beta1 = 0.80;  // leaves room for a1 + 0.1 inside the stationary region
    const auto r = simulate_arma_garch(truth, 10000, 99);
    auto plus = truth;
    plus.a1 += 0.1;
    REQUIRE(plus.valid());
    CHECK(garch_nll(truth, r) <= garch_nll(plus, r));
}

TEST_CASE("fit on a simulated series") {
    const auto truth = reference_params();
    const auto r = simulate_arma_garch(truth, 5000, 2025);
    const auto fit = fit_arma_garch(r);
    CHECK(fit.converged);
    CHECK(fit.params.valid());
    CHECK(fit.params.a1 + fit.params.beta1 < 1.0);
    CHECK(std::abs(fit.params.a1 + fit.params.beta1 - 0.98) < 0.05);
    CHECK(fit.sigma_path.size() == r.size() - 3);
    for (double s : fit.sigma_path) CHECK(s > 0.0);
    CHECK(fit.sigma_forecast == fit.sigma_path.back());
    CHECK(fit.loglik == doctest::Approx(-garch_nll(fit.params, r)).epsilon(1e-12));
    for (double p : fit.p_values) {
        if (std::isfinite(p)) CHECK((p >= 0.0 && p <= 1.0));
    }
    CHECK(fit.p_values[8] < 0.01);   // a1
    CHECK(fit.p_values[9] < 0.01);   // beta1

    // local optimality: nudging any coefficient raises the NLL
    const double best = garch_nll(fit.params, r);
    const auto v = fit.params.to_vector();
    for (int i = 0; i < ArmaGarchParams::kSize; ++i) {
        for (double sign : {-1.0, 1.0}) {
            auto w = v;
            w(i) += sign * std::max(1e-3 * std::abs(v(i)), 1e-6);
            const auto q = ArmaGarchParams::from_vector(w);
            if (!q.valid()) continue;
            CHECK(garch_nll(q, r) >= best - 1e-6);
        }
    }

    const auto j = to_json(fit);
    for (const char* key : kArmaGarchNames) CHECK(j.contains(key));
    CHECK(j.contains("loglik"));
    CHECK(j.contains("sigma_forecast"));
    CHECK(j["p_values"].size() == 11);
}

TEST_CASE("fit preconditions") {
    CHECK_THROWS_AS(fit_arma_garch(gaussian_series(150, 0.01, 1)), InsufficientDataError);
    CHECK_THROWS_AS(fit_arma_garch(std::vector<double>(500, 0.001)), DomainError);
}

TEST_CASE("iteration budget exhaustion carries the best iterate") {
    const auto r = simulate_arma_garch(reference_params(), 2000, 5);
    ArmaGarchOptions opts;
    opts.max_iterations = 2;
    try {
        fit_arma_garch(r, opts);
        FAIL("expected GarchConvergenceError");
    } catch (const GarchConvergenceError& e) {
        CHECK_FALSE(e.best().converged);
        CHECK(e.best().params.valid());
        CHECK(std::isfinite(e.best().loglik));
    }
}

TEST_CASE("simulation is reproducible") {
    const auto a = simulate_arma_garch(reference_params(), 500, 8);
    const auto b = simulate_arma_garch(reference_params(), 500, 8);
    const auto c = simulate_arma_garch(reference_params(), 500, 9);
    CHECK(a == b);
    CHECK(a != c);
}

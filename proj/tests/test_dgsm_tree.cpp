#include "mmnoise/analytic.hpp"
#include "mmnoise/dgsm_tree.hpp"
#include "mmnoise/error.hpp"

#include <doctest.h>

#include <fstream>
#include <random>
#include <string>

using namespace mmn;

namespace {

/// Peak resident set size in kB, from /proc.
long peak_rss_kb() {
    std::ifstream in("/proc/self/status");
    std::string key;
    while (in >> key) {
        if (key == "VmHWM:") {
            long kb = 0;
            in >> kb;
            return kb;
        }
        std::getline(in, key);
    }
    return -1;
}

}  // namespace

TEST_CASE("lattice parameters") {
    const auto t = tree_params(0.0, 0.2, 0.5, 0.0, 1.0, 1);
    CHECK(t.u == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(t.d == doctest::Approx(-0.2).epsilon(1e-15));
    CHECK(t.dt == 1.0);

    // theta = (0.02 - 0) / 0.2 = 0.1
    CHECK(tree_params(0.02, 0.2, 0.5, 0.0, 1.0, 1).q == doctest::Approx(0.45).epsilon(1e-15));
    CHECK(tree_params(3e-4, 0.011, 0.524, 3e-4, 20.0, 20).q == 0.524);

    const auto w = tree_params(1e-4, 0.012, 0.53, 1e-4, 30.0, 7);
    const double dt = 30.0 / 7;
    CHECK(w.u == 1e-4 * dt + std::sqrt(0.47 / 0.53) * 0.012 * std::sqrt(dt));
    CHECK(w.d == 1e-4 * dt - std::sqrt(0.53 / 0.47) * 0.012 * std::sqrt(dt));
}

TEST_CASE("parameter validation") {
    CHECK_THROWS_AS(tree_params(0, 0.2, 0.0, 0, 1, 1), DomainError);
    CHECK_THROWS_AS(tree_params(0, 0.2, 1.0, 0, 1, 1), DomainError);
    CHECK_THROWS_AS(tree_params(0, 0.0, 0.5, 0, 1, 1), DomainError);
    CHECK_THROWS_AS(tree_params(0, 0.2, 0.5, 0, 1, 0), DomainError);
    CHECK_THROWS_AS(tree_params(0, 0.2, 0.5, 0, 0, 1), DomainError);
}

TEST_CASE("no-arbitrage check is strict") {
    auto t = tree_params(0.0, 0.2, 0.5, 0.0, 1.0, 1);
    CHECK(check_no_arbitrage(t));
    t.rate = 0.2;
    CHECK_FALSE(check_no_arbitrage(t));
    t.rate = -0.2;
    CHECK_FALSE(check_no_arbitrage(t));
    CHECK_THROWS_AS(price_european(100, 100, t), DomainError);
}

TEST_CASE("q lies in (0, 1) whenever the check passes") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int passed = 0;
    for (int i = 0; i < 100000; ++i) {
        const double mu = -0.01 + 0.02 * u(rng);
        const double sigma = 1e-4 + 0.05 * u(rng);
        const double p = 0.01 + 0.98 * u(rng);
        const double r = -0.005 + 0.01 * u(rng);
        const double T = 1 + 100 * u(rng);
        const auto t = tree_params(mu, sigma, p, r, T, 1 + static_cast<int>(20 * u(rng)));
        if (!check_no_arbitrage(t)) continue;
        ++passed;
        CHECK((t.q > 0.0 && t.q < 1.0));
    }
    CHECK(passed > 1000);
}

TEST_CASE("single step by hand") {
    // q = 0.5, payoffs 20 and 0
    CHECK(price_european(100, 100, tree_params(0.0, 0.2, 0.5, 0.0, 1.0, 1)) == doctest::Approx(10.0).epsilon(1e-14));
}

TEST_CASE("zero strike is the discounted expected spot") {
    const double r = 0.04 / 252;
    const auto t = tree_params(r, 0.0112, 0.524, r, 60.0, 60);
    CHECK(std::abs(price_european(100, 0, t) - 100.0) < 1e-9);

    const auto w = tree_params(5e-4, 0.0112, 0.524, r, 60.0, 60);
    const double growth = w.q * (1 + w.u) + (1 - w.q) * (1 + w.d);
    CHECK(price_european(100, 0, w) == doctest::Approx(100 * std::pow(growth / (1 + r), 60)).epsilon(1e-12));
}

TEST_CASE("converges to the closed form") {
    const double r = 0.04 / 252;
    const double sigma = 0.0112;
    for (double k : {95.0, 100.0, 105.0}) {
        const auto t = tree_params(r, sigma, 0.5, r, 252.0, 2000);
        const double closed = bsm_noise_call(NoisePricingInputs<double>{100, k, 252, r, sigma, 0});
        CHECK(std::abs(price_european(100, k, t) - closed) / closed < 5e-4);
    }
    double prev = 1e9;
    for (int n : {50, 200, 800}) {
        const double closed = bsm_noise_call(NoisePricingInputs<double>{100, 100, 252, r, sigma, 0});
        const double err = std::abs(price_european(100, 100, tree_params(r, sigma, 0.5, r, 252, n)) - closed);
        CHECK(err < prev);
        prev = err;
    }
}

TEST_CASE("drift matters at finite n") {
    const double r = 0.04 / 252;
    const double a = price_european(100, 100, tree_params(r, 0.0112, 0.524, r, 5, 5));
    const double b = price_european(100, 100, tree_params(r + 1e-3, 0.0112, 0.524, r, 5, 5));
    const double c = price_european(100, 100, tree_params(r, 0.0112, 0.56, r, 5, 5));
    CHECK(std::abs(a - b) > 1e-6);
    CHECK(std::abs(a - c) > 1e-6);
}

TEST_CASE("linear memory in the step count") {
    // 1e5 steps: the value buffer is 0.8 MB; a quadratic layout would need 40 GB.
    const long before = peak_rss_kb();
    const auto t = tree_params(1e-4, 0.0112, 0.5, 1e-4, 252, 100000);
    const double v = price_european(100, 100, t);
    const long after = peak_rss_kb();
    CHECK(std::isfinite(v));
    CHECK(after - before < 64 * 1024);
    CHECK(after < 1024 * 1024);
}

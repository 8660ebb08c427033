#include "mmnoise/dgsm_tree.hpp"

#include "mmnoise/error.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace mmn {

TreeParams tree_params(double mu, double sigma, double p_up, double rate, double maturity_days,
                       int n_steps) {
    if (!(p_up > 0.0 && p_up < 1.0)) throw DomainError("tree_params: p_up must lie in (0, 1)");
    if (!(sigma > 0.0)) throw DomainError("tree_params: sigma must be positive");
    if (n_steps < 1) throw DomainError("tree_params: n_steps must be >= 1");
    if (!(maturity_days > 0.0)) throw DomainError("tree_params: maturity must be positive");
    if (!std::isfinite(mu) || !std::isfinite(rate))
        throw DomainError("tree_params: mu and rate must be finite");

    TreeParams t;
    t.mu = mu;
    t.sigma = sigma;
    t.p_up = p_up;
    t.rate = rate;
    t.n_steps = n_steps;
    t.dt = maturity_days / n_steps;

    const double sqrt_dt = std::sqrt(t.dt);
    t.u = mu * t.dt + std::sqrt((1.0 - p_up) / p_up) * sigma * sqrt_dt;
    t.d = mu * t.dt - std::sqrt(p_up / (1.0 - p_up)) * sigma * sqrt_dt;
    const double theta = (mu - rate) / sigma;
    t.q = p_up - theta * std::sqrt(p_up * (1.0 - p_up) * t.dt);
    return t;
}

bool check_no_arbitrage(const TreeParams& params) {
    const double growth = params.rate * params.dt;
    return params.d < growth && growth < params.u;
}

double price_european(double spot, double strike, const TreeParams& params) {
    if (!(spot > 0.0)) throw DomainError("price_european: spot must be positive");
    if (!(strike >= 0.0)) throw DomainError("price_european: strike must be non-negative");
    if (!check_no_arbitrage(params)) {
        throw DomainError("price_european: lattice violates d < r*dt < u");
    }
    if (!(params.d > -1.0)) throw DomainError("price_european: down return must exceed -1");

    const int n = params.n_steps;
    const double log_up = std::log1p(params.u);
    const double log_down = std::log1p(params.d);
    const double log_spot = std::log(spot);

    std::vector<double> value(static_cast<std::size_t>(n) + 1);
    for (int j = 0; j <= n; ++j) {
        const double s = std::exp(log_spot + j * log_up + (n - j) * log_down);
        value[j] = std::max(s - strike, 0.0);
    }

    const double q = params.q;
    const double disc = 1.0 / (1.0 + params.rate * params.dt);
    const double wu = q * disc;
    const double wd = (1.0 - q) * disc;
    double* v = value.data();
    for (int k = n; k > 0; --k) {
        for (int j = 0; j < k; ++j) v[j] = wu * v[j + 1] + wd * v[j];
    }
    return value[0];
}

}  // namespace mmn

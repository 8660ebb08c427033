#pragma once

namespace mmn {

/// Parameters of the drift-preserving binomial lattice. All rates are per
/// trading day; `dt` is days per step.
///
/// Up and down returns match the real-world mean mu*dt and variance
/// sigma^2*dt under the up-probability `p_up`:
///
///   u = mu*dt + sqrt((1-p)/p) * sigma * sqrt(dt)
///   d = mu*dt - sqrt(p/(1-p)) * sigma * sqrt(dt)
///
/// and the pricing probability keeps the drift through theta = (mu - r)/sigma:
///
///   q = p - theta * sqrt(p (1-p) dt)
struct TreeParams {
    double mu = 0.0;
    double sigma = 0.0;
    double p_up = 0.5;
    double rate = 0.0;
    double dt = 1.0;
    int n_steps = 1;
    double u = 0.0;
    double d = 0.0;
    double q = 0.5;
};

/// Builds the lattice for a maturity of `maturity_days` split into `n_steps`.
/// Throws DomainError unless 0 < p_up < 1, sigma > 0, n_steps >= 1 and
/// maturity_days > 0.
TreeParams tree_params(double mu, double sigma, double p_up, double rate, double maturity_days,
                       int n_steps);

/// Strict d < r*dt < u.
bool check_no_arbitrage(const TreeParams& params);

/// European call by backward induction over a recombining lattice, using a
/// single (n+1)-element value buffer. Throws DomainError when the lattice
/// admits arbitrage or spot/strike are invalid. A zero strike is accepted
/// and prices the discounted terminal spot.
double price_european(double spot, double strike, const TreeParams& params);

}  // namespace mmn

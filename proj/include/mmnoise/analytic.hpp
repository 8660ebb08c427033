#pragma once

#include "mmnoise/error.hpp"

#include <algorithm>
#include <cmath>
#include <concepts>
#include <numbers>

namespace mmn {

/// Model time unit is one trading day; annual rates are converted with this.
inline constexpr double kTradingDaysPerYear = 252.0;

constexpr double daily_rate(double annual_rate) { return annual_rate / kTradingDaysPerYear; }

/// Standard normal CDF via erfc; absolute error is at the level of double
/// rounding over the whole real line.
template <std::floating_point Scalar>
Scalar norm_cdf(Scalar x) {
    return Scalar(0.5) * std::erfc(-x / std::numbers::sqrt2_v<Scalar>);
}

/// Inputs to the noise-augmented call formula. `tau` is in trading days,
/// `sigma` and `epsilon` per sqrt(day), `rate` per day. `epsilon` may be
/// negative as long as sigma + epsilon > 0.
template <std::floating_point Scalar = double>
struct NoisePricingInputs {
    Scalar spot{};
    Scalar strike{};
    Scalar tau{};
    Scalar rate{};
    Scalar sigma{};
    Scalar epsilon{};

    Scalar total_vol() const { return sigma + epsilon; }
};

/// Black-Scholes-Merton call under total volatility sigma + epsilon.
/// The price depends on (sigma, epsilon) only through their sum, which is
/// formed first so that (s, e) and (s + e, 0) give bit-identical results.
template <std::floating_point Scalar>
Scalar bsm_noise_call(const NoisePricingInputs<Scalar>& in) {
    if (!(in.spot > 0) || !(in.strike > 0) || !(in.tau > 0)) {
        throw DomainError("bsm_noise_call: spot, strike and tau must be positive");
    }
    const Scalar vol = in.total_vol();
    if (!(vol > 0)) throw DomainError("bsm_noise_call: sigma + epsilon must be positive");

    const Scalar sd = vol * std::sqrt(in.tau);
    const Scalar u_plus =
        (std::log(in.spot / in.strike) + (in.rate + vol * vol / 2) * in.tau) / sd;
    const Scalar u_minus = u_plus - sd;
    const Scalar df = std::exp(-in.rate * in.tau);
    const Scalar price = in.spot * norm_cdf(u_plus) - df * in.strike * norm_cdf(u_minus);

    const Scalar lower = std::max(in.spot - df * in.strike, Scalar(0));
    return std::clamp(price, lower, in.spot);
}

/// (mu - r) / (sigma + epsilon).
template <std::floating_point Scalar>
Scalar market_price_of_risk(Scalar mu, Scalar rate, Scalar sigma, Scalar epsilon) {
    const Scalar vol = sigma + epsilon;
    if (!(vol > 0)) throw DomainError("market_price_of_risk: sigma + epsilon must be positive");
    return (mu - rate) / vol;
}

}  // namespace mmn

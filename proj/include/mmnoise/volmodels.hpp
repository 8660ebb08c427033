#pragma once

#include "mmnoise/error.hpp"
#include "mmnoise/marketdata.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace mmn {

/// Observable drift, volatility and up-fraction of a return window.
struct HistoricalMoments {
    double mu_o = 0.0;     ///< per day
    double sigma_o = 0.0;  ///< per sqrt(day)
    double p_up = 0.0;     ///< fraction of strictly positive returns
};

/// mu_o = sum(r) / (M dt), sigma_o^2 = sum((r - mean)^2) / ((M-1) dt),
/// p_up = #{r > 0} / M. Throws InsufficientDataError for fewer than two returns.
HistoricalMoments historical_moments(std::span<const double> returns, double dt = 1.0);
HistoricalMoments historical_moments(const ReturnSeries& series, double dt = 1.0);

/// Coefficients of
///
///   r_s       = phi0 + sum_{i=1..3} phi_i r_{s-i} + a_s + sum_{j=1..3} theta_j a_{s-j}
///   a_s       = sigma_s xi_s,  xi_s ~ unit-variance Student-t(nu)
///   sigma_s^2 = a0 + a1 a_{s-1}^2 + beta1 sigma_{s-1}^2
struct ArmaGarchParams {
    std::array<double, 4> phi{};    ///< phi0..phi3
    std::array<double, 3> theta{};  ///< theta1..theta3
    double a0 = 0.0;
    double a1 = 0.0;
    double beta1 = 0.0;
    double nu = 8.0;

    static constexpr int kSize = 11;
    /// Order: phi0..phi3, theta1..theta3, a0, a1, beta1, nu.
    Eigen::Matrix<double, kSize, 1> to_vector() const;
    static ArmaGarchParams from_vector(const Eigen::Matrix<double, kSize, 1>& v);

    /// a0 >= 0, a1 >= 0, beta1 >= 0, a1 + beta1 < 1, nu > 2, all finite.
    bool valid() const;
};

/// Coefficient names in `to_vector()` order.
inline constexpr std::array<const char*, ArmaGarchParams::kSize> kArmaGarchNames = {
    "phi0", "phi1", "phi2", "phi3", "theta1", "theta2", "theta3", "a0", "a1", "beta1", "nu"};

/// Residuals and conditional sigma over the effective sample s = 3..N-1 (the
/// first three returns seed the AR lags). Pre-sample residuals are zero and
/// the pre-sample variance is the sample variance of the residuals.
struct ArmaGarchFilter {
    std::vector<double> residuals;
    std::vector<double> sigma;
};

ArmaGarchFilter arma_garch_filter(const ArmaGarchParams& params, std::span<const double> returns);

/// Negative log-likelihood of the standardized-t innovations. Throws
/// DomainError on invalid params or fewer than 5 returns.
double garch_nll(const ArmaGarchParams& params, std::span<const double> returns);
double garch_nll(const ArmaGarchParams& params, const ReturnSeries& series);

struct ArmaGarchFit {
    ArmaGarchParams params;
    double loglik = 0.0;
    std::array<double, ArmaGarchParams::kSize> p_values{};  ///< NaN where the Hessian is unusable
    std::vector<double> sigma_path;  ///< conditional sigma over the effective sample
    double sigma_forecast = 0.0;     ///< sigma_s at the last date of the window
    int iterations = 0;
    bool converged = false;
};

struct ArmaGarchOptions {
    int max_iterations = 2000;
    double gradient_tol = 1e-6;  ///< on the per-observation NLL, unconstrained coordinates
};

class GarchConvergenceError : public ConvergenceError {
public:
    GarchConvergenceError(const std::string& what, ArmaGarchFit best)
        : ConvergenceError(what), best_(std::move(best)) {}
    const ArmaGarchFit& best() const noexcept { return best_; }

private:
    ArmaGarchFit best_;
};

/// Maximum likelihood fit. Requires at least 200 returns; a zero-variance
/// series is rejected with DomainError. Throws GarchConvergenceError when the
/// iteration budget runs out before the gradient tolerance is met.
ArmaGarchFit fit_arma_garch(std::span<const double> returns, const ArmaGarchOptions& options = {});
ArmaGarchFit fit_arma_garch(const ReturnSeries& series, const ArmaGarchOptions& options = {});

/// Draws `n` returns from the model after discarding `burn_in` warm-up draws.
std::vector<double> simulate_arma_garch(const ArmaGarchParams& params, std::size_t n,
                                        std::uint64_t seed, std::size_t burn_in = 1000);

nlohmann::json to_json(const ArmaGarchFit& fit);

}  // namespace mmn

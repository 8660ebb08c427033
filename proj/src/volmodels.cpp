#include "mmnoise/volmodels.hpp"

#include "mmnoise/optimize.hpp"
#include "mmnoise/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace mmn {

namespace {

constexpr std::size_t kLags = 3;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
using Vec11 = Eigen::Matrix<double, ArmaGarchParams::kSize, 1>;

double sorted_sum(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return std::accumulate(v.begin(), v.end(), 0.0);
}

/// Unconstrained coordinates: phi0 / scale, remaining ARMA terms as-is,
/// log a0, a softmax pair for (a1, beta1) on {a1, beta1 > 0, a1 + beta1 < 1},
/// and log(nu - 2).
struct Transform {
    double scale = 1.0;

    Eigen::VectorXd forward(const ArmaGarchParams& p) const {
        Eigen::VectorXd x(ArmaGarchParams::kSize);
        x(0) = p.phi[0] / scale;
        for (int i = 1; i < 4; ++i) x(i) = p.phi[i];
        for (int j = 0; j < 3; ++j) x(4 + j) = p.theta[j];
        x(7) = std::log(p.a0);
        const double rest = 1.0 - p.a1 - p.beta1;
        x(8) = std::log(p.a1 / rest);
        x(9) = std::log(p.beta1 / rest);
        x(10) = std::log(p.nu - 2.0);
        return x;
    }

    ArmaGarchParams inverse(const Eigen::VectorXd& x) const {
        ArmaGarchParams p;
        p.phi[0] = x(0) * scale;
        for (int i = 1; i < 4; ++i) p.phi[i] = x(i);
        for (int j = 0; j < 3; ++j) p.theta[j] = x(4 + j);
        p.a0 = std::exp(x(7));
        // softmax with the implicit third weight pinned at zero
        const double m = std::max({0.0, x(8), x(9)});
        const double e0 = std::exp(-m);
        const double e1 = std::exp(x(8) - m);
        const double e2 = std::exp(x(9) - m);
        const double denom = e0 + e1 + e2;
        p.a1 = e1 / denom;
        p.beta1 = e2 / denom;
        p.nu = 2.0 + std::exp(x(10));
        return p;
    }

    /// d(natural) / d(unconstrained), evaluated at `p`.
    Eigen::MatrixXd jacobian(const ArmaGarchParams& p) const {
        Eigen::MatrixXd jac = Eigen::MatrixXd::Identity(ArmaGarchParams::kSize, ArmaGarchParams::kSize);
        jac(0, 0) = scale;
        jac(7, 7) = p.a0;
        jac(8, 8) = p.a1 * (1.0 - p.a1);
        jac(8, 9) = -p.a1 * p.beta1;
        jac(9, 8) = -p.a1 * p.beta1;
        jac(9, 9) = p.beta1 * (1.0 - p.beta1);
        jac(10, 10) = p.nu - 2.0;
        return jac;
    }
};

double t_constant(double nu) {
    return -std::lgamma(0.5 * (nu + 1.0)) + std::lgamma(0.5 * nu) +
           0.5 * std::log(std::numbers::pi * (nu - 2.0));
}

/// Same as garch_nll but without validation; +inf when the filter blows up.
double nll_unchecked(const ArmaGarchParams& p, std::span<const double> returns) {
    const auto filt = arma_garch_filter(p, returns);
    const double c = t_constant(p.nu);
    const double scale_t = p.nu - 2.0;
    double total = 0.0;
    for (std::size_t s = 0; s < filt.residuals.size(); ++s) {
        const double var = filt.sigma[s] * filt.sigma[s];
        const double a = filt.residuals[s];
        total += c + 0.5 * std::log(var) + 0.5 * (p.nu + 1.0) * std::log1p(a * a / (scale_t * var));
    }
    return std::isfinite(total) ? total : std::numeric_limits<double>::infinity();
}

ArmaGarchFit assemble_fit(const ArmaGarchParams& p, std::span<const double> returns) {
    ArmaGarchFit fit;
    fit.params = p;
    fit.loglik = -nll_unchecked(p, returns);
    fit.sigma_path = arma_garch_filter(p, returns).sigma;
    fit.sigma_forecast = fit.sigma_path.empty() ? kNaN : fit.sigma_path.back();
    fit.p_values.fill(kNaN);
    return fit;
}

}  // namespace

HistoricalMoments historical_moments(std::span<const double> returns, double dt) {
    const std::size_t m = returns.size();
    if (m < 2) throw InsufficientDataError("historical_moments: need at least two returns");
    if (!(dt > 0.0)) throw DomainError("historical_moments: dt must be positive");

    // Summing in sorted order makes the statistics exactly order-invariant.
    const std::vector<double> r(returns.begin(), returns.end());
    const double mean = sorted_sum(r) / static_cast<double>(m);
    std::vector<double> sq(m);
    std::transform(r.begin(), r.end(), sq.begin(), [mean](double x) { return (x - mean) * (x - mean); });

    HistoricalMoments out;
    out.mu_o = mean / dt;
    out.sigma_o = std::sqrt(sorted_sum(std::move(sq)) / ((static_cast<double>(m) - 1.0) * dt));
    out.p_up = static_cast<double>(std::count_if(r.begin(), r.end(), [](double x) { return x > 0.0; })) /
               static_cast<double>(m);
    return out;
}

HistoricalMoments historical_moments(const ReturnSeries& series, double dt) {
    return historical_moments(std::span<const double>(series.returns), dt);
}

Eigen::Matrix<double, ArmaGarchParams::kSize, 1> ArmaGarchParams::to_vector() const {
    Vec11 v;
    v << phi[0], phi[1], phi[2], phi[3], theta[0], theta[1], theta[2], a0, a1, beta1, nu;
    return v;
}

ArmaGarchParams ArmaGarchParams::from_vector(const Eigen::Matrix<double, kSize, 1>& v) {
    ArmaGarchParams p;
    for (int i = 0; i < 4; ++i) p.phi[i] = v(i);
    for (int j = 0; j < 3; ++j) p.theta[j] = v(4 + j);
    p.a0 = v(7);
    p.a1 = v(8);
    p.beta1 = v(9);
    p.nu = v(10);
    return p;
}

bool ArmaGarchParams::valid() const {
    return to_vector().allFinite() && a0 >= 0.0 && a1 >= 0.0 && beta1 >= 0.0 && a1 + beta1 < 1.0 &&
           nu > 2.0;
}

ArmaGarchFilter arma_garch_filter(const ArmaGarchParams& p, std::span<const double> r) {
    ArmaGarchFilter out;
    const std::size_t n = r.size();
    if (n <= kLags + 1) return out;

    std::vector<double> a(n, 0.0);
    for (std::size_t s = kLags; s < n; ++s) {
        double mean = p.phi[0];
        for (std::size_t i = 1; i <= kLags; ++i) mean += p.phi[i] * r[s - i] + p.theta[i - 1] * a[s - i];
        a[s] = r[s] - mean;
    }
    out.residuals.assign(a.begin() + kLags, a.end());

    const double m = static_cast<double>(out.residuals.size());
    const double res_mean = std::accumulate(out.residuals.begin(), out.residuals.end(), 0.0) / m;
    double pre_var = 0.0;
    for (double e : out.residuals) pre_var += (e - res_mean) * (e - res_mean);
    pre_var /= (m - 1.0);

    out.sigma.resize(out.residuals.size());
    double prev_var = pre_var;
    double prev_a = 0.0;
    for (std::size_t s = 0; s < out.residuals.size(); ++s) {
        const double var = p.a0 + p.a1 * prev_a * prev_a + p.beta1 * prev_var;
        out.sigma[s] = std::sqrt(var);
        prev_var = var;
        prev_a = out.residuals[s];
    }
    return out;
}

double garch_nll(const ArmaGarchParams& params, std::span<const double> returns) {
    if (!params.valid()) {
        throw DomainError("garch_nll: need a0, a1, beta1 >= 0, a1 + beta1 < 1 and nu > 2");
    }
    if (returns.size() < kLags + 2) throw DomainError("garch_nll: need at least 5 returns");
    return nll_unchecked(params, returns);
}

double garch_nll(const ArmaGarchParams& params, const ReturnSeries& series) {
    return garch_nll(params, std::span<const double>(series.returns));
}

ArmaGarchFit fit_arma_garch(std::span<const double> returns, const ArmaGarchOptions& options) {
    if (returns.size() < 200) {
        throw InsufficientDataError("fit_arma_garch: need at least 200 returns, got " +
                                    std::to_string(returns.size()));
    }
    const double n = static_cast<double>(returns.size());
    const double mean = std::accumulate(returns.begin(), returns.end(), 0.0) / n;
    double var = 0.0;
    for (double x : returns) var += (x - mean) * (x - mean);
    var /= (n - 1.0);
    const auto [lo, hi] = std::minmax_element(returns.begin(), returns.end());
    if (*lo == *hi || !(var > 0.0) || !std::isfinite(var)) {
        throw DomainError("fit_arma_garch: degenerate (zero) return variance");
    }

    ArmaGarchParams init;
    init.a0 = 0.1 * var;
    init.a1 = 0.05;
    init.beta1 = 0.90;
    init.nu = 8.0;

    const Transform tr{std::sqrt(var)};
    const double n_eff = n - static_cast<double>(kLags);
    const opt::ObjectiveFn objective = [&](const Eigen::VectorXd& x) {
        return nll_unchecked(tr.inverse(x), returns) / n_eff;
    };

    opt::BfgsOptions bopts;
    bopts.max_iterations = options.max_iterations;
    bopts.gradient_tol = options.gradient_tol;
    const auto res = opt::bfgs_minimize(objective, tr.forward(init), bopts);

    ArmaGarchFit fit = assemble_fit(tr.inverse(res.x), returns);
    fit.iterations = res.iterations;
    fit.converged = res.converged;
    if (!res.converged) {
        throw GarchConvergenceError("fit_arma_garch: no convergence after " +
                                        std::to_string(res.iterations) + " iterations",
                                    std::move(fit));
    }

    // Covariance from the Hessian of the total NLL in unconstrained
    // coordinates, mapped back by the delta method.
    const opt::ObjectiveFn total = [&](const Eigen::VectorXd& x) {
        return nll_unchecked(tr.inverse(x), returns);
    };
    const Eigen::MatrixXd hess = opt::numerical_hessian(
        total, res.x, Eigen::VectorXd::Constant(ArmaGarchParams::kSize, 1e-4));
    if (hess.allFinite()) {
        const Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
        if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
            const Eigen::MatrixXd cov_u =
                ldlt.solve(Eigen::MatrixXd::Identity(ArmaGarchParams::kSize, ArmaGarchParams::kSize));
            const Eigen::MatrixXd jac = tr.jacobian(fit.params);
            const Eigen::MatrixXd cov = jac * cov_u * jac.transpose();
            const Vec11 coef = fit.params.to_vector();
            for (int i = 0; i < ArmaGarchParams::kSize; ++i) {
                if (cov(i, i) > 0.0) {
                    const double z = coef(i) / std::sqrt(cov(i, i));
                    fit.p_values[i] = std::erfc(std::abs(z) / std::numbers::sqrt2);
                }
            }
        }
    }
    return fit;
}

ArmaGarchFit fit_arma_garch(const ReturnSeries& series, const ArmaGarchOptions& options) {
    return fit_arma_garch(std::span<const double>(series.returns), options);
}

std::vector<double> simulate_arma_garch(const ArmaGarchParams& p, std::size_t n, std::uint64_t seed,
                                        std::size_t burn_in) {
    if (!p.valid()) throw DomainError("simulate_arma_garch: invalid parameters");
    CounterRng rng(seed, 0);
    const std::size_t total = n + burn_in + kLags;
    std::vector<double> r(total, 0.0);
    std::vector<double> a(total, 0.0);
    double var = p.a0 / (1.0 - p.a1 - p.beta1);
    double prev_a = 0.0;
    for (std::size_t s = kLags; s < total; ++s) {
        var = p.a0 + p.a1 * prev_a * prev_a + p.beta1 * var;
        a[s] = std::sqrt(var) * rng.standardized_t(p.nu);
        double mean = p.phi[0];
        for (std::size_t i = 1; i <= kLags; ++i) mean += p.phi[i] * r[s - i] + p.theta[i - 1] * a[s - i];
        r[s] = mean + a[s];
        prev_a = a[s];
    }
    return {r.end() - static_cast<std::ptrdiff_t>(n), r.end()};
}

nlohmann::json to_json(const ArmaGarchFit& fit) {
    nlohmann::json j;
    const Vec11 coef = fit.params.to_vector();
    nlohmann::json pv;
    for (int i = 0; i < ArmaGarchParams::kSize; ++i) {
        j[kArmaGarchNames[i]] = coef(i);
        pv[kArmaGarchNames[i]] =
            std::isfinite(fit.p_values[i]) ? nlohmann::json(fit.p_values[i]) : nlohmann::json(nullptr);
    }
    j["p_values"] = pv;
    j["loglik"] = fit.loglik;
    j["sigma_forecast"] = fit.sigma_forecast;
    j["iterations"] = fit.iterations;
    j["converged"] = fit.converged;
    return j;
}

}  // namespace mmn

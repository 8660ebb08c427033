#pragma once

#include "mmnoise/marketdata.hpp"
#include "mmnoise/volmodels.hpp"

#include <json.hpp>

#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace mmn {

inline constexpr double kEpsilonTolerance = 1e-10;  ///< |relative price error|
inline constexpr double kMuSigmaTolerance = 1e-8;   ///< squared relative price error

/// One calibrated quote. Which of the optional values is set depends on the
/// solver that produced it.
struct ImpliedPoint {
    int expiry_days = 0;
    double strike = 0.0;
    double moneyness = 0.0;
    std::optional<double> value_eps;
    std::optional<double> value_mu;
    std::optional<double> value_sigma;
    bool converged = false;
    double objective = 0.0;  ///< squared relative pricing error at the result
    /// Set by implied_mu_sigma when other drifts nearby reprice the quote
    /// equally well, i.e. the reported mu is one point on a flat valley.
    bool flat_direction = false;
};

/// Market inputs shared by every quote of a chain. `rate` is per day.
struct QuoteContext {
    double spot = 0.0;
    double rate = 0.0;
};

QuoteContext context_of(const OptionChain& chain);

/// Noise volatility that makes the noise-augmented call price match the
/// quote's last price, given the reference `sigma`. Prices outside the
/// no-arbitrage bounds give the nearest boundary result with
/// converged = false; nothing is thrown for them.
ImpliedPoint implied_epsilon(const OptionQuote& quote, const QuoteContext& ctx, double sigma);

struct MuSigmaOptions {
    int n_steps = 0;  ///< 0: one step per trading day
    int max_evaluations = 2000;
    bool probe_flat_direction = true;
};

/// (mu, sigma) of the drift-preserving tree that reprices the quote, by a
/// 2-D simplex search from (mu0, sigma0). Throws DomainError for p_up
/// outside (0, 1), sigma0 <= 0 or negative n_steps.
ImpliedPoint implied_mu_sigma(const OptionQuote& quote, const QuoteContext& ctx, double p_up,
                              double mu0, double sigma0, const MuSigmaOptions& options = {});

/// Tree volatility at a fixed drift that reprices the quote. Empty if no
/// volatility keeping 0 < q < 1 brackets the price.
std::optional<double> tree_implied_sigma(const OptionQuote& quote, const QuoteContext& ctx,
                                         double p_up, double mu, int n_steps = 0);

/// Whole-chain wrappers. Quotes are solved in parallel; the result order
/// follows the chain.
std::vector<ImpliedPoint> implied_epsilon_surface(const OptionChain& chain, double sigma,
                                                  unsigned workers = 0);
std::vector<ImpliedPoint> implied_mu_sigma_surface(const OptionChain& chain, double p_up,
                                                   double mu0, double sigma0,
                                                   const MuSigmaOptions& options = {},
                                                   unsigned workers = 0);

struct NoiseParams {
    double w_er = 1.0;
    double sigma_n = 0.0;
};

struct EfficientParams {
    double mu_o = 0.0;
    double sigma_o = 0.0;
    double p_up = 0.0;
    double w_er = 1.0;
    double sigma_n = 0.0;
    double mu = 0.0;
    double sigma = 0.0;
    double mu_n = 0.0;
};

/// Lower median: element (n-1)/2 of the sorted values. Throws
/// InsufficientDataError on empty input.
double lower_median(std::span<const double> values);

/// w_er = median(mu_imp) / mu_o and sigma_n = median(sigma_imp) - sigma_o
/// over the converged points. Throws DomainError when mu_o = 0 and
/// InsufficientDataError when no point converged.
NoiseParams calibrate_noise_params(std::span<const ImpliedPoint> surface,
                                   const HistoricalMoments& moments);

/// mu = mu_o w_er, sigma = sigma_o + sigma_n, mu_n = mu_o (w_er - 1).
EfficientParams assemble_params(const HistoricalMoments& moments, const NoiseParams& noise);

enum class ImpliedField { epsilon, mu, sigma };

/// CSV `expiry_days,strike,moneyness,value,converged,objective`; `value` is
/// empty where the requested field is absent.
void write_implied_csv(std::ostream& out, std::span<const ImpliedPoint> points, ImpliedField field);

/// Reads the CSV written by write_implied_csv; `value` lands in `field`.
std::vector<ImpliedPoint> read_implied_csv(std::istream& in, ImpliedField field);

nlohmann::json to_json(const EfficientParams& params);

}  // namespace mmn

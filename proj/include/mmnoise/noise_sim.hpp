#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace mmn {

enum class SimMode { real_world, risk_neutral };

/// How the noise coefficient enters the Euler step.
///   absorbed: eps_t = eps * sgn(B_t), so the noise term is eps * sgn(B)^2 dB
///             and the total volatility is sigma + eps away from B = 0.
///   literal:  constant eps, noise term eps * sgn(B) dB. Quadratic variation
///             is then sigma^2 + eps^2 rather than (sigma + eps)^2.
enum class NoiseConvention { absorbed, literal };

/// Units follow the rest of the library: days, per-day drift and rate,
/// per-sqrt(day) volatilities.
struct PathConfig {
    double spot0 = 100.0;
    double mu = 0.0;
    double sigma = 0.0;
    double epsilon = 0.0;
    double rate = 0.0;
    double horizon_days = 1.0;
    int steps = 1;
    std::uint64_t seed = 0;
    SimMode mode = SimMode::real_world;
    NoiseConvention noise = NoiseConvention::absorbed;
};

/// Throws DomainError unless spot0 > 0, steps >= 1, horizon > 0 and
/// sigma, epsilon are finite.
void validate(const PathConfig& config);

/// H_0 = 0, H_{k+1} = H_k + sgn(B_k) dB_k with sgn(0) = 0. Returns steps + 1
/// values. `stream` selects an independent path for the same seed.
std::vector<double> simulate_H(double horizon, int steps, std::uint64_t seed,
                               std::uint64_t stream = 0);

/// Terminal H values of paths 0..n_paths-1.
std::vector<double> simulate_H_terminals(double horizon, int steps, std::uint64_t seed,
                                         std::size_t n_paths, unsigned workers = 0);

struct SimulatedPath {
    std::vector<double> spot;  ///< steps + 1 values, spot[0] = spot0
    bool floored = false;      ///< some step hit the 1e-12 * spot0 floor
};

/// Euler path S_{k+1} = S_k (1 + m dt + sigma dB_k + noise_k dB_k), with m
/// the drift or the rate depending on the mode. Path `path_index` draws from
/// its own stream, so results do not depend on how paths are scheduled.
SimulatedPath simulate_path(const PathConfig& config, std::uint64_t path_index = 0);

struct TerminalSample {
    std::vector<double> terminal;  ///< S_T for each path
    std::size_t n_floored = 0;
};

/// Antithetic pairs: path 2i uses the normals of stream i, path 2i+1 their
/// negation. `n_paths` is rounded up to even.
TerminalSample simulate_terminals(const PathConfig& config, std::size_t n_paths,
                                  unsigned workers = 0);

struct McPrice {
    double price = 0.0;
    double std_error = 0.0;
    std::size_t n_paths = 0;
    std::size_t n_floored = 0;
};

/// exp(-r T) E[max(S_T - K, 0)] over antithetic pairs; the standard error is
/// taken over pair averages. Throws DomainError unless the mode is
/// risk-neutral, strike >= 0 and n_paths >= 1000.
McPrice mc_call_price(const PathConfig& config, double strike, std::size_t n_paths,
                      unsigned workers = 0);

/// Pairwise (cascade) summation.
double pairwise_sum(std::span<const double> values);

}  // namespace mmn

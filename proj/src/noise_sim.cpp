#include "mmnoise/noise_sim.hpp"

#include "mmnoise/error.hpp"
#include "mmnoise/parallel.hpp"
#include "mmnoise/random.hpp"

#include <algorithm>
#include <cmath>

namespace mmn {

namespace {

constexpr double kFloorFraction = 1e-12;

double sgn(double x) { return static_cast<double>((x > 0.0) - (x < 0.0)); }

struct Stepper {
    double drift_dt;
    double sigma;
    double epsilon;
    bool absorbed;
    double floor;

    /// One Euler step; returns true when the floor was hit.
    bool step(double& s, double b, double db) const {
        const double sg = sgn(b);
        const double noise = absorbed ? epsilon * sg * sg : epsilon * sg;
        const double next = s * (1.0 + drift_dt + (sigma + noise) * db);
        if (next > floor) {
            s = next;
            return false;
        }
        s = floor;
        return true;
    }
};

Stepper stepper_for(const PathConfig& c) {
    const double dt = c.horizon_days / c.steps;
    const double m = c.mode == SimMode::risk_neutral ? c.rate : c.mu;
    return {m * dt, c.sigma, c.epsilon, c.noise == NoiseConvention::absorbed,
            kFloorFraction * c.spot0};
}

}  // namespace

double pairwise_sum(std::span<const double> v) {
    if (v.size() <= 16) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t half = v.size() / 2;
    return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

void validate(const PathConfig& c) {
    if (!(c.spot0 > 0.0)) throw DomainError("simulation: spot0 must be positive");
    if (c.steps < 1) throw DomainError("simulation: steps must be >= 1");
    if (!(c.horizon_days > 0.0)) throw DomainError("simulation: horizon must be positive");
    if (!std::isfinite(c.sigma) || !std::isfinite(c.epsilon) || !std::isfinite(c.mu) ||
        !std::isfinite(c.rate)) {
        throw DomainError("simulation: coefficients must be finite");
    }
}

std::vector<double> simulate_H(double horizon, int steps, std::uint64_t seed, std::uint64_t stream) {
    if (steps < 1) throw DomainError("simulate_H: steps must be >= 1");
    if (!(horizon > 0.0)) throw DomainError("simulate_H: horizon must be positive");
    CounterRng rng(seed, stream);
    const double sqrt_dt = std::sqrt(horizon / steps);
    std::vector<double> h(static_cast<std::size_t>(steps) + 1, 0.0);
    double b = 0.0;
    for (int k = 0; k < steps; ++k) {
        const double db = rng.normal() * sqrt_dt;
        h[k + 1] = h[k] + sgn(b) * db;
        b += db;
    }
    return h;
}

std::vector<double> simulate_H_terminals(double horizon, int steps, std::uint64_t seed,
                                         std::size_t n_paths, unsigned workers) {
    std::vector<double> out(n_paths);
    parallel_for(n_paths, workers,
                 [&](std::size_t i) { out[i] = simulate_H(horizon, steps, seed, i).back(); });
    return out;
}

SimulatedPath simulate_path(const PathConfig& config, std::uint64_t path_index) {
    validate(config);
    const Stepper st = stepper_for(config);
    CounterRng rng(config.seed, path_index);
    const double sqrt_dt = std::sqrt(config.horizon_days / config.steps);

    SimulatedPath out;
    out.spot.resize(static_cast<std::size_t>(config.steps) + 1);
    out.spot[0] = config.spot0;
    double s = config.spot0;
    double b = 0.0;
    for (int k = 0; k < config.steps; ++k) {
        const double db = rng.normal() * sqrt_dt;
        out.floored |= st.step(s, b, db);
        b += db;
        out.spot[k + 1] = s;
    }
    return out;
}

TerminalSample simulate_terminals(const PathConfig& config, std::size_t n_paths, unsigned workers) {
    validate(config);
    const Stepper st = stepper_for(config);
    const double sqrt_dt = std::sqrt(config.horizon_days / config.steps);
    const std::size_t n_pairs = (n_paths + 1) / 2;

    TerminalSample out;
    out.terminal.resize(2 * n_pairs);
    std::vector<unsigned char> floored(2 * n_pairs, 0);
    parallel_for(n_pairs, workers, [&](std::size_t i) {
        CounterRng rng(config.seed, i);
        double sa = config.spot0;
        double sb = config.spot0;
        double b = 0.0;  // the mirrored path's Brownian motion is -b
        bool fa = false;
        bool fb = false;
        for (int k = 0; k < config.steps; ++k) {
            const double db = rng.normal() * sqrt_dt;
            fa |= st.step(sa, b, db);
            fb |= st.step(sb, -b, -db);
            b += db;
        }
        out.terminal[2 * i] = sa;
        out.terminal[2 * i + 1] = sb;
        floored[2 * i] = fa;
        floored[2 * i + 1] = fb;
    });
    out.n_floored = static_cast<std::size_t>(std::count(floored.begin(), floored.end(), 1));
    return out;
}

McPrice mc_call_price(const PathConfig& config, double strike, std::size_t n_paths, unsigned workers) {
    if (config.mode != SimMode::risk_neutral) {
        throw DomainError("mc_call_price: configuration must be risk-neutral");
    }
    if (!(strike >= 0.0)) throw DomainError("mc_call_price: strike must be non-negative");
    if (n_paths < 1000) throw DomainError("mc_call_price: need at least 1000 paths");

    const TerminalSample sample = simulate_terminals(config, n_paths, workers);
    const double disc = std::exp(-config.rate * config.horizon_days);
    const std::size_t n_pairs = sample.terminal.size() / 2;

    std::vector<double> pair_mean(n_pairs);
    for (std::size_t i = 0; i < n_pairs; ++i) {
        const double pa = std::max(sample.terminal[2 * i] - strike, 0.0);
        const double pb = std::max(sample.terminal[2 * i + 1] - strike, 0.0);
        pair_mean[i] = 0.5 * disc * (pa + pb);
    }
    const double mean = pairwise_sum(pair_mean) / static_cast<double>(n_pairs);
    std::vector<double> sq(n_pairs);
    for (std::size_t i = 0; i < n_pairs; ++i) sq[i] = (pair_mean[i] - mean) * (pair_mean[i] - mean);
    const double var = pairwise_sum(sq) / static_cast<double>(n_pairs - 1);

    McPrice out;
    out.price = mean;
    out.std_error = std::sqrt(var / static_cast<double>(n_pairs));
    out.n_paths = sample.terminal.size();
    out.n_floored = sample.n_floored;
    return out;
}

}  // namespace mmn

#pragma once

#include "mmnoise/error.hpp"
#include "mmnoise/marketdata.hpp"
#include "mmnoise/surfaces.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace mmn {

enum class VolMode { historical, arma_garch };

struct PipelineConfig {
    std::filesystem::path chain_path;
    std::filesystem::path returns_path;
    ReturnsFormat returns_format = ReturnsFormat::returns;
    double spot = 0.0;
    double annual_rate = 0.0;
    Date quote_date{};
    std::string symbol;
    int horizon_boundary_days = 0;
    VolMode vol_mode = VolMode::historical;
    int n_steps = 0;  ///< tree steps for implied (mu, sigma); 0 = one per day
    std::optional<Bandwidth> bandwidth;  ///< default: 0.1 x data range
    int grid_t = 25;
    int grid_m = 25;
    double winsor_quantile = 0.99;
    std::filesystem::path output_dir;
    std::uint64_t seed = 0;
    unsigned workers = 0;
};

/// Reads the keys
///   chain_path, returns_path, spot, annual_rate, horizon_boundary_days,
///   output_dir (required) and returns_format, quote_date, symbol, vol_mode,
///   n_steps, bandwidth_t, bandwidth_m, grid_t, grid_m, winsor_quantile,
///   seed, workers (optional).
/// Throws ConfigError on missing keys, wrong types or invalid values.
PipelineConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PipelineConfig& config);

/// Checks value ranges only; paths are checked when the run opens them.
void validate(const PipelineConfig& config);

/// A stage failed. `cause` keeps the category of the original error.
class StageError : public Error {
public:
    enum class Cause { config, data, convergence };
    StageError(std::string stage, Cause cause, const std::string& message)
        : Error("stage " + stage + ": " + message), stage_(std::move(stage)), cause_(cause) {}
    const std::string& stage() const noexcept { return stage_; }
    Cause cause() const noexcept { return cause_; }

private:
    std::string stage_;
    Cause cause_;
};

struct PipelineResult {
    nlohmann::json report;  ///< everything except timings
    nlohmann::json timings;  ///< milliseconds per stage
};

/// ingest -> clean -> split -> moments [-> ARMA-GARCH] -> implied eps ->
/// implied (mu, sigma) -> noise and efficient parameters -> smoothed grids.
/// Artifacts and report.json go to output_dir. On failure a `.partial`
/// marker naming the stage is left there and StageError is thrown.
PipelineResult run_pipeline(const PipelineConfig& config);

}  // namespace mmn

#include "mmnoise/pipeline.hpp"

#include "mmnoise/analytic.hpp"
#include "mmnoise/calibration.hpp"
#include "mmnoise/volmodels.hpp"

#include <chrono>
#include <fstream>

namespace mmn {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <typename T>
T get_required(const json& j, const char* key) {
    if (!j.contains(key)) throw ConfigError(std::string("missing required key '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("key '") + key + "' has the wrong type");
    }
}

template <typename T>
void get_optional(const json& j, const char* key, T& out) {
    if (!j.contains(key) || j.at(key).is_null()) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("key '") + key + "' has the wrong type");
    }
}

const char* name_of(VolMode m) { return m == VolMode::historical ? "historical" : "arma-garch"; }

class StageRunner {
public:
    explicit StageRunner(json& timings) : timings_(timings) {}

    template <typename F>
    void operator()(const std::string& name, F&& body) {
        using Cause = StageError::Cause;
        const auto start = std::chrono::steady_clock::now();
        try {
            body();
        } catch (const StageError&) {
            throw;
        } catch (const ConfigError& e) {
            throw StageError(name, Cause::config, e.what());
        } catch (const DomainError& e) {
            throw StageError(name, Cause::config, e.what());
        } catch (const ConvergenceError& e) {
            throw StageError(name, Cause::convergence, e.what());
        } catch (const std::exception& e) {
            throw StageError(name, Cause::data, e.what());
        }
        const std::chrono::duration<double, std::milli> elapsed = std::chrono::steady_clock::now() - start;
        timings_[name] = elapsed.count();
    }

private:
    json& timings_;
};

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw IoError("write failed: " + path.string());
}

void write_points(const fs::path& path, const std::vector<ImpliedPoint>& pts, ImpliedField field) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    write_implied_csv(out, pts, field);
}

std::vector<SurfacePoint> converged_points(const std::vector<ImpliedPoint>& pts, ImpliedField field) {
    std::vector<SurfacePoint> out;
    for (const auto& p : pts) {
        if (!p.converged) continue;
        const auto& v = field == ImpliedField::epsilon ? p.value_eps
                        : field == ImpliedField::mu    ? p.value_mu
                                                       : p.value_sigma;
        if (v) out.push_back({static_cast<double>(p.expiry_days), p.moneyness, *v});
    }
    return out;
}

}  // namespace

PipelineConfig config_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
    PipelineConfig c;
    c.chain_path = get_required<std::string>(j, "chain_path");
    c.returns_path = get_required<std::string>(j, "returns_path");
    c.spot = get_required<double>(j, "spot");
    c.annual_rate = get_required<double>(j, "annual_rate");
    c.horizon_boundary_days = get_required<int>(j, "horizon_boundary_days");
    c.output_dir = get_required<std::string>(j, "output_dir");

    std::string text;
    get_optional(j, "returns_format", text);
    if (!text.empty()) {
        if (text == "returns") {
            c.returns_format = ReturnsFormat::returns;
        } else if (text == "prices") {
            c.returns_format = ReturnsFormat::prices;
        } else {
            throw ConfigError("returns_format must be 'returns' or 'prices'");
        }
    }
    text.clear();
    get_optional(j, "quote_date", text);
    if (!text.empty()) {
        try {
            c.quote_date = parse_iso_date(text);
        } catch (const ParseError& e) {
            throw ConfigError(std::string("quote_date: ") + e.what());
        }
    }
    get_optional(j, "symbol", c.symbol);
    text.clear();
    get_optional(j, "vol_mode", text);
    if (!text.empty()) {
        if (text == "historical") {
            c.vol_mode = VolMode::historical;
        } else if (text == "arma-garch") {
            c.vol_mode = VolMode::arma_garch;
        } else {
            throw ConfigError("vol_mode must be 'historical' or 'arma-garch'");
        }
    }
    get_optional(j, "n_steps", c.n_steps);
    double bt = 0.0;
    double bm = 0.0;
    get_optional(j, "bandwidth_t", bt);
    get_optional(j, "bandwidth_m", bm);
    if (bt != 0.0 || bm != 0.0) {
        if (!(bt > 0.0) || !(bm > 0.0)) throw ConfigError("bandwidth_t and bandwidth_m must both be positive");
        c.bandwidth = Bandwidth{bt, bm};
    }
    get_optional(j, "grid_t", c.grid_t);
    get_optional(j, "grid_m", c.grid_m);
    get_optional(j, "winsor_quantile", c.winsor_quantile);
    get_optional(j, "seed", c.seed);
    get_optional(j, "workers", c.workers);
    validate(c);
    return c;
}

json to_json(const PipelineConfig& c) {
    json j = {{"chain_path", c.chain_path.string()},
              {"returns_path", c.returns_path.string()},
              {"returns_format", c.returns_format == ReturnsFormat::returns ? "returns" : "prices"},
              {"spot", c.spot},
              {"annual_rate", c.annual_rate},
              {"quote_date", format_iso_date(c.quote_date)},
              {"symbol", c.symbol},
              {"horizon_boundary_days", c.horizon_boundary_days},
              {"vol_mode", name_of(c.vol_mode)},
              {"n_steps", c.n_steps},
              {"grid_t", c.grid_t},
              {"grid_m", c.grid_m},
              {"winsor_quantile", c.winsor_quantile},
              {"output_dir", c.output_dir.string()},
              {"seed", c.seed}};
    if (c.bandwidth) {
        j["bandwidth_t"] = c.bandwidth->t;
        j["bandwidth_m"] = c.bandwidth->m;
    }
    return j;
}

void validate(const PipelineConfig& c) {
    if (c.chain_path.empty() || c.returns_path.empty()) throw ConfigError("chain_path and returns_path are required");
    if (c.output_dir.empty()) throw ConfigError("output_dir is required");
    if (!(c.spot > 0.0)) throw ConfigError("spot must be positive");
    if (!(c.annual_rate >= 0.0)) throw ConfigError("annual_rate must be non-negative");
    if (c.horizon_boundary_days < 1) throw ConfigError("horizon_boundary_days must be >= 1");
    if (c.n_steps < 0) throw ConfigError("n_steps must be >= 0");
    if (c.grid_t < 1 || c.grid_m < 1) throw ConfigError("grid_t and grid_m must be >= 1");
    if (!(c.winsor_quantile > 0.0 && c.winsor_quantile < 1.0)) {
        throw ConfigError("winsor_quantile must lie in (0, 1)");
    }
}

PipelineResult run_pipeline(const PipelineConfig& config) {
    PipelineResult result;
    json& report = result.report;
    StageRunner stage(result.timings);

    const fs::path marker = config.output_dir / ".partial";
    auto fail = [&](const StageError& e) {
        std::error_code ec;
        fs::create_directories(config.output_dir, ec);
        std::ofstream out(marker);
        out << json{{"stage", e.stage()}, {"error", e.what()}}.dump(2) << '\n';
    };

    try {
        stage("config", [&] {
            validate(config);
            fs::create_directories(config.output_dir);
            std::error_code ec;
            fs::remove(marker, ec);
            report["config"] = to_json(config);
        });

        OptionChain raw;
        ReturnSeries returns;
        stage("ingest", [&] {
            raw = load_chain(config.chain_path, config.spot, config.annual_rate, config.quote_date,
                             config.symbol);
            returns = load_returns(config.returns_path, config.returns_format);
            report["inputs"] = {{"n_quotes_raw", raw.quotes.size()}, {"window", returns.window}};
        });

        OptionChain clean;
        stage("clean", [&] {
            clean = clean_chain(raw);
            report["inputs"]["n_quotes_clean"] = clean.quotes.size();
        });

        std::pair<OptionChain, OptionChain> parts;
        stage("split", [&] { parts = split_by_horizon(clean, config.horizon_boundary_days); });

        HistoricalMoments moments;
        stage("moments", [&] {
            moments = historical_moments(returns);
            report["historical"] = {{"mu_o", moments.mu_o}, {"sigma_o", moments.sigma_o}, {"p_n", moments.p_up}};
        });

        double sigma_ref = moments.sigma_o;
        if (config.vol_mode == VolMode::arma_garch) {
            stage("arma_garch", [&] {
                const ArmaGarchFit fit = fit_arma_garch(returns);
                report["arma_garch"] = to_json(fit);
                sigma_ref = fit.sigma_forecast;
            });
        }
        report["sigma_reference"] = sigma_ref;

        const std::pair<const char*, const OptionChain*> subsets[] = {{"short", &parts.first},
                                                                      {"long", &parts.second}};
        for (const auto& [name, chain] : subsets) {
            json& sub = report["subsets"][name];
            sub["n_quotes"] = chain->quotes.size();
            if (chain->quotes.empty()) {
                sub["skipped"] = true;
                continue;
            }
            const std::string tag(name);

            std::vector<ImpliedPoint> eps;
            stage("implied_eps_" + tag, [&] {
                eps = implied_epsilon_surface(*chain, sigma_ref, config.workers);
                write_points(config.output_dir / ("implied_eps_" + tag + ".csv"), eps, ImpliedField::epsilon);
                std::vector<double> values;
                for (const auto& p : eps) {
                    if (p.converged) values.push_back(*p.value_eps);
                }
                sub["epsilon"] = {{"n_converged", values.size()}};
                if (!values.empty()) sub["epsilon"]["median"] = lower_median(values);
            });

            std::vector<ImpliedPoint> musig;
            stage("implied_mu_sigma_" + tag, [&] {
                MuSigmaOptions opts;
                opts.n_steps = config.n_steps;
                musig = implied_mu_sigma_surface(*chain, moments.p_up, moments.mu_o, moments.sigma_o, opts,
                                                 config.workers);
                write_points(config.output_dir / ("implied_mu_" + tag + ".csv"), musig, ImpliedField::mu);
                write_points(config.output_dir / ("implied_sigma_" + tag + ".csv"), musig, ImpliedField::sigma);
                std::size_t n_conv = 0;
                std::size_t n_flat = 0;
                for (const auto& p : musig) {
                    n_conv += p.converged;
                    n_flat += p.flat_direction;
                }
                sub["mu_sigma"] = {{"n_converged", n_conv}, {"n_flat_direction", n_flat}};
            });

            stage("noise_params_" + tag, [&] {
                const NoiseParams noise = calibrate_noise_params(musig, moments);
                sub["table3"] = to_json(assemble_params(moments, noise));
            });

            stage("surfaces_" + tag, [&] {
                const std::pair<const char*, ImpliedField> fields[] = {
                    {"eps", ImpliedField::epsilon}, {"mu", ImpliedField::mu}, {"sigma", ImpliedField::sigma}};
                for (const auto& [fname, field] : fields) {
                    auto pts = converged_points(field == ImpliedField::epsilon ? eps : musig, field);
                    if (pts.empty()) continue;
                    std::vector<double> values;
                    for (const auto& p : pts) values.push_back(p.value);
                    values = winsorize(values, config.winsor_quantile);
                    for (std::size_t i = 0; i < pts.size(); ++i) pts[i].value = values[i];
                    const Bandwidth bw = config.bandwidth.value_or(default_bandwidth(pts));
                    const SurfaceGrid grid = smooth_surface(pts, config.grid_t, config.grid_m, bw, config.workers);
                    const std::string file = std::string("grid_") + fname + "_" + tag + ".csv";
                    export_grid(grid, config.output_dir / file);
                    sub["grids"][fname] = {{"file", file},
                                           {"bandwidth_t", bw.t},
                                           {"bandwidth_m", bw.m},
                                           {"n_missing", grid.missing.count()}};
                }
            });
        }

        stage("report", [&] {
            json full = report;
            full["timings_ms"] = result.timings;
            write_text(config.output_dir / "report.json", full.dump(2) + "\n");
        });
    } catch (const StageError& e) {
        fail(e);
        throw;
    }
    return result;
}

}  // namespace mmn

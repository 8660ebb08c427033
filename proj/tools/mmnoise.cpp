// Command-line front end. Every subcommand wraps one library operation;
// `pipeline` runs the whole calibration from a JSON config.
//
// Exit codes: 0 ok, 2 configuration / invalid input, 3 data, 4 convergence.

#include "mmnoise/analytic.hpp"
#include "mmnoise/calibration.hpp"
#include "mmnoise/dgsm_tree.hpp"
#include "mmnoise/marketdata.hpp"
#include "mmnoise/noise_sim.hpp"
#include "mmnoise/pipeline.hpp"
#include "mmnoise/surfaces.hpp"
#include "mmnoise/volmodels.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

enum Exit { kOk = 0, kConfig = 2, kData = 3, kConvergence = 4 };

struct ChainArgs {
    std::string chain;
    double spot = 0.0;
    double rate = 0.0;  // annual
    std::string date = "1970-01-01";
    std::string symbol;

    void add_to(CLI::App* app) {
        app->add_option("--chain", chain, "option chain CSV")->required();
        app->add_option("--spot", spot, "spot price")->required();
        app->add_option("--rate", rate, "annual riskless rate, converted with 252 days/year")->required();
        app->add_option("--date", date, "quote date YYYY-MM-DD");
        app->add_option("--symbol", symbol);
    }
    mmn::OptionChain load(bool clean = true) const {
        auto c = mmn::load_chain(chain, spot, rate, mmn::parse_iso_date(date), symbol);
        return clean ? mmn::clean_chain(c) : c;
    }
};

mmn::ReturnsFormat returns_format(const std::string& s) {
    if (s == "returns") return mmn::ReturnsFormat::returns;
    if (s == "prices") return mmn::ReturnsFormat::prices;
    throw mmn::ConfigError("--format must be 'returns' or 'prices'");
}

/// Writes to `path`, or to stdout when it is empty.
template <typename Fn>
void emit(const std::string& path, Fn&& write) {
    if (path.empty()) {
        write(std::cout);
        return;
    }
    std::ofstream out(path);
    if (!out) throw mmn::IoError("cannot open " + path + " for writing");
    write(out);
    if (!out) throw mmn::IoError("write failed: " + path);
}

std::string g17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw mmn::ConfigError("cannot open config " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw mmn::ConfigError(path + ": " + e.what());
    }
}

int report_error(const char* kind, const std::exception& e, int code) {
    std::cerr << "mmnoise: " << kind << ": " << e.what() << '\n';
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Market microstructure noise pricing and calibration"};
    app.require_subcommand(1);
    unsigned workers = 0;
    app.add_option("--workers", workers, "worker threads (0 = all cores)");

    // ingest
    auto* ingest = app.add_subcommand("ingest", "load, clean and split a chain");
    ChainArgs ingest_chain;
    ingest_chain.add_to(ingest);
    int ingest_boundary = 0;
    std::string ingest_out;
    std::string ingest_returns;
    std::string ingest_format = "returns";
    ingest->add_option("--boundary", ingest_boundary, "short/long horizon boundary, days");
    ingest->add_option("--out", ingest_out, "write the cleaned chain CSV here");
    ingest->add_option("--returns", ingest_returns, "returns CSV to summarise");
    ingest->add_option("--format", ingest_format, "returns | prices");

    // price
    auto* price = app.add_subcommand("price", "noise-augmented closed-form call price");
    mmn::NoisePricingInputs<double> price_in;
    double price_rate = 0.0;
    price->add_option("--spot", price_in.spot)->required();
    price->add_option("--strike", price_in.strike)->required();
    price->add_option("--days", price_in.tau, "time to expiry, trading days")->required();
    price->add_option("--rate", price_rate, "annual rate");
    price->add_option("--sigma", price_in.sigma, "per sqrt(day)")->required();
    price->add_option("--eps", price_in.epsilon, "per sqrt(day), may be negative");

    // tree-price
    auto* tree = app.add_subcommand("tree-price", "drift-preserving binomial tree call price");
    double t_spot = 0, t_strike = 0, t_days = 0, t_mu = 0, t_sigma = 0, t_p = 0.5, t_rate = 0;
    int t_steps = 0;
    tree->add_option("--spot", t_spot)->required();
    tree->add_option("--strike", t_strike)->required();
    tree->add_option("--days", t_days)->required();
    tree->add_option("--mu", t_mu, "per day")->required();
    tree->add_option("--sigma", t_sigma, "per sqrt(day)")->required();
    tree->add_option("--p", t_p, "up probability");
    tree->add_option("--rate", t_rate, "annual rate");
    tree->add_option("--steps", t_steps, "lattice steps (default: one per day)");

    // simulate
    auto* sim = app.add_subcommand("simulate", "Monte Carlo paths of the noise SDE");
    mmn::PathConfig sc;
    double s_rate = 0.0;
    std::size_t s_paths = 1000;
    std::string s_mode = "real-world";
    std::string s_noise = "absorbed";
    bool s_summary = false;
    double s_strike = -1.0;
    std::string s_out;
    sim->add_option("--spot", sc.spot0);
    sim->add_option("--mu", sc.mu, "per day");
    sim->add_option("--sigma", sc.sigma, "per sqrt(day)");
    sim->add_option("--eps", sc.epsilon, "per sqrt(day)");
    sim->add_option("--rate", s_rate, "annual rate");
    sim->add_option("--days", sc.horizon_days);
    sim->add_option("--steps", sc.steps);
    sim->add_option("--seed", sc.seed);
    sim->add_option("--paths", s_paths);
    sim->add_option("--mode", s_mode, "real-world | risk-neutral");
    sim->add_option("--noise", s_noise, "absorbed | literal");
    sim->add_flag("--summary", s_summary, "one summary row instead of per-path values");
    sim->add_option("--strike", s_strike, "also price a call at this strike (risk-neutral mode)");
    sim->add_option("--out", s_out, "CSV output (default stdout)");

    // fit-garch
    auto* fit = app.add_subcommand("fit-garch", "ARMA(3,3)-GARCH(1,1) fit with t innovations");
    std::string f_returns;
    std::string f_format = "returns";
    std::string f_out;
    fit->add_option("--returns", f_returns)->required();
    fit->add_option("--format", f_format, "returns | prices");
    fit->add_option("--out", f_out, "JSON output (default stdout)");

    // implied-eps
    auto* ieps = app.add_subcommand("implied-eps", "implied noise volatility per quote");
    ChainArgs e_chain;
    e_chain.add_to(ieps);
    std::optional<double> e_sigma;
    std::string e_returns;
    std::string e_format = "returns";
    std::string e_vol = "historical";
    std::string e_out;
    ieps->add_option("--sigma", e_sigma, "reference volatility per sqrt(day)");
    ieps->add_option("--returns", e_returns, "derive the reference volatility from returns");
    ieps->add_option("--format", e_format, "returns | prices");
    ieps->add_option("--vol-mode", e_vol, "historical | arma-garch (with --returns)");
    ieps->add_option("--out", e_out, "CSV output (default stdout)");

    // implied-musigma
    auto* ims = app.add_subcommand("implied-musigma", "implied tree drift and volatility per quote");
    ChainArgs m_chain;
    m_chain.add_to(ims);
    std::string m_returns;
    std::string m_format = "returns";
    std::optional<double> m_mu0, m_sigma0, m_p;
    int m_steps = 0;
    std::string m_out_mu;
    std::string m_out_sigma;
    ims->add_option("--returns", m_returns, "historical returns for the initial point and p");
    ims->add_option("--format", m_format, "returns | prices");
    ims->add_option("--mu0", m_mu0);
    ims->add_option("--sigma0", m_sigma0);
    ims->add_option("--p", m_p);
    ims->add_option("--steps", m_steps, "tree steps (default: one per day)");
    ims->add_option("--out-mu", m_out_mu, "CSV of implied mu (default stdout)");
    ims->add_option("--out-sigma", m_out_sigma, "CSV of implied sigma");

    // calibrate-noise
    auto* cal = app.add_subcommand("calibrate-noise", "noise and efficient parameters");
    std::string c_mu, c_sigma, c_returns, c_format = "returns", c_out;
    cal->add_option("--mu-surface", c_mu)->required();
    cal->add_option("--sigma-surface", c_sigma)->required();
    cal->add_option("--returns", c_returns)->required();
    cal->add_option("--format", c_format, "returns | prices");
    cal->add_option("--out", c_out, "JSON output (default stdout)");

    // surface
    auto* surf = app.add_subcommand("surface", "winsorize and smooth an implied surface");
    std::string g_in, g_out;
    double g_q = 0.99;
    std::optional<double> g_bt, g_bm;
    int g_nt = 25, g_nm = 25;
    bool g_all = false;
    surf->add_option("--input", g_in, "implied CSV")->required();
    surf->add_option("--out", g_out, "grid CSV; the JSON sidecar goes next to it")->required();
    surf->add_option("--quantile", g_q, "winsorizing quantile");
    surf->add_option("--bandwidth-t", g_bt);
    surf->add_option("--bandwidth-m", g_bm);
    surf->add_option("--nt", g_nt);
    surf->add_option("--nm", g_nm);
    surf->add_flag("--include-unconverged", g_all);

    // pipeline
    auto* pipe = app.add_subcommand("pipeline", "end-to-end calibration from a JSON config");
    std::string p_config;
    std::optional<std::string> p_chain, p_returns, p_out, p_vol, p_date;
    std::optional<double> p_spot, p_rate;
    std::optional<int> p_boundary, p_steps;
    std::optional<std::uint64_t> p_seed;
    pipe->add_option("--config", p_config, "JSON config")->required();
    pipe->add_option("--chain", p_chain);
    pipe->add_option("--returns", p_returns);
    pipe->add_option("--output-dir", p_out);
    pipe->add_option("--vol-mode", p_vol);
    pipe->add_option("--quote-date", p_date);
    pipe->add_option("--spot", p_spot);
    pipe->add_option("--rate", p_rate, "annual rate");
    pipe->add_option("--boundary", p_boundary, "horizon boundary, days");
    pipe->add_option("--n-steps", p_steps);
    pipe->add_option("--seed", p_seed);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfig;
    }

    try {
        if (*ingest) {
            const auto raw = ingest_chain.load(false);
            const auto clean = mmn::clean_chain(raw);
            json out = {{"symbol", raw.symbol},
                        {"n_quotes_raw", raw.quotes.size()},
                        {"n_quotes_clean", clean.quotes.size()}};
            if (ingest_boundary > 0) {
                const auto [s, l] = mmn::split_by_horizon(clean, ingest_boundary);
                out["n_short"] = s.quotes.size();
                out["n_long"] = l.quotes.size();
            }
            if (!ingest_returns.empty()) {
                const auto r = mmn::load_returns(ingest_returns, returns_format(ingest_format));
                const auto m = mmn::historical_moments(r);
                out["window"] = r.window;
                out["historical"] = {{"mu_o", m.mu_o}, {"sigma_o", m.sigma_o}, {"p_n", m.p_up}};
            }
            if (!ingest_out.empty()) emit(ingest_out, [&](std::ostream& os) { mmn::write_chain(os, clean); });
            std::cout << out.dump(2) << '\n';
        } else if (*price) {
            price_in.rate = mmn::daily_rate(price_rate);
            std::cout << g17(mmn::bsm_noise_call(price_in)) << '\n';
        } else if (*tree) {
            const int n = t_steps > 0 ? t_steps : static_cast<int>(std::ceil(t_days));
            const auto tp = mmn::tree_params(t_mu, t_sigma, t_p, mmn::daily_rate(t_rate), t_days, n);
            std::cout << g17(mmn::price_european(t_spot, t_strike, tp)) << '\n';
        } else if (*sim) {
            sc.rate = mmn::daily_rate(s_rate);
            if (s_mode == "real-world") {
                sc.mode = mmn::SimMode::real_world;
            } else if (s_mode == "risk-neutral") {
                sc.mode = mmn::SimMode::risk_neutral;
            } else {
                throw mmn::ConfigError("--mode must be 'real-world' or 'risk-neutral'");
            }
            if (s_noise == "absorbed") {
                sc.noise = mmn::NoiseConvention::absorbed;
            } else if (s_noise == "literal") {
                sc.noise = mmn::NoiseConvention::literal;
            } else {
                throw mmn::ConfigError("--noise must be 'absorbed' or 'literal'");
            }
            if (s_strike >= 0.0) {
                const auto mc = mmn::mc_call_price(sc, s_strike, s_paths, workers);
                emit(s_out, [&](std::ostream& os) {
                    os << "strike,price,std_error,n_paths,n_floored\n"
                       << g17(s_strike) << ',' << g17(mc.price) << ',' << g17(mc.std_error) << ','
                       << mc.n_paths << ',' << mc.n_floored << '\n';
                });
            } else {
                const auto sample = mmn::simulate_terminals(sc, s_paths, workers);
                emit(s_out, [&](std::ostream& os) {
                    if (s_summary) {
                        const auto& t = sample.terminal;
                        const double n = static_cast<double>(t.size());
                        const double mean = mmn::pairwise_sum(t) / n;
                        std::vector<double> sq(t.size());
                        for (std::size_t i = 0; i < t.size(); ++i) sq[i] = (t[i] - mean) * (t[i] - mean);
                        const double sd = std::sqrt(mmn::pairwise_sum(sq) / (n - 1.0));
                        os << "n_paths,mean,std_dev,min,max,n_floored\n"
                           << t.size() << ',' << g17(mean) << ',' << g17(sd) << ','
                           << g17(*std::min_element(t.begin(), t.end())) << ','
                           << g17(*std::max_element(t.begin(), t.end())) << ',' << sample.n_floored << '\n';
                    } else {
                        os << "path,terminal\n";
                        for (std::size_t i = 0; i < sample.terminal.size(); ++i) {
                            os << i << ',' << g17(sample.terminal[i]) << '\n';
                        }
                    }
                });
            }
        } else if (*fit) {
            const auto r = mmn::load_returns(f_returns, returns_format(f_format));
            const auto result = mmn::fit_arma_garch(r);
            emit(f_out, [&](std::ostream& os) { os << mmn::to_json(result).dump(2) << '\n'; });
        } else if (*ieps) {
            double sigma = 0.0;
            if (e_sigma) {
                sigma = *e_sigma;
            } else if (!e_returns.empty()) {
                const auto r = mmn::load_returns(e_returns, returns_format(e_format));
                if (e_vol == "historical") {
                    sigma = mmn::historical_moments(r).sigma_o;
                } else if (e_vol == "arma-garch") {
                    sigma = mmn::fit_arma_garch(r).sigma_forecast;
                } else {
                    throw mmn::ConfigError("--vol-mode must be 'historical' or 'arma-garch'");
                }
            } else {
                throw mmn::ConfigError("give --sigma or --returns");
            }
            const auto pts = mmn::implied_epsilon_surface(e_chain.load(), sigma, workers);
            emit(e_out, [&](std::ostream& os) { mmn::write_implied_csv(os, pts, mmn::ImpliedField::epsilon); });
        } else if (*ims) {
            std::optional<mmn::HistoricalMoments> hm;
            if (!m_returns.empty()) hm = mmn::historical_moments(mmn::load_returns(m_returns, returns_format(m_format)));
            const auto pick = [&](const std::optional<double>& flag, double mmn::HistoricalMoments::*field,
                                  const char* name) {
                if (flag) return *flag;
                if (hm) return (*hm).*field;
                throw mmn::ConfigError(std::string("give --") + name + " or --returns");
            };
            const double mu0 = pick(m_mu0, &mmn::HistoricalMoments::mu_o, "mu0");
            const double sigma0 = pick(m_sigma0, &mmn::HistoricalMoments::sigma_o, "sigma0");
            const double p = pick(m_p, &mmn::HistoricalMoments::p_up, "p");
            mmn::MuSigmaOptions opts;
            opts.n_steps = m_steps;
            const auto pts = mmn::implied_mu_sigma_surface(m_chain.load(), p, mu0, sigma0, opts, workers);
            emit(m_out_mu, [&](std::ostream& os) { mmn::write_implied_csv(os, pts, mmn::ImpliedField::mu); });
            if (!m_out_sigma.empty()) {
                emit(m_out_sigma, [&](std::ostream& os) { mmn::write_implied_csv(os, pts, mmn::ImpliedField::sigma); });
            }
        } else if (*cal) {
            const auto read = [](const std::string& path, mmn::ImpliedField field) {
                std::ifstream in(path);
                if (!in) throw mmn::IoError("cannot open " + path);
                try {
                    return mmn::read_implied_csv(in, field);
                } catch (const mmn::ParseError& e) {
                    throw mmn::ParseError(path, e);
                }
            };
            auto mus = read(c_mu, mmn::ImpliedField::mu);
            const auto sigmas = read(c_sigma, mmn::ImpliedField::sigma);
            if (mus.size() != sigmas.size()) throw mmn::ParseError("mu and sigma surfaces differ in length");
            for (std::size_t i = 0; i < mus.size(); ++i) {
                if (mus[i].expiry_days != sigmas[i].expiry_days || mus[i].strike != sigmas[i].strike) {
                    throw mmn::ParseError("mu and sigma surfaces list different quotes", i + 2);
                }
                mus[i].value_sigma = sigmas[i].value_sigma;
                mus[i].converged = mus[i].converged && sigmas[i].converged;
            }
            const auto hm = mmn::historical_moments(mmn::load_returns(c_returns, returns_format(c_format)));
            const auto params = mmn::assemble_params(hm, mmn::calibrate_noise_params(mus, hm));
            emit(c_out, [&](std::ostream& os) { os << mmn::to_json(params).dump(2) << '\n'; });
        } else if (*surf) {
            std::ifstream in(g_in);
            if (!in) throw mmn::IoError("cannot open " + g_in);
            std::vector<mmn::ImpliedPoint> pts;
            try {
                pts = mmn::read_implied_csv(in, mmn::ImpliedField::epsilon);
            } catch (const mmn::ParseError& e) {
                throw mmn::ParseError(g_in, e);
            }
            std::vector<mmn::SurfacePoint> sp;
            for (const auto& p : pts) {
                if ((p.converged || g_all) && p.value_eps) {
                    sp.push_back({static_cast<double>(p.expiry_days), p.moneyness, *p.value_eps});
                }
            }
            if (sp.empty()) throw mmn::InsufficientDataError("no usable points in " + g_in);
            std::vector<double> v;
            for (const auto& p : sp) v.push_back(p.value);
            v = mmn::winsorize(v, g_q);
            for (std::size_t i = 0; i < sp.size(); ++i) sp[i].value = v[i];
            mmn::Bandwidth bw = mmn::default_bandwidth(sp);
            if (g_bt) bw.t = *g_bt;
            if (g_bm) bw.m = *g_bm;
            mmn::export_grid(mmn::smooth_surface(sp, g_nt, g_nm, bw, workers), g_out);
        } else if (*pipe) {
            json cfg = read_json_file(p_config);
            if (!cfg.is_object()) throw mmn::ConfigError(p_config + ": not a JSON object");
            if (p_chain) cfg["chain_path"] = *p_chain;
            if (p_returns) cfg["returns_path"] = *p_returns;
            if (p_out) cfg["output_dir"] = *p_out;
            if (p_vol) cfg["vol_mode"] = *p_vol;
            if (p_date) cfg["quote_date"] = *p_date;
            if (p_spot) cfg["spot"] = *p_spot;
            if (p_rate) cfg["annual_rate"] = *p_rate;
            if (p_boundary) cfg["horizon_boundary_days"] = *p_boundary;
            if (p_steps) cfg["n_steps"] = *p_steps;
            if (p_seed) cfg["seed"] = *p_seed;
            if (workers) cfg["workers"] = workers;
            const auto config = mmn::config_from_json(cfg);
            const auto result = mmn::run_pipeline(config);
            std::cout << (config.output_dir / "report.json").string() << '\n';
        }
    } catch (const mmn::StageError& e) {
        using C = mmn::StageError::Cause;
        const int code = e.cause() == C::config ? kConfig : e.cause() == C::data ? kData : kConvergence;
        return report_error("pipeline failed", e, code);
    } catch (const mmn::ConfigError& e) {
        return report_error("config error", e, kConfig);
    } catch (const mmn::DomainError& e) {
        return report_error("invalid input", e, kConfig);
    } catch (const mmn::ConvergenceError& e) {
        return report_error("no convergence", e, kConvergence);
    } catch (const mmn::Error& e) {
        return report_error("data error", e, kData);
    } catch (const std::exception& e) {
        return report_error("error", e, kData);
    }
    return kOk;
}

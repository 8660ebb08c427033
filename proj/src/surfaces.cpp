#include "mmnoise/surfaces.hpp"

#include "mmnoise/error.hpp"
#include "mmnoise/parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace mmn {

namespace {

constexpr double kMinWeight = 1e-12;

double range_of(std::span<const SurfacePoint> pts, double SurfacePoint::*field) {
    const auto [lo, hi] = std::minmax_element(pts.begin(), pts.end(), [field](const auto& a, const auto& b) {
        return a.*field < b.*field;
    });
    return (*hi).*field - (*lo).*field;
}

void check_axis(const std::vector<double>& axis, const char* name) {
    if (axis.empty()) throw DomainError(std::string("smooth_surface: empty ") + name);
    for (std::size_t i = 1; i < axis.size(); ++i) {
        if (!(axis[i] > axis[i - 1])) {
            throw DomainError(std::string("smooth_surface: ") + name + " must be strictly ascending");
        }
    }
}

double parse_double(std::string_view s, std::size_t line) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw ParseError("not a number: '" + std::string(s) + "'", line);
    }
    return v;
}

}  // namespace

double empirical_quantile(std::span<const double> values, double q) {
    if (values.empty()) throw InsufficientDataError("empirical_quantile: no values");
    if (!(q >= 0.0 && q <= 1.0)) throw DomainError("empirical_quantile: q must lie in [0, 1]");
    std::vector<double> v(values.begin(), values.end());
    const auto k = static_cast<std::size_t>(std::floor(q * static_cast<double>(v.size() - 1)));
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end());
    return v[k];
}

std::vector<double> winsorize(std::span<const double> values, double q) {
    if (values.empty()) throw InsufficientDataError("winsorize: no values");
    if (!(q > 0.0 && q < 1.0)) throw DomainError("winsorize: q must lie in (0, 1)");
    const double cap = empirical_quantile(values, q);
    std::vector<double> out(values.begin(), values.end());
    for (double& x : out) x = std::min(x, cap);
    return out;
}

Bandwidth default_bandwidth(std::span<const SurfacePoint> points) {
    if (points.empty()) throw InsufficientDataError("default_bandwidth: no points");
    const double rt = range_of(points, &SurfacePoint::t);
    const double rm = range_of(points, &SurfacePoint::m);
    return {rt > 0.0 ? 0.1 * rt : 1.0, rm > 0.0 ? 0.1 * rm : 1.0};
}

std::vector<double> linear_axis(double lo, double hi, int n) {
    if (n < 1) throw DomainError("linear_axis: need at least one point");
    if (n == 1) return {lo};
    std::vector<double> axis(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) axis[i] = lo + (hi - lo) * i / (n - 1);
    axis.back() = hi;
    return axis;
}

bool SurfaceGrid::operator==(const SurfaceGrid& o) const {
    return t_axis == o.t_axis && m_axis == o.m_axis && values.rows() == o.values.rows() &&
           values.cols() == o.values.cols() && values == o.values &&
           (missing == o.missing).all() && bandwidth.t == o.bandwidth.t &&
           bandwidth.m == o.bandwidth.m;
}

SurfaceGrid smooth_surface(std::span<const SurfacePoint> points, std::vector<double> t_axis,
                           std::vector<double> m_axis, Bandwidth bw, unsigned workers) {
    if (points.empty()) throw InsufficientDataError("smooth_surface: no data points");
    if (!(bw.t > 0.0) || !(bw.m > 0.0)) throw DomainError("smooth_surface: bandwidths must be positive");
    check_axis(t_axis, "t_axis");
    check_axis(m_axis, "m_axis");

    SurfaceGrid g;
    g.t_axis = std::move(t_axis);
    g.m_axis = std::move(m_axis);
    g.bandwidth = bw;
    const auto nt = static_cast<Eigen::Index>(g.t_axis.size());
    const auto nm = static_cast<Eigen::Index>(g.m_axis.size());
    g.values = Eigen::MatrixXd::Zero(nt, nm);
    g.missing.setConstant(nt, nm, false);

    parallel_for(static_cast<std::size_t>(nt), workers, [&](std::size_t row) {
        const auto i = static_cast<Eigen::Index>(row);
        for (Eigen::Index j = 0; j < nm; ++j) {
            double wsum = 0.0;
            double vsum = 0.0;
            for (const auto& p : points) {
                const double zt = (p.t - g.t_axis[row]) / bw.t;
                const double zm = (p.m - g.m_axis[j]) / bw.m;
                const double w = std::exp(-0.5 * (zt * zt + zm * zm));
                wsum += w;
                vsum += w * p.value;
            }
            if (wsum < kMinWeight) {
                g.missing(i, j) = true;
            } else {
                g.values(i, j) = vsum / wsum;
            }
        }
    });
    return g;
}

SurfaceGrid smooth_surface(std::span<const SurfacePoint> points, int n_t, int n_m, Bandwidth bw,
                           unsigned workers) {
    if (points.empty()) throw InsufficientDataError("smooth_surface: no data points");
    const auto [t_lo, t_hi] = std::minmax_element(points.begin(), points.end(),
                                                  [](const auto& a, const auto& b) { return a.t < b.t; });
    const auto [m_lo, m_hi] = std::minmax_element(points.begin(), points.end(),
                                                  [](const auto& a, const auto& b) { return a.m < b.m; });
    const int nt = t_lo->t == t_hi->t ? 1 : n_t;
    const int nm = m_lo->m == m_hi->m ? 1 : n_m;
    return smooth_surface(points, linear_axis(t_lo->t, t_hi->t, nt), linear_axis(m_lo->m, m_hi->m, nm),
                          bw, workers);
}

std::filesystem::path sidecar_path(const std::filesystem::path& csv_path) {
    auto p = csv_path;
    p.replace_extension(".json");
    if (p == csv_path) p += ".sidecar.json";
    return p;
}

void export_grid(const SurfaceGrid& g, const std::filesystem::path& csv_path) {
    std::ofstream csv(csv_path);
    if (!csv) throw IoError("cannot open " + csv_path.string() + " for writing");
    char buf[96];
    csv << "T,M,value\n";
    for (std::size_t i = 0; i < g.t_axis.size(); ++i) {
        for (std::size_t j = 0; j < g.m_axis.size(); ++j) {
            const auto r = static_cast<Eigen::Index>(i);
            const auto c = static_cast<Eigen::Index>(j);
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,", g.t_axis[i], g.m_axis[j]);
            csv << buf;
            if (!g.missing(r, c)) {
                std::snprintf(buf, sizeof buf, "%.17g", g.values(r, c));
                csv << buf;
            }
            csv << '\n';
        }
    }
    if (!csv) throw IoError("write failed: " + csv_path.string());

    nlohmann::json side;
    side["t_axis"] = g.t_axis;
    side["m_axis"] = g.m_axis;
    side["bandwidth_t"] = g.bandwidth.t;
    side["bandwidth_m"] = g.bandwidth.m;
    auto& mask = side["missing"] = nlohmann::json::array();
    for (Eigen::Index i = 0; i < g.missing.rows(); ++i) {
        auto row = nlohmann::json::array();
        for (Eigen::Index j = 0; j < g.missing.cols(); ++j) row.push_back(static_cast<bool>(g.missing(i, j)));
        mask.push_back(std::move(row));
    }
    const auto side_path = sidecar_path(csv_path);
    std::ofstream js(side_path);
    if (!js) throw IoError("cannot open " + side_path.string() + " for writing");
    js << side.dump(2) << '\n';
    if (!js) throw IoError("write failed: " + side_path.string());
}

SurfaceGrid import_grid(const std::filesystem::path& csv_path) {
    const auto side_path = sidecar_path(csv_path);
    std::ifstream js(side_path);
    if (!js) throw IoError("cannot open " + side_path.string());
    nlohmann::json side;
    try {
        side = nlohmann::json::parse(js);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(side_path.string() + ": " + e.what());
    }

    SurfaceGrid g;
    try {
        g.t_axis = side.at("t_axis").get<std::vector<double>>();
        g.m_axis = side.at("m_axis").get<std::vector<double>>();
        g.bandwidth = {side.at("bandwidth_t").get<double>(), side.at("bandwidth_m").get<double>()};
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(side_path.string() + ": " + e.what());
    }
    const auto nt = static_cast<Eigen::Index>(g.t_axis.size());
    const auto nm = static_cast<Eigen::Index>(g.m_axis.size());
    g.values = Eigen::MatrixXd::Zero(nt, nm);
    g.missing.setConstant(nt, nm, false);

    std::ifstream csv(csv_path);
    if (!csv) throw IoError("cannot open " + csv_path.string());
    std::string line;
    std::getline(csv, line);
    if (line != "T,M,value") throw ParseError(csv_path.string() + ": expected header T,M,value", 1);
    Eigen::Index cell = 0;
    std::size_t line_no = 1;
    while (std::getline(csv, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (cell >= nt * nm) throw ParseError(csv_path.string() + ": more rows than grid cells", line_no);
        const auto c1 = line.find(',');
        const auto c2 = line.find(',', c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos) {
            throw ParseError(csv_path.string() + ": expected 3 fields", line_no);
        }
        const Eigen::Index i = cell / nm;
        const Eigen::Index j = cell % nm;
        const std::string_view view(line);
        if (parse_double(view.substr(0, c1), line_no) != g.t_axis[i] ||
            parse_double(view.substr(c1 + 1, c2 - c1 - 1), line_no) != g.m_axis[j]) {
            throw ParseError(csv_path.string() + ": cell coordinates disagree with sidecar axes", line_no);
        }
        const auto value = view.substr(c2 + 1);
        if (value.empty()) {
            g.missing(i, j) = true;
        } else {
            g.values(i, j) = parse_double(value, line_no);
        }
        ++cell;
    }
    if (cell != nt * nm) throw ParseError(csv_path.string() + ": fewer rows than grid cells");
    return g;
}

}  // namespace mmn

#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <span>
#include <vector>

namespace mmn {

/// Lower-interpolation empirical quantile: sorted[floor(q (n - 1))].
/// Throws InsufficientDataError on empty input, DomainError for q outside [0, 1].
double empirical_quantile(std::span<const double> values, double q);

/// Clips values above the q-quantile down to it. The lower tail is left
/// alone and the order is kept. Requires 0 < q < 1.
std::vector<double> winsorize(std::span<const double> values, double q);

struct SurfacePoint {
    double t = 0.0;  ///< expiry, days
    double m = 0.0;  ///< moneyness
    double value = 0.0;
};

struct Bandwidth {
    double t = 1.0;
    double m = 1.0;
};

/// 0.1 times the data range on each axis; an axis with zero range gets 1.
Bandwidth default_bandwidth(std::span<const SurfacePoint> points);

/// Evenly spaced axis from lo to hi inclusive (a single point when n == 1).
std::vector<double> linear_axis(double lo, double hi, int n);

struct SurfaceGrid {
    std::vector<double> t_axis;
    std::vector<double> m_axis;
    Eigen::MatrixXd values;  ///< rows follow t_axis, columns m_axis; 0 where missing
    Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> missing;
    Bandwidth bandwidth;

    bool operator==(const SurfaceGrid& other) const;
};

/// Nadaraya-Watson estimate with a product Gaussian kernel. Cells whose total
/// weight falls below 1e-12 are flagged missing. Throws InsufficientDataError
/// for no points and DomainError for non-positive bandwidths or unsorted axes.
SurfaceGrid smooth_surface(std::span<const SurfacePoint> points, std::vector<double> t_axis,
                           std::vector<double> m_axis, Bandwidth bandwidth, unsigned workers = 1);

/// Same, on an n_t by n_m grid spanning the data.
SurfaceGrid smooth_surface(std::span<const SurfacePoint> points, int n_t, int n_m,
                           Bandwidth bandwidth, unsigned workers = 1);

/// Path of the JSON sidecar that accompanies a grid CSV.
std::filesystem::path sidecar_path(const std::filesystem::path& csv_path);

/// Writes `T,M,value` rows (t-major) to `csv_path` and the axes, bandwidth
/// and missing mask to the sidecar. Missing cells have an empty value.
void export_grid(const SurfaceGrid& grid, const std::filesystem::path& csv_path);
SurfaceGrid import_grid(const std::filesystem::path& csv_path);

}  // namespace mmn

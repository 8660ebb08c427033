#include "mmnoise/optimize.hpp"

#include "mmnoise/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace mmn::opt {

namespace {

double finite_or_inf(double v) {
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
}

}  // namespace

RootResult brent_root(const ScalarFn& f, double lo, double hi, double x_tol, int max_iterations) {
    double a = lo;
    double b = hi;
    double fa = f(a);
    double fb = f(b);
    RootResult res;
    if (fa == 0.0) return {a, fa, 0, true};
    if (fb == 0.0) return {b, fb, 0, true};
    if ((fa > 0.0) == (fb > 0.0)) throw DomainError("brent_root: bracket does not straddle a root");

    double c = a;
    double fc = fa;
    double d = b - a;
    double e = d;
    constexpr double eps = std::numeric_limits<double>::epsilon();
    for (int it = 1; it <= max_iterations; ++it) {
        if ((fb > 0.0) == (fc > 0.0)) {
            c = a;
            fc = fa;
            d = e = b - a;
        }
        if (std::abs(fc) < std::abs(fb)) {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        const double tol = 2.0 * eps * std::abs(b) + 0.5 * x_tol;
        const double m = 0.5 * (c - b);
        if (std::abs(m) <= tol || fb == 0.0) return {b, fb, it, true};

        if (std::abs(e) >= tol && std::abs(fa) > std::abs(fb)) {
            // inverse quadratic interpolation, or secant when only two points
            double p;
            double q;
            const double s = fb / fa;
            if (a == c) {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                const double qq = fa / fc;
                const double r = fb / fc;
                p = s * (2.0 * m * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if (p > 0.0) q = -q;
            p = std::abs(p);
            if (2.0 * p < std::min(3.0 * m * q - std::abs(tol * q), std::abs(e * q))) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += std::abs(d) > tol ? d : (m > 0.0 ? tol : -tol);
        fb = f(b);
    }
    res = {b, fb, max_iterations, false};
    return res;
}

MinimizeResult nelder_mead(const ObjectiveFn& f, const Eigen::VectorXd& x0,
                           const Eigen::VectorXd& steps, const SimplexOptions& options) {
    const Eigen::Index n = x0.size();
    std::vector<Eigen::VectorXd> pts(n + 1, x0);
    std::vector<double> vals(n + 1);
    for (Eigen::Index i = 0; i < n; ++i) pts[i + 1](i) += steps(i);

    int evals = 0;
    auto eval = [&](const Eigen::VectorXd& x) {
        ++evals;
        return finite_or_inf(f(x));
    };
    for (Eigen::Index i = 0; i <= n; ++i) vals[i] = eval(pts[i]);

    std::vector<Eigen::Index> order(n + 1);
    MinimizeResult res;
    int iter = 0;
    for (;;) {
        std::iota(order.begin(), order.end(), Eigen::Index{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](Eigen::Index a, Eigen::Index b) { return vals[a] < vals[b]; });
        const auto best = order.front();
        const auto worst = order.back();
        const auto second_worst = order[n - 1];

        double diameter = 0.0;
        double spread = 0.0;
        for (Eigen::Index i = 0; i <= n; ++i) {
            diameter = std::max(diameter, (pts[i] - pts[best]).cwiseAbs().maxCoeff());
            spread = std::max(spread, std::abs(vals[i] - vals[best]));
        }
        if (vals[best] <= options.f_target ||
            (diameter <= options.x_tol && spread <= options.f_tol)) {
            res.converged = true;
            break;
        }
        if (evals >= options.max_evaluations) break;
        ++iter;

        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
        for (Eigen::Index i = 0; i <= n; ++i) {
            if (i != worst) centroid += pts[i];
        }
        centroid /= static_cast<double>(n);

        const Eigen::VectorXd reflected = centroid + (centroid - pts[worst]);
        const double f_reflected = eval(reflected);
        if (f_reflected < vals[best]) {
            const Eigen::VectorXd expanded = centroid + 2.0 * (centroid - pts[worst]);
            const double f_expanded = eval(expanded);
            if (f_expanded < f_reflected) {
                pts[worst] = expanded;
                vals[worst] = f_expanded;
            } else {
                pts[worst] = reflected;
                vals[worst] = f_reflected;
            }
            continue;
        }
        if (f_reflected < vals[second_worst]) {
            pts[worst] = reflected;
            vals[worst] = f_reflected;
            continue;
        }
        const bool outside = f_reflected < vals[worst];
        const Eigen::VectorXd contracted = outside ? Eigen::VectorXd(centroid + 0.5 * (reflected - centroid))
                                                   : Eigen::VectorXd(centroid + 0.5 * (pts[worst] - centroid));
        const double f_contracted = eval(contracted);
        if (f_contracted < (outside ? f_reflected : vals[worst])) {
            pts[worst] = contracted;
            vals[worst] = f_contracted;
            continue;
        }
        for (Eigen::Index i = 0; i <= n; ++i) {
            if (i == best) continue;
            pts[i] = pts[best] + 0.5 * (pts[i] - pts[best]);
            vals[i] = eval(pts[i]);
        }
    }
    const auto best = *std::min_element(order.begin(), order.end(), [&](auto a, auto b) {
        return vals[a] < vals[b];
    });
    res.x = pts[best];
    res.fx = vals[best];
    res.iterations = iter;
    res.evaluations = evals;
    return res;
}

Eigen::VectorXd numerical_gradient(const ObjectiveFn& f, const Eigen::VectorXd& x, double h) {
    Eigen::VectorXd g(x.size());
    Eigen::VectorXd xp = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        xp(i) = x(i) + h;
        const double fp = f(xp);
        xp(i) = x(i) - h;
        const double fm = f(xp);
        xp(i) = x(i);
        g(i) = (fp - fm) / (2.0 * h);
    }
    return g;
}

Eigen::MatrixXd numerical_hessian(const ObjectiveFn& f, const Eigen::VectorXd& x,
                                  const Eigen::VectorXd& steps) {
    const Eigen::Index n = x.size();
    Eigen::MatrixXd hess(n, n);
    const double f0 = f(x);
    Eigen::VectorXd xp = x;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double hi = steps(i);
        xp(i) = x(i) + hi;
        const double fp = f(xp);
        xp(i) = x(i) - hi;
        const double fm = f(xp);
        xp(i) = x(i);
        hess(i, i) = (fp - 2.0 * f0 + fm) / (hi * hi);
        for (Eigen::Index j = 0; j < i; ++j) {
            const double hj = steps(j);
            auto at = [&](double si, double sj) {
                xp(i) = x(i) + si * hi;
                xp(j) = x(j) + sj * hj;
                const double v = f(xp);
                xp(i) = x(i);
                xp(j) = x(j);
                return v;
            };
            const double v = (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4.0 * hi * hj);
            hess(i, j) = hess(j, i) = v;
        }
    }
    return hess;
}

MinimizeResult bfgs_minimize(const ObjectiveFn& f, const Eigen::VectorXd& x0,
                             const BfgsOptions& options) {
    const Eigen::Index n = x0.size();
    int evals = 0;
    auto fx_of = [&](const Eigen::VectorXd& x) {
        ++evals;
        return finite_or_inf(f(x));
    };
    auto grad_of = [&](const Eigen::VectorXd& x) {
        evals += 2 * static_cast<int>(n);
        return numerical_gradient(f, x, options.fd_step);
    };

    MinimizeResult res;
    Eigen::VectorXd x = x0;
    double fx = fx_of(x);
    if (!std::isfinite(fx)) {
        res.x = x;
        res.fx = fx;
        res.evaluations = evals;
        return res;
    }
    Eigen::VectorXd g = grad_of(x);
    Eigen::MatrixXd inv_h = Eigen::MatrixXd::Identity(n, n);
    bool just_reset = true;

    int it = 0;
    for (; it < options.max_iterations; ++it) {
        if (g.allFinite() && g.cwiseAbs().maxCoeff() <= options.gradient_tol) {
            res.converged = true;
            break;
        }
        Eigen::VectorXd dir = -inv_h * g;
        double slope = g.dot(dir);
        if (!(slope < 0.0)) {
            inv_h.setIdentity();
            dir = -g;
            slope = -g.squaredNorm();
            just_reset = true;
        }

        // keep the first trial step bounded in the unconstrained coordinates
        double step = std::min(1.0, 1.0 / std::max(1e-12, dir.cwiseAbs().maxCoeff()));
        double f_new = 0.0;
        Eigen::VectorXd x_new;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            x_new = x + step * dir;
            f_new = fx_of(x_new);
            if (f_new <= fx + 1e-4 * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            if (just_reset) break;
            inv_h.setIdentity();
            just_reset = true;
            continue;
        }
        const Eigen::VectorXd g_new = grad_of(x_new);
        const Eigen::VectorXd s = x_new - x;
        const Eigen::VectorXd y = g_new - g;
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm() && y.allFinite()) {
            if (just_reset) inv_h *= sy / y.squaredNorm();
            const double rho = 1.0 / sy;
            const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
            inv_h = (id - rho * s * y.transpose()) * inv_h * (id - rho * y * s.transpose()) +
                    rho * s * s.transpose();
            just_reset = false;
        }
        x = x_new;
        fx = f_new;
        g = g_new;
    }
    res.x = x;
    res.fx = fx;
    res.iterations = it;
    res.evaluations = evals;
    return res;
}

}  // namespace mmn::opt

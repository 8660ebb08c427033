#pragma once

#include <Eigen/Dense>

#include <functional>

namespace mmn::opt {

using ScalarFn = std::function<double(double)>;
using ObjectiveFn = std::function<double(const Eigen::VectorXd&)>;

struct RootResult {
    double x = 0.0;
    double fx = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Brent's method on a sign-changing bracket [lo, hi]. Throws DomainError if
/// f(lo) and f(hi) have the same strict sign.
RootResult brent_root(const ScalarFn& f, double lo, double hi, double x_tol = 1e-15,
                      int max_iterations = 300);

struct MinimizeResult {
    Eigen::VectorXd x;
    double fx = 0.0;
    int iterations = 0;
    int evaluations = 0;
    bool converged = false;
};

struct SimplexOptions {
    int max_evaluations = 2000;
    double f_target = 0.0;  ///< stop as soon as the best vertex is at or below this
    double x_tol = 1e-10;   ///< simplex diameter, in the caller's coordinates
    double f_tol = 1e-30;   ///< spread of vertex values
};

/// Nelder-Mead from the simplex {x0, x0 + steps[i] e_i}. Deterministic.
/// `converged` is true when a stopping rule other than the evaluation budget
/// fired.
MinimizeResult nelder_mead(const ObjectiveFn& f, const Eigen::VectorXd& x0,
                           const Eigen::VectorXd& steps, const SimplexOptions& options = {});

struct BfgsOptions {
    int max_iterations = 2000;
    double gradient_tol = 1e-6;  ///< infinity norm
    double fd_step = 1e-5;
};

/// Quasi-Newton (BFGS inverse update, backtracking Armijo search) with
/// central-difference gradients. Non-finite objective values are treated as
/// +infinity, so the search backs away from infeasible regions.
MinimizeResult bfgs_minimize(const ObjectiveFn& f, const Eigen::VectorXd& x0,
                             const BfgsOptions& options = {});

Eigen::VectorXd numerical_gradient(const ObjectiveFn& f, const Eigen::VectorXd& x, double h);

/// Central-difference Hessian with per-coordinate steps.
Eigen::MatrixXd numerical_hessian(const ObjectiveFn& f, const Eigen::VectorXd& x,
                                  const Eigen::VectorXd& steps);

}  // namespace mmn::opt

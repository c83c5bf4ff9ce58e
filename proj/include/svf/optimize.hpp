#pragma once

#include <functional>

#include <Eigen/Dense>

namespace svf::optim {

// Objectives may return +inf to reject a point.
using Objective = std::function<double(const Eigen::VectorXd&)>;

struct Result {
    Eigen::VectorXd x;
    double value = 0.0;
    int iterations = 0;
    int evaluations = 0;
    bool converged = false;
};

struct NelderMeadOptions {
    int max_iterations = 5000;
    double ftol = 1e-10;       // spread of simplex values
    double xtol = 1e-8;        // simplex diameter
    double initial_step = 0.1;
    int restarts = 1;          // re-seed the simplex at the incumbent after convergence
};

Result nelder_mead(const Objective& f, const Eigen::VectorXd& x0, const NelderMeadOptions& opts = {});

struct BfgsOptions {
    int max_iterations = 200;
    double gtol = 1e-6;            // infinity norm of the gradient
    double fd_step = 1e-5;         // central-difference step (relative)
};

/// Quasi-Newton minimization with central-difference gradients and a
/// backtracking Armijo line search.
Result bfgs(const Objective& f, const Eigen::VectorXd& x0, const BfgsOptions& opts = {});

Eigen::VectorXd numeric_gradient(const Objective& f, const Eigen::VectorXd& x, double rel_step,
                                 int* evaluations = nullptr);

Eigen::MatrixXd numeric_hessian(const Objective& f, const Eigen::VectorXd& x, double rel_step = 1e-4);

}  // namespace svf::optim

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace proxiphene {

struct LassoOptions {
    double tolerance = 1e-8;  // stop when no coefficient moves more than this in a sweep
    int max_sweeps = 100000;
};

struct LassoFit {
    double intercept = 0.0;
    Eigen::VectorXd beta;
    int sweeps = 0;
    bool converged = false;
    std::vector<double> objective_trace;  // objective after each sweep
};

/// (1/2n) ||y - b0 - Z b||^2 + lambda ||b||_1
double lasso_objective(const Eigen::MatrixXd& z, const Eigen::VectorXd& y, double intercept,
                       const Eigen::VectorXd& beta, double lambda);

/// Smallest lambda for which every coefficient is zero: max_j |z_j'(y - ybar)| / n.
double lasso_lambda_max(const Eigen::MatrixXd& z, const Eigen::VectorXd& y);

/// Cyclic coordinate descent with an unpenalized intercept.
LassoFit fit_lasso(const Eigen::MatrixXd& z, const Eigen::VectorXd& y, double lambda, const LassoOptions& options = {},
                   const LassoFit* warm_start = nullptr);

struct LassoSelection {
    double lambda = 0.0;
    std::vector<double> grid;    // descending
    std::vector<double> cv_mse;  // per grid value
};

/// Picks lambda from a log grid (lambda_max down to ratio * lambda_max) by K-fold CV in which
/// whole participants are held out together. Folds cycle over sorted participant labels.
LassoSelection select_lasso_lambda(const Eigen::MatrixXd& z, const Eigen::VectorXd& y,
                                   std::span<const std::string> groups, int folds = 5, int grid_size = 50,
                                   double ratio = 1e-3, const LassoOptions& options = {});

}  // namespace proxiphene

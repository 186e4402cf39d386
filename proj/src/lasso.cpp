#include "proxiphene/lasso.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace proxiphene {

namespace {

double soft_threshold(double value, double lambda) {
    if (value > lambda) return value - lambda;
    if (value < -lambda) return value + lambda;
    return 0.0;
}

}  // namespace

double lasso_objective(const Eigen::MatrixXd& z, const Eigen::VectorXd& y, double intercept,
                       const Eigen::VectorXd& beta, double lambda) {
    const Eigen::VectorXd r = y - z * beta - Eigen::VectorXd::Constant(y.size(), intercept);
    return 0.5 * r.squaredNorm() / static_cast<double>(y.size()) + lambda * beta.lpNorm<1>();
}

double lasso_lambda_max(const Eigen::MatrixXd& z, const Eigen::VectorXd& y) {
    if (y.size() == 0) return 0.0;
    const Eigen::VectorXd centered = y.array() - y.mean();
    const Eigen::VectorXd g = z.transpose() * centered / static_cast<double>(y.size());
    return z.cols() > 0 ? g.cwiseAbs().maxCoeff() : 0.0;
}

LassoFit fit_lasso(const Eigen::MatrixXd& z, const Eigen::VectorXd& y, double lambda, const LassoOptions& options,
                   const LassoFit* warm_start) {
    if (z.rows() != y.size() || y.size() == 0) throw std::invalid_argument("fit_lasso: shape mismatch");
    if (lambda < 0.0) throw std::invalid_argument("fit_lasso: lambda must be non-negative");
    const auto n = static_cast<double>(y.size());
    const auto p = z.cols();

    LassoFit fit;
    fit.beta = Eigen::VectorXd::Zero(p);
    fit.intercept = y.mean();
    if (warm_start && warm_start->beta.size() == p) {
        fit.beta = warm_start->beta;
        fit.intercept = warm_start->intercept;
    }
    const Eigen::VectorXd col_sq = z.colwise().squaredNorm().transpose() / n;
    Eigen::VectorXd residual = y - z * fit.beta - Eigen::VectorXd::Constant(y.size(), fit.intercept);

    for (fit.sweeps = 1; fit.sweeps <= options.max_sweeps; ++fit.sweeps) {
        double max_change = 0.0;
        const double shift = residual.mean();
        fit.intercept += shift;
        residual.array() -= shift;
        max_change = std::abs(shift);
        for (Eigen::Index j = 0; j < p; ++j) {
            if (!(col_sq(j) > 0.0)) {
                fit.beta(j) = 0.0;
                continue;
            }
            const double old = fit.beta(j);
            const double rho = z.col(j).dot(residual) / n + col_sq(j) * old;
            const double updated = soft_threshold(rho, lambda) / col_sq(j);
            if (updated != old) {
                residual -= (updated - old) * z.col(j);
                fit.beta(j) = updated;
                max_change = std::max(max_change, std::abs(updated - old));
            }
        }
        fit.objective_trace.push_back(0.5 * residual.squaredNorm() / n + lambda * fit.beta.lpNorm<1>());
        if (max_change < options.tolerance) {
            fit.converged = true;
            break;
        }
    }
    fit.sweeps = std::min(fit.sweeps, options.max_sweeps);
    return fit;
}

LassoSelection select_lasso_lambda(const Eigen::MatrixXd& z, const Eigen::VectorXd& y,
                                   std::span<const std::string> groups, int folds, int grid_size, double ratio,
                                   const LassoOptions& options) {
    if (groups.size() != static_cast<std::size_t>(y.size())) {
        throw std::invalid_argument("select_lasso_lambda: one group per row required");
    }
    if (grid_size < 1 || folds < 2) throw std::invalid_argument("select_lasso_lambda: invalid grid or folds");
    LassoSelection sel;
    const double top = lasso_lambda_max(z, y);
    for (int k = 0; k < grid_size; ++k) {
        const double frac = grid_size > 1 ? static_cast<double>(k) / (grid_size - 1) : 0.0;
        sel.grid.push_back(top > 0.0 ? top * std::pow(ratio, frac) : 0.0);
    }
    sel.cv_mse.assign(sel.grid.size(), 0.0);

    std::map<std::string, int> fold_of;
    for (const auto& g : groups) fold_of.emplace(g, 0);
    int next = 0;
    for (auto& [label, fold] : fold_of) fold = next++ % folds;
    const int used_folds = std::min<int>(folds, static_cast<int>(fold_of.size()));
    if (used_folds < 2) {
        sel.lambda = sel.grid.back();
        return sel;
    }

    std::size_t scored = 0;
    for (int f = 0; f < used_folds; ++f) {
        std::vector<Eigen::Index> train, test;
        for (Eigen::Index i = 0; i < y.size(); ++i) (fold_of[groups[i]] == f ? test : train).push_back(i);
        if (train.empty() || test.empty()) continue;
        const Eigen::MatrixXd ztr = z(train, Eigen::all);
        const Eigen::VectorXd ytr = y(train);
        const Eigen::MatrixXd zte = z(test, Eigen::all);
        const Eigen::VectorXd yte = y(test);
        LassoFit previous;
        bool have_previous = false;
        for (std::size_t k = 0; k < sel.grid.size(); ++k) {
            const auto fit = fit_lasso(ztr, ytr, sel.grid[k], options, have_previous ? &previous : nullptr);
            const Eigen::VectorXd pred = (zte * fit.beta).array() + fit.intercept;
            sel.cv_mse[k] += (pred - yte).squaredNorm();
            previous = fit;
            have_previous = true;
        }
        scored += test.size();
    }
    std::size_t best = 0;
    for (std::size_t k = 0; k < sel.grid.size(); ++k) {
        sel.cv_mse[k] /= static_cast<double>(std::max<std::size_t>(scored, 1));
        if (sel.cv_mse[k] < sel.cv_mse[best]) best = k;
    }
    sel.lambda = sel.grid[best];
    return sel;
}

}  // namespace proxiphene

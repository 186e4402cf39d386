#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace proxiphene {

/// Maximum-likelihood fit of y_ij = x_ij' beta + b_j + e_ij with b_j ~ N(0, tau2)
/// and e_ij ~ N(0, sigma2).
struct LmmFit {
    std::vector<std::string> names;    // fixed effects actually estimated
    std::vector<std::string> dropped;  // collinear columns removed before fitting
    Eigen::VectorXd beta;
    Eigen::VectorXd se;
    Eigen::MatrixXd covariance;
    double tau2 = 0.0;
    double sigma2 = 0.0;
    double loglik = 0.0;
    bool tau2_at_boundary = false;
    std::size_t n_obs = 0;
    std::size_t n_groups = 0;
    std::uint64_t response_fingerprint = 0;

    [[nodiscard]] std::size_t n_params() const { return names.size() + 2; }
    [[nodiscard]] std::size_t index_of(std::string_view name) const;
    [[nodiscard]] double estimate(std::string_view name) const { return beta(index_of(name)); }
    [[nodiscard]] double std_error(std::string_view name) const { return se(index_of(name)); }
};

struct LmmOptions {
    /// Drop columns that are linearly dependent on earlier ones instead of failing.
    bool drop_collinear = false;
    double collinearity_tolerance = 1e-9;
};

/// Profiled log-likelihood machinery for one dataset; exposed for diagnostics and tests.
class LmmProblem {
public:
    LmmProblem(const Eigen::VectorXd& y, const Eigen::MatrixXd& x, std::span<const std::string> groups);

    struct Profile {
        double lambda = 0.0;  // tau2 / sigma2
        Eigen::VectorXd beta;
        Eigen::MatrixXd normal_matrix;  // X' V^-1 X with V scaled by sigma2
        double sigma2 = 0.0;
        double loglik = 0.0;
        double dloglik = 0.0;  // derivative with respect to lambda
    };

    [[nodiscard]] Profile evaluate(double lambda) const;
    [[nodiscard]] std::size_t n_obs() const { return n_; }
    [[nodiscard]] std::size_t n_groups() const { return sizes_.size(); }
    [[nodiscard]] std::size_t n_fixed() const { return static_cast<std::size_t>(xtx_.rows()); }

private:
    std::size_t n_ = 0;
    Eigen::MatrixXd xtx_;
    Eigen::VectorXd xty_;
    double yty_ = 0.0;
    Eigen::MatrixXd group_x_sums_;  // p x J
    Eigen::VectorXd group_y_sums_;
    Eigen::VectorXd sizes_;
};

/// Indices of columns kept by greedy in-order linear-independence screening.
std::vector<std::size_t> independent_columns(const Eigen::MatrixXd& x, double tolerance);

/// Throws std::invalid_argument on shape errors, fewer than two groups, or (unless
/// options.drop_collinear) a rank-deficient design.
LmmFit fit_lmm(const Eigen::VectorXd& y, const Eigen::MatrixXd& x, std::span<const std::string> names,
               std::span<const std::string> groups, const LmmOptions& options = {});

struct LrtResult {
    double chi2 = 0.0;
    int df = 0;
    double p_value = 1.0;
};

/// chi2 = 2 (ll_large - ll_small) referred to chi-squared(df), df = difference in
/// estimated fixed effects. Throws std::invalid_argument for non-nested fits.
LrtResult likelihood_ratio_test(const LmmFit& small, const LmmFit& large);

}  // namespace proxiphene

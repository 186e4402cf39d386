#include "proxiphene/lmm.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <stdexcept>

#include <boost/math/tools/toms748_solve.hpp>

#include "proxiphene/stats.hpp"

namespace proxiphene {

namespace {

constexpr double kLogLambdaMin = -12.0;
constexpr double kLogLambdaMax = 12.0;
constexpr double kLogLambdaStep = 0.25;

std::uint64_t fnv1a(const void* data, std::size_t len, std::uint64_t h = 0xcbf29ce484222325ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Order-independent fingerprint of the (group, response) pairs.
std::uint64_t fingerprint(const Eigen::VectorXd& y, std::span<const std::string> groups) {
    std::uint64_t acc = 0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        const double v = y(i);
        auto h = fnv1a(groups[i].data(), groups[i].size());
        h = fnv1a(&v, sizeof v, h);
        acc += h;
    }
    return acc;
}

}  // namespace

std::size_t LmmFit::index_of(std::string_view name) const {
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == name) return i;
    }
    throw std::out_of_range("LmmFit: no fixed effect '" + std::string(name) + "'");
}

LmmProblem::LmmProblem(const Eigen::VectorXd& y, const Eigen::MatrixXd& x, std::span<const std::string> groups) {
    if (x.rows() != y.size() || groups.size() != static_cast<std::size_t>(y.size())) {
        throw std::invalid_argument("fit_lmm: y, X and groups must have the same number of rows");
    }
    n_ = static_cast<std::size_t>(y.size());
    std::map<std::string_view, Eigen::Index> ids;
    for (const auto& g : groups) ids.emplace(g, 0);
    Eigen::Index next = 0;
    for (auto& [label, id] : ids) id = next++;

    const Eigen::Index p = x.cols();
    xtx_ = x.transpose() * x;
    xty_ = x.transpose() * y;
    yty_ = y.squaredNorm();
    group_x_sums_ = Eigen::MatrixXd::Zero(p, next);
    group_y_sums_ = Eigen::VectorXd::Zero(next);
    sizes_ = Eigen::VectorXd::Zero(next);
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        const auto j = ids.at(groups[i]);
        group_x_sums_.col(j) += x.row(i).transpose();
        group_y_sums_(j) += y(i);
        sizes_(j) += 1.0;
    }
}

LmmProblem::Profile LmmProblem::evaluate(double lambda) const {
    Profile out;
    out.lambda = lambda;
    const Eigen::VectorXd shrink = (lambda / (1.0 + sizes_.array() * lambda)).matrix();
    out.normal_matrix = xtx_ - group_x_sums_ * shrink.asDiagonal() * group_x_sums_.transpose();
    const Eigen::VectorXd rhs = xty_ - group_x_sums_ * shrink.cwiseProduct(group_y_sums_);
    const double q = yty_ - shrink.dot(group_y_sums_.cwiseProduct(group_y_sums_));

    Eigen::LDLT<Eigen::MatrixXd> ldlt(out.normal_matrix);
    out.beta = ldlt.solve(rhs);
    const double rwr = std::max(q - rhs.dot(out.beta), std::numeric_limits<double>::min());
    const double n = static_cast<double>(n_);
    out.sigma2 = rwr / n;
    const Eigen::ArrayXd one_plus = 1.0 + sizes_.array() * lambda;
    out.loglik = -0.5 * n * (std::log(2.0 * std::numbers::pi * out.sigma2) + 1.0) - 0.5 * one_plus.log().sum();

    const Eigen::ArrayXd resid_sums = (group_y_sums_ - group_x_sums_.transpose() * out.beta).array();
    out.dloglik = 0.5 * n * (resid_sums.square() / one_plus.square()).sum() / rwr - 0.5 * (sizes_.array() / one_plus).sum();
    return out;
}

std::vector<std::size_t> independent_columns(const Eigen::MatrixXd& x, double tolerance) {
    std::vector<std::size_t> kept;
    std::vector<Eigen::VectorXd> basis;
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
        const double norm = x.col(c).norm();
        if (!(norm > 0.0)) continue;
        Eigen::VectorXd v = x.col(c) / norm;
        for (int pass = 0; pass < 2; ++pass) {
            for (const auto& q : basis) v -= q.dot(v) * q;
        }
        const double residual = v.norm();
        if (residual > tolerance) {
            basis.push_back(v / residual);
            kept.push_back(static_cast<std::size_t>(c));
        }
    }
    return kept;
}

LmmFit fit_lmm(const Eigen::VectorXd& y, const Eigen::MatrixXd& x, std::span<const std::string> names,
               std::span<const std::string> groups, const LmmOptions& options) {
    if (names.size() != static_cast<std::size_t>(x.cols())) {
        throw std::invalid_argument("fit_lmm: one name per design column required");
    }
    if (x.rows() != y.size() || groups.size() != static_cast<std::size_t>(y.size())) {
        throw std::invalid_argument("fit_lmm: y, X and groups must have the same number of rows");
    }
    const auto kept = independent_columns(x, options.collinearity_tolerance);
    LmmFit fit;
    if (kept.size() != static_cast<std::size_t>(x.cols())) {
        if (!options.drop_collinear) throw std::invalid_argument("fit_lmm: design matrix is rank deficient");
        for (std::size_t c = 0, k = 0; c < names.size(); ++c) {
            if (k < kept.size() && kept[k] == c) {
                ++k;
            } else {
                fit.dropped.push_back(names[c]);
            }
        }
    }
    if (kept.empty()) throw std::invalid_argument("fit_lmm: no usable fixed effects");
    // Columns are fitted at unit norm and mapped back afterwards.
    Eigen::MatrixXd design(x.rows(), static_cast<Eigen::Index>(kept.size()));
    Eigen::VectorXd scale(static_cast<Eigen::Index>(kept.size()));
    for (std::size_t k = 0; k < kept.size(); ++k) {
        const auto col = x.col(static_cast<Eigen::Index>(kept[k]));
        scale(static_cast<Eigen::Index>(k)) = col.norm();
        design.col(static_cast<Eigen::Index>(k)) = col / col.norm();
        fit.names.push_back(names[kept[k]]);
    }
    if (static_cast<Eigen::Index>(kept.size()) >= y.size()) {
        throw std::invalid_argument("fit_lmm: more fixed effects than observations");
    }

    const LmmProblem problem(y, design, groups);
    if (problem.n_groups() < 2) throw std::invalid_argument("fit_lmm: at least two groups required");

    // Coarse scan over log(lambda), then a root of the profiled score in the best bracket.
    const auto zero = problem.evaluate(0.0);
    std::vector<LmmProblem::Profile> grid;
    for (double u = kLogLambdaMin; u <= kLogLambdaMax + 1e-12; u += kLogLambdaStep) {
        grid.push_back(problem.evaluate(std::exp(u)));
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (grid[i].loglik > grid[best].loglik) best = i;
    }
    LmmProblem::Profile optimum = grid[best];
    const double lo = best == 0 ? 0.0 : grid[best - 1].lambda;
    const double hi = best + 1 < grid.size() ? grid[best + 1].lambda : grid[best].lambda;
    const auto score = [&](double lambda) { return problem.evaluate(lambda).dloglik; };
    const double score_lo = best == 0 ? zero.dloglik : grid[best - 1].dloglik;
    const double score_hi = best + 1 < grid.size() ? grid[best + 1].dloglik : -1.0;
    if (score_lo > 0.0 && score_hi < 0.0 && hi > lo) {
        std::uintmax_t iterations = 200;
        const auto bracket = boost::math::tools::toms748_solve(score, lo, hi, score_lo, score_hi,
                                                               boost::math::tools::eps_tolerance<double>(52), iterations);
        const auto refined = problem.evaluate(0.5 * (bracket.first + bracket.second));
        if (refined.loglik >= optimum.loglik) optimum = refined;
    }
    if (zero.loglik >= optimum.loglik) optimum = zero;

    fit.tau2_at_boundary = optimum.lambda == 0.0;
    const Eigen::VectorXd inv_scale = scale.cwiseInverse();
    fit.beta = optimum.beta.cwiseProduct(inv_scale);
    fit.sigma2 = optimum.sigma2;
    fit.tau2 = optimum.lambda * optimum.sigma2;
    fit.loglik = optimum.loglik;
    fit.covariance = inv_scale.asDiagonal() *
                     (optimum.sigma2 * optimum.normal_matrix.ldlt().solve(
                                           Eigen::MatrixXd::Identity(design.cols(), design.cols()))) *
                     inv_scale.asDiagonal();
    fit.se = fit.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
    fit.n_obs = problem.n_obs();
    fit.n_groups = problem.n_groups();
    fit.response_fingerprint = fingerprint(y, groups);
    return fit;
}

LrtResult likelihood_ratio_test(const LmmFit& small, const LmmFit& large) {
    if (small.n_obs != large.n_obs || small.response_fingerprint != large.response_fingerprint) {
        throw std::invalid_argument("likelihood_ratio_test: fits use different data");
    }
    for (const auto& name : small.names) {
        if (std::find(large.names.begin(), large.names.end(), name) == large.names.end()) {
            throw std::invalid_argument("likelihood_ratio_test: '" + name + "' missing from the larger model");
        }
    }
    if (large.names.size() < small.names.size()) {
        throw std::invalid_argument("likelihood_ratio_test: models are not nested");
    }
    LrtResult out;
    out.df = static_cast<int>(large.names.size() - small.names.size());
    out.chi2 = std::max(0.0, 2.0 * (large.loglik - small.loglik));
    out.p_value = chi_squared_upper_tail(out.chi2, out.df);
    return out;
}

}  // namespace proxiphene

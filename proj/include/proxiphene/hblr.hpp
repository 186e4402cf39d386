#pragma once

#include "proxiphene/random.hpp"

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace proxiphene {

/// Conjugate priors of the random-intercept regression
///   y_ij = alpha_j + theta' z_ij + e_ij,  alpha_j ~ N(mu, tau2),  e_ij ~ N(0, sigma2).
struct HblrPriors {
    double theta_sd = 5.0;
    std::optional<double> mu_mean;  // defaults to the training-response mean
    double mu_sd = 10.0;
    double tau2_shape = 1.0;
    double tau2_scale = 1.0;
    double sigma2_shape = 1.0;
    double sigma2_scale = 1.0;
};

struct McmcConfig {
    int chains = 4;
    int iterations = 2000;  // per chain, including burn-in
    int burn_in = 1000;
    std::uint64_t seed = 0;
    double rhat_threshold = 1.05;
};

/// Training data with participants mapped to dense indices (sorted label order).
struct HblrData {
    Eigen::VectorXd y;
    Eigen::MatrixXd z;
    std::vector<std::size_t> group;
    std::vector<std::string> group_labels;

    static HblrData make(Eigen::VectorXd y, Eigen::MatrixXd z, std::span<const std::string> groups);
    [[nodiscard]] std::size_t n_groups() const { return group_labels.size(); }
};

struct GibbsState {
    Eigen::VectorXd alpha;
    double mu = 0.0;
    double tau2 = 1.0;
    Eigen::VectorXd theta;
    double sigma2 = 1.0;
};

/// Blocked Gibbs updates for the model above. theta is drawn with the intercepts integrated
/// out, then alpha | theta, so the pair moves jointly. Group sums and per-group-size outer
/// products are cached; a sweep costs O(J p + K p^2 + p^3) for K distinct group sizes.
class GibbsSampler {
public:
    GibbsSampler(const HblrData& data, const HblrPriors& priors);

    [[nodiscard]] const HblrPriors& priors() const { return priors_; }
    [[nodiscard]] double mu_prior_mean() const { return mu_mean_; }

    [[nodiscard]] GibbsState initial_state(Rng& rng) const;
    void step(GibbsState& state, Rng& rng) const;

    /// Replace the response (same rows and groups); used by joint-distribution tests.
    void set_response(const Eigen::VectorXd& y);
    [[nodiscard]] GibbsState draw_prior(Rng& rng) const;
    [[nodiscard]] Eigen::VectorXd simulate_response(const GibbsState& state, Rng& rng) const;

private:
    void refresh_response_sums();

    const HblrData* data_;
    HblrPriors priors_;
    double mu_mean_ = 0.0;
    Eigen::VectorXd y_;
    Eigen::MatrixXd group_z_sums_;  // p x J
    Eigen::VectorXd group_y_sums_;
    Eigen::VectorXd group_sizes_;
    Eigen::VectorXd zty_;
    double yty_ = 0.0;
    Eigen::MatrixXd ztz_;
    std::vector<double> size_values_;        // distinct group sizes
    std::vector<Eigen::MatrixXd> size_outer_;  // sum of s_j s_j' over groups of that size
    std::vector<std::size_t> size_class_;    // per group
};

/// Post-burn-in draws stacked chain by chain.
struct PosteriorSamples {
    std::vector<std::string> group_labels;
    Eigen::MatrixXd alpha;  // draws x J
    Eigen::VectorXd mu;
    Eigen::VectorXd tau2;
    Eigen::MatrixXd theta;  // draws x p
    Eigen::VectorXd sigma2;
    std::vector<int> chain;
    std::vector<int> draw;
    int n_chains = 0;
    std::map<std::string, double> rhat;
    double max_rhat = 0.0;
    bool converged = false;

    [[nodiscard]] std::size_t n_draws() const { return static_cast<std::size_t>(mu.size()); }
    [[nodiscard]] std::optional<std::size_t> group_index(const std::string& label) const;
};

/// Throws std::invalid_argument with fewer than two participants. Non-convergence is
/// reported through `converged` / `max_rhat`, never thrown.
PosteriorSamples fit_hblr(const HblrData& data, const HblrPriors& priors = {}, const McmcConfig& config = {});

/// Split R-hat over equal-length chains (each chain halved).
double split_rhat(const std::vector<std::vector<double>>& chains);

struct PredictiveSummary {
    double mean = 0.0;
    double lower = 0.0;
    double upper = 0.0;
};

/// Posterior mean of alpha_j + theta' z per row with a central `level` credible interval.
/// Participants absent from training draw alpha from N(mu, tau2) once per posterior draw.
std::vector<PredictiveSummary> predict_hblr(const PosteriorSamples& posterior, const Eigen::MatrixXd& z,
                                            std::span<const std::string> groups, std::uint64_t seed,
                                            double level = 0.9);

}  // namespace proxiphene

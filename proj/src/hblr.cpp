#include "proxiphene/hblr.hpp"

#include "proxiphene/parallel.hpp"
#include "proxiphene/stats.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <thread>

namespace proxiphene {

namespace {

double draw_inverse_gamma(double shape, double scale, Rng& rng) {
    std::gamma_distribution<double> gamma(shape, 1.0 / scale);
    return 1.0 / gamma(rng);
}

Eigen::VectorXd standard_normals(Eigen::Index n, Rng& rng) {
    std::normal_distribution<double> normal;
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = normal(rng);
    return v;
}

}  // namespace

HblrData HblrData::make(Eigen::VectorXd y, Eigen::MatrixXd z, std::span<const std::string> groups) {
    if (z.rows() != y.size() || groups.size() != static_cast<std::size_t>(y.size())) {
        throw std::invalid_argument("HblrData: y, Z and groups must have the same number of rows");
    }
    HblrData data;
    const std::set<std::string> labels(groups.begin(), groups.end());
    data.group_labels.assign(labels.begin(), labels.end());
    data.group.reserve(groups.size());
    for (const auto& g : groups) {
        const auto it = std::lower_bound(data.group_labels.begin(), data.group_labels.end(), g);
        data.group.push_back(static_cast<std::size_t>(it - data.group_labels.begin()));
    }
    data.y = std::move(y);
    data.z = std::move(z);
    return data;
}

GibbsSampler::GibbsSampler(const HblrData& data, const HblrPriors& priors) : data_(&data), priors_(priors) {
    const auto p = data.z.cols();
    const auto j = static_cast<Eigen::Index>(data.n_groups());
    group_z_sums_ = Eigen::MatrixXd::Zero(p, j);
    group_sizes_ = Eigen::VectorXd::Zero(j);
    for (Eigen::Index i = 0; i < data.y.size(); ++i) {
        const auto g = static_cast<Eigen::Index>(data.group[i]);
        group_z_sums_.col(g) += data.z.row(i).transpose();
        group_sizes_(g) += 1.0;
    }
    ztz_ = data.z.transpose() * data.z;
    size_class_.resize(static_cast<std::size_t>(j));
    for (Eigen::Index g = 0; g < j; ++g) {
        auto it = std::find(size_values_.begin(), size_values_.end(), group_sizes_(g));
        if (it == size_values_.end()) {
            size_values_.push_back(group_sizes_(g));
            size_outer_.push_back(Eigen::MatrixXd::Zero(p, p));
            it = size_values_.end() - 1;
        }
        const auto k = static_cast<std::size_t>(it - size_values_.begin());
        size_class_[static_cast<std::size_t>(g)] = k;
        size_outer_[k].selfadjointView<Eigen::Lower>().rankUpdate(group_z_sums_.col(g));
    }
    for (auto& m : size_outer_) m = m.selfadjointView<Eigen::Lower>();
    mu_mean_ = priors.mu_mean.value_or(data.y.size() > 0 ? data.y.mean() : 0.0);
    y_ = data.y;
    refresh_response_sums();
}

void GibbsSampler::refresh_response_sums() {
    const auto j = static_cast<Eigen::Index>(data_->n_groups());
    group_y_sums_ = Eigen::VectorXd::Zero(j);
    for (Eigen::Index i = 0; i < y_.size(); ++i) group_y_sums_(static_cast<Eigen::Index>(data_->group[i])) += y_(i);
    zty_ = data_->z.transpose() * y_;
    yty_ = y_.squaredNorm();
}

void GibbsSampler::set_response(const Eigen::VectorXd& y) {
    if (y.size() != data_->y.size()) throw std::invalid_argument("set_response: size mismatch");
    y_ = y;
    refresh_response_sums();
}

GibbsState GibbsSampler::initial_state(Rng& rng) const {
    std::normal_distribution<double> jitter(0.0, 0.5);
    const double var = y_.size() > 1 ? (y_.array() - y_.mean()).square().sum() / (y_.size() - 1.0) : 1.0;
    GibbsState s;
    s.alpha.resize(group_sizes_.size());
    for (Eigen::Index g = 0; g < s.alpha.size(); ++g) {
        s.alpha(g) = group_y_sums_(g) / std::max(1.0, group_sizes_(g)) + jitter(rng);
    }
    s.mu = s.alpha.mean() + jitter(rng);
    s.tau2 = std::max(var * 0.5, 0.1) * std::exp(jitter(rng));
    s.theta = Eigen::VectorXd::Zero(data_->z.cols());
    for (Eigen::Index k = 0; k < s.theta.size(); ++k) s.theta(k) = jitter(rng);
    s.sigma2 = std::max(var * 0.5, 0.1) * std::exp(jitter(rng));
    return s;
}

void GibbsSampler::step(GibbsState& s, Rng& rng) const {
    std::normal_distribution<double> normal;
    const auto p = data_->z.cols();
    const auto j = static_cast<Eigen::Index>(data_->n_groups());
    const double n = static_cast<double>(y_.size());
    const double prior_prec = 1.0 / (priors_.theta_sd * priors_.theta_sd);

    // theta | mu, tau2, sigma2 with alpha integrated out. Within group j the marginal precision is
    // (I - c_j 11') / sigma2 with c_j = tau2 / (sigma2 + n_j tau2).
    if (p > 0) {
        Eigen::MatrixXd precision = ztz_;
        std::vector<double> c(size_values_.size());
        for (std::size_t k = 0; k < size_values_.size(); ++k) {
            c[k] = s.tau2 / (s.sigma2 + size_values_[k] * s.tau2);
            precision -= c[k] * size_outer_[k];
        }
        precision /= s.sigma2;
        precision.diagonal().array() += prior_prec;
        Eigen::VectorXd weights(j);
        for (Eigen::Index g = 0; g < j; ++g) {
            const double cg = c[size_class_[static_cast<std::size_t>(g)]];
            weights(g) = s.mu + cg * (group_y_sums_(g) - group_sizes_(g) * s.mu);
        }
        const Eigen::VectorXd b = (zty_ - group_z_sums_ * weights) / s.sigma2;
        const Eigen::LLT<Eigen::MatrixXd> llt(precision);
        if (llt.info() != Eigen::Success) throw std::runtime_error("Gibbs: theta precision is not positive definite");
        const Eigen::VectorXd m = llt.solve(b);
        s.theta = m + llt.matrixU().solve(standard_normals(p, rng));
    }

    // alpha_j | theta, mu, tau2, sigma2
    const Eigen::VectorXd fitted_sums = p > 0 ? Eigen::VectorXd(group_z_sums_.transpose() * s.theta)
                                              : Eigen::VectorXd::Zero(j);
    for (Eigen::Index g = 0; g < j; ++g) {
        const double prec = group_sizes_(g) / s.sigma2 + 1.0 / s.tau2;
        const double m = ((group_y_sums_(g) - fitted_sums(g)) / s.sigma2 + s.mu / s.tau2) / prec;
        s.alpha(g) = m + normal(rng) / std::sqrt(prec);
    }

    // mu | alpha, tau2
    {
        const double mu_prec0 = 1.0 / (priors_.mu_sd * priors_.mu_sd);
        const double prec = static_cast<double>(j) / s.tau2 + mu_prec0;
        const double m = (s.alpha.sum() / s.tau2 + mu_mean_ * mu_prec0) / prec;
        s.mu = m + normal(rng) / std::sqrt(prec);
    }

    // tau2 | alpha, mu
    {
        const double ss = (s.alpha.array() - s.mu).square().sum();
        s.tau2 = draw_inverse_gamma(priors_.tau2_shape + 0.5 * static_cast<double>(j), priors_.tau2_scale + 0.5 * ss, rng);
    }

    // sigma2 | everything; RSS expanded through cached sufficient statistics.
    {
        double rss = yty_ - 2.0 * s.alpha.dot(group_y_sums_) + group_sizes_.dot(s.alpha.cwiseProduct(s.alpha));
        if (p > 0) {
            rss += -2.0 * zty_.dot(s.theta) + 2.0 * s.alpha.dot(fitted_sums) + s.theta.dot(ztz_ * s.theta);
        }
        rss = std::max(rss, 0.0);
        s.sigma2 = draw_inverse_gamma(priors_.sigma2_shape + 0.5 * n, priors_.sigma2_scale + 0.5 * rss, rng);
    }
}

GibbsState GibbsSampler::draw_prior(Rng& rng) const {
    std::normal_distribution<double> normal;
    GibbsState s;
    s.theta.resize(data_->z.cols());
    for (Eigen::Index k = 0; k < s.theta.size(); ++k) s.theta(k) = priors_.theta_sd * normal(rng);
    s.mu = mu_mean_ + priors_.mu_sd * normal(rng);
    s.tau2 = draw_inverse_gamma(priors_.tau2_shape, priors_.tau2_scale, rng);
    s.sigma2 = draw_inverse_gamma(priors_.sigma2_shape, priors_.sigma2_scale, rng);
    s.alpha.resize(static_cast<Eigen::Index>(data_->n_groups()));
    for (Eigen::Index g = 0; g < s.alpha.size(); ++g) s.alpha(g) = s.mu + std::sqrt(s.tau2) * normal(rng);
    return s;
}

Eigen::VectorXd GibbsSampler::simulate_response(const GibbsState& s, Rng& rng) const {
    std::normal_distribution<double> normal;
    Eigen::VectorXd y(data_->y.size());
    const double sd = std::sqrt(s.sigma2);
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        double mean = s.alpha(static_cast<Eigen::Index>(data_->group[i]));
        if (s.theta.size() > 0) mean += data_->z.row(i).dot(s.theta);
        y(i) = mean + sd * normal(rng);
    }
    return y;
}

std::optional<std::size_t> PosteriorSamples::group_index(const std::string& label) const {
    const auto it = std::lower_bound(group_labels.begin(), group_labels.end(), label);
    if (it == group_labels.end() || *it != label) return std::nullopt;
    return static_cast<std::size_t>(it - group_labels.begin());
}

double split_rhat(const std::vector<std::vector<double>>& chains) {
    std::vector<std::span<const double>> halves;
    for (const auto& c : chains) {
        const std::size_t half = c.size() / 2;
        if (half < 2) throw std::invalid_argument("split_rhat: chains too short");
        halves.emplace_back(c.data(), half);
        halves.emplace_back(c.data() + c.size() - half, half);
    }
    const double m = static_cast<double>(halves.size());
    const double n = static_cast<double>(halves.front().size());
    std::vector<double> means;
    double within = 0.0;
    for (const auto h : halves) {
        means.push_back(mean(h));
        const double sd = sample_sd(h);
        within += sd * sd;
    }
    within /= m;
    const double between_var = sample_sd(means) * sample_sd(means);  // B / n
    if (!(within > 0.0)) return between_var > 0.0 ? INFINITY : 1.0;
    const double var_plus = (n - 1.0) / n * within + between_var;
    return std::sqrt(var_plus / within);
}

PosteriorSamples fit_hblr(const HblrData& data, const HblrPriors& priors, const McmcConfig& config) {
    if (data.n_groups() < 2) throw std::invalid_argument("fit_hblr: at least two participants required");
    if (config.chains < 1 || config.burn_in < 0 || config.iterations <= config.burn_in) {
        throw std::invalid_argument("fit_hblr: invalid MCMC configuration");
    }
    const GibbsSampler sampler(data, priors);
    const auto kept = static_cast<std::size_t>(config.iterations - config.burn_in);
    const auto j = static_cast<Eigen::Index>(data.n_groups());
    const auto p = data.z.cols();

    std::vector<std::vector<GibbsState>> draws(static_cast<std::size_t>(config.chains));
    parallel_for(draws.size(), [&](std::size_t c) {
        Rng rng(derive_seed(config.seed, c));
        GibbsState state = sampler.initial_state(rng);
        auto& out = draws[c];
        out.reserve(kept);
        for (int it = 0; it < config.iterations; ++it) {
            sampler.step(state, rng);
            if (it >= config.burn_in) out.push_back(state);
        }
    });

    PosteriorSamples post;
    post.group_labels = data.group_labels;
    post.n_chains = config.chains;
    const auto total = static_cast<Eigen::Index>(kept * draws.size());
    post.alpha.resize(total, j);
    post.theta.resize(total, p);
    post.mu.resize(total);
    post.tau2.resize(total);
    post.sigma2.resize(total);
    Eigen::Index row = 0;
    for (std::size_t c = 0; c < draws.size(); ++c) {
        for (std::size_t d = 0; d < kept; ++d, ++row) {
            const auto& s = draws[c][d];
            post.alpha.row(row) = s.alpha.transpose();
            if (p > 0) post.theta.row(row) = s.theta.transpose();
            post.mu(row) = s.mu;
            post.tau2(row) = s.tau2;
            post.sigma2(row) = s.sigma2;
            post.chain.push_back(static_cast<int>(c));
            post.draw.push_back(static_cast<int>(d));
        }
    }

    if (kept >= 4) {
        const auto per_chain = [&](auto&& column) {
            std::vector<std::vector<double>> chains(draws.size());
            for (std::size_t c = 0; c < draws.size(); ++c) {
                chains[c].resize(kept);
                for (std::size_t d = 0; d < kept; ++d) chains[c][d] = column(static_cast<Eigen::Index>(c * kept + d));
            }
            return split_rhat(chains);
        };
        post.rhat["mu"] = per_chain([&](Eigen::Index r) { return post.mu(r); });
        post.rhat["tau2"] = per_chain([&](Eigen::Index r) { return post.tau2(r); });
        post.rhat["sigma2"] = per_chain([&](Eigen::Index r) { return post.sigma2(r); });
        for (Eigen::Index k = 0; k < p; ++k) {
            post.rhat["theta[" + std::to_string(k) + "]"] = per_chain([&](Eigen::Index r) { return post.theta(r, k); });
        }
        for (Eigen::Index g = 0; g < j; ++g) {
            post.rhat["alpha[" + data.group_labels[g] + "]"] = per_chain([&](Eigen::Index r) { return post.alpha(r, g); });
        }
        for (const auto& [name, value] : post.rhat) post.max_rhat = std::max(post.max_rhat, value);
        post.converged = post.max_rhat < config.rhat_threshold;
    }
    return post;
}

std::vector<PredictiveSummary> predict_hblr(const PosteriorSamples& posterior, const Eigen::MatrixXd& z,
                                            std::span<const std::string> groups, std::uint64_t seed, double level) {
    if (groups.size() != static_cast<std::size_t>(z.rows())) {
        throw std::invalid_argument("predict_hblr: one group label per row required");
    }
    if (z.cols() != posterior.theta.cols()) throw std::invalid_argument("predict_hblr: coefficient count mismatch");
    const auto draws = static_cast<Eigen::Index>(posterior.n_draws());
    const Eigen::MatrixXd linear = posterior.theta * z.transpose();  // draws x rows
    Rng rng(seed);
    std::normal_distribution<double> normal;
    std::vector<PredictiveSummary> out;
    out.reserve(groups.size());
    std::vector<double> values(static_cast<std::size_t>(draws));
    const double tail = 0.5 * (1.0 - level);
    for (Eigen::Index r = 0; r < z.rows(); ++r) {
        const auto g = posterior.group_index(groups[r]);
        for (Eigen::Index d = 0; d < draws; ++d) {
            const double alpha = g ? posterior.alpha(d, static_cast<Eigen::Index>(*g))
                                   : posterior.mu(d) + std::sqrt(posterior.tau2(d)) * normal(rng);
            values[d] = alpha + linear(d, r);
        }
        PredictiveSummary s;
        s.mean = mean(values);
        s.lower = quantile(values, tail);
        s.upper = quantile(values, 1.0 - tail);
        out.push_back(s);
    }
    return out;
}

}  // namespace proxiphene

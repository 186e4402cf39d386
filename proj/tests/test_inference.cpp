#include "oracles.hpp"

#include "proxiphene/association.hpp"
#include "proxiphene/lmm.hpp"
#include "proxiphene/pipeline.hpp"
#include "proxiphene/random.hpp"
#include "proxiphene/stats.hpp"
#include "proxiphene/synthetic.hpp"

#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <sstream>

using namespace proxiphene;

namespace {

struct GroupedData {
    Eigen::VectorXd y;
    Eigen::MatrixXd x;
    std::vector<std::string> groups;
};

std::string group_name(std::size_t j) { return "G" + std::to_string(j); }

GroupedData simulate_lmm(Rng& rng, std::size_t n_groups, std::size_t per_group, const Eigen::VectorXd& beta,
                         double tau2, double sigma2) {
    std::normal_distribution<double> z;
    const std::size_t n = n_groups * per_group;
    GroupedData d;
    d.x.resize(static_cast<Eigen::Index>(n), beta.size());
    d.y.resize(static_cast<Eigen::Index>(n));
    for (std::size_t j = 0; j < n_groups; ++j) {
        const double b = std::sqrt(tau2) * z(rng);
        for (std::size_t k = 0; k < per_group; ++k) {
            const auto i = static_cast<Eigen::Index>(j * per_group + k);
            d.x(i, 0) = 1.0;
            for (Eigen::Index c = 1; c < beta.size(); ++c) d.x(i, c) = z(rng);
            d.y(i) = d.x.row(i).dot(beta) + b + std::sqrt(sigma2) * z(rng);
            d.groups.push_back(group_name(j));
        }
    }
    return d;
}

std::vector<std::string> names_for(Eigen::Index p) {
    std::vector<std::string> names{"(Intercept)"};
    for (Eigen::Index c = 1; c < p; ++c) names.push_back("x" + std::to_string(c));
    return names;
}

}  // namespace

TEST_CASE("bh_adjust worked examples") {
    const std::vector<double> a{0.01, 0.02, 0.03, 0.04};
    for (double q : bh_adjust(a)) CHECK(q == doctest::Approx(0.04).epsilon(1e-15));
    const std::vector<double> single{0.37};
    CHECK(bh_adjust(single)[0] == 0.37);
    const std::vector<double> b{0.005, 0.5};
    const auto qb = bh_adjust(b);
    CHECK(qb[0] == doctest::Approx(0.01).epsilon(1e-15));
    CHECK(qb[1] == doctest::Approx(0.5).epsilon(1e-15));
    const std::vector<double> bad{0.1, 1.2};
    CHECK_THROWS_AS(bh_adjust(bad), std::invalid_argument);
    const std::vector<double> negative{-0.01};
    CHECK_THROWS_AS(bh_adjust(negative), std::invalid_argument);
}

TEST_CASE("bh_adjust agrees with the double-loop definition and is monotone") {
    Rng rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> size(1, 60);
    for (int rep = 0; rep < 300; ++rep) {
        std::vector<double> p(static_cast<std::size_t>(size(rng)));
        for (double& v : p) v = std::pow(u(rng), 3.0);
        if (rep % 5 == 0 && p.size() > 2) p[1] = p[0];
        const auto q = bh_adjust(p);
        const auto expected = oracle::bh(p);
        REQUIRE(q.size() == p.size());
        for (std::size_t i = 0; i < p.size(); ++i) {
            CHECK(q[i] == expected[i]);
            CHECK(q[i] >= p[i]);
            CHECK(q[i] <= 1.0);
            for (std::size_t j = 0; j < p.size(); ++j) {
                if (p[i] <= p[j]) CHECK(q[i] <= q[j]);
            }
        }
        const auto again = bh_adjust(q);
        const auto again_expected = oracle::bh(q);
        for (std::size_t i = 0; i < q.size(); ++i) CHECK(again[i] == again_expected[i]);
    }
}

TEST_CASE("chi-squared critical values") {
    CHECK(std::fabs(chi_squared_critical(0.05, 16) - 26.296) < 5e-4);
    CHECK(std::fabs(chi_squared_critical(0.05, 33) - 47.400) < 5e-4);
    CHECK(std::fabs(chi_squared_critical(0.05, 49) - 66.339) < 5e-4);
    CHECK(chi_squared_upper_tail(chi_squared_critical(0.05, 16), 16) == doctest::Approx(0.05).epsilon(1e-10));
    CHECK(chi_squared_upper_tail(0.0, 0) == 1.0);
}

TEST_CASE("fit_lmm with no between-group variance reproduces ordinary least squares") {
    Rng rng(11);
    std::normal_distribution<double> z;
    const std::size_t groups = 30;
    const std::size_t per = 6;
    const Eigen::Index n = static_cast<Eigen::Index>(groups * per);
    Eigen::MatrixXd x(n, 3);
    std::vector<std::string> g;
    for (Eigen::Index i = 0; i < n; ++i) {
        x(i, 0) = 1.0;
        x(i, 1) = z(rng);
        x(i, 2) = z(rng);
        g.push_back(group_name(static_cast<std::size_t>(i) / per));
    }
    // Noise orthogonal to the design and to the group indicators leaves no
    // between-group signal in the OLS residuals, so the ML variance ratio is 0.
    Eigen::MatrixXd span(n, 3 + static_cast<Eigen::Index>(groups));
    span.setZero();
    span.leftCols(3) = x;
    for (Eigen::Index i = 0; i < n; ++i) span(i, 3 + i / static_cast<Eigen::Index>(per)) = 1.0;
    Eigen::VectorXd e(n);
    for (Eigen::Index i = 0; i < n; ++i) e(i) = z(rng);
    const Eigen::VectorXd coef = span.colPivHouseholderQr().solve(e);
    e -= span * coef;
    Eigen::Vector3d beta(2.0, -1.0, 0.5);
    const Eigen::VectorXd y = x * beta + e;

    const auto fit = fit_lmm(y, x, names_for(3), g);
    const Eigen::VectorXd ols = oracle::ols(x, y);
    for (Eigen::Index c = 0; c < 3; ++c) CHECK(std::fabs(fit.beta(c) - ols(c)) < 1e-6);
    CHECK(fit.tau2 < 1e-8);
    CHECK(fit.tau2_at_boundary);
    CHECK(fit.sigma2 > 0.0);
    CHECK(fit.sigma2 == doctest::Approx((y - x * ols).squaredNorm() / static_cast<double>(n)).epsilon(1e-6));
    CHECK(fit.n_params() == 5);
    CHECK(fit.n_groups == groups);
    CHECK(fit.n_obs == static_cast<std::size_t>(n));
}

TEST_CASE("balanced intercept-only model returns the grand mean") {
    Rng rng(3);
    auto d = simulate_lmm(rng, 12, 5, Eigen::VectorXd::Constant(1, 4.0), 2.0, 1.0);
    const auto fit = fit_lmm(d.y, d.x, names_for(1), d.groups);
    CHECK(fit.beta(0) == doctest::Approx(d.y.mean()).epsilon(1e-12));
}

TEST_CASE("fit_lmm rejects rank deficiency and single groups") {
    Rng rng(5);
    auto d = simulate_lmm(rng, 10, 4, Eigen::Vector2d(1.0, 2.0), 1.0, 1.0);
    Eigen::MatrixXd dup(d.x.rows(), 3);
    dup << d.x, d.x.col(1) * 2.0;
    std::vector<std::string> names{"(Intercept)", "x1", "x1b"};
    CHECK_THROWS_AS(fit_lmm(d.y, dup, names, d.groups), std::invalid_argument);
    LmmOptions options;
    options.drop_collinear = true;
    const auto fit = fit_lmm(d.y, dup, names, d.groups, options);
    CHECK(fit.names.size() == 2);
    REQUIRE(fit.dropped.size() == 1);
    CHECK(fit.dropped[0] == "x1b");
    std::vector<std::string> one(d.groups.size(), "only");
    CHECK_THROWS_AS(fit_lmm(d.y, d.x, names_for(2), one), std::invalid_argument);
}

TEST_CASE("fit_lmm standard errors are calibrated") {
    const Eigen::Vector2d beta(2.0, -1.0);
    int covered = 0;
    int total = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Rng rng(derive_seed(2024, seed));
        auto d = simulate_lmm(rng, 200, 10, beta, 4.0, 1.0);
        const auto fit = fit_lmm(d.y, d.x, names_for(2), d.groups);
        for (Eigen::Index c = 0; c < 2; ++c) {
            ++total;
            if (std::fabs(fit.beta(c) - beta(c)) <= 3.0 * fit.se(c)) ++covered;
        }
        CHECK(fit.tau2 >= 0.0);
        CHECK(fit.sigma2 > 0.0);
    }
    CHECK(covered >= static_cast<int>(0.95 * total));
}

TEST_CASE("fit_lmm is invariant to row order and group labels") {
    Rng rng(9);
    auto d = simulate_lmm(rng, 25, 4, Eigen::Vector3d(1.0, 0.3, -0.7), 1.5, 1.0);
    const auto base = fit_lmm(d.y, d.x, names_for(3), d.groups);

    std::vector<Eigen::Index> order(static_cast<std::size_t>(d.y.size()));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    Eigen::VectorXd y2(d.y.size());
    Eigen::MatrixXd x2(d.x.rows(), d.x.cols());
    std::vector<std::string> g2;
    for (std::size_t i = 0; i < order.size(); ++i) {
        y2(static_cast<Eigen::Index>(i)) = d.y(order[i]);
        x2.row(static_cast<Eigen::Index>(i)) = d.x.row(order[i]);
        g2.push_back("relabel-" + d.groups[static_cast<std::size_t>(order[i])] + "-z");
    }
    const auto shuffled = fit_lmm(y2, x2, names_for(3), g2);
    for (Eigen::Index c = 0; c < 3; ++c) {
        CHECK(std::fabs(shuffled.beta(c) - base.beta(c)) < 1e-6);
        CHECK(std::fabs(shuffled.se(c) - base.se(c)) < 1e-6);
    }
    CHECK(std::fabs(shuffled.tau2 - base.tau2) < 1e-6);
    CHECK(std::fabs(shuffled.sigma2 - base.sigma2) < 1e-6);
    CHECK(std::fabs(shuffled.loglik - base.loglik) < 1e-6);
}

TEST_CASE("likelihood ratio test on nested fits") {
    Rng rng(13);
    auto d = simulate_lmm(rng, 40, 5, Eigen::Vector4d(1.0, 0.5, 0.0, 0.0), 1.0, 1.0);
    const Eigen::MatrixXd small_x = d.x.leftCols(2);
    const auto small = fit_lmm(d.y, small_x, names_for(2), d.groups);
    const auto large = fit_lmm(d.y, d.x, names_for(4), d.groups);
    CHECK(large.loglik >= small.loglik - 1e-6);

    const auto same = likelihood_ratio_test(small, small);
    CHECK(same.chi2 == 0.0);
    CHECK(same.df == 0);
    CHECK(same.p_value == 1.0);

    const auto lrt = likelihood_ratio_test(small, large);
    CHECK(lrt.df == 2);
    CHECK(lrt.chi2 == doctest::Approx(2.0 * (large.loglik - small.loglik)));
    CHECK(lrt.p_value == doctest::Approx(chi_squared_upper_tail(lrt.chi2, 2)));

    // Not nested: the small model has a column the large one lacks.
    Eigen::MatrixXd other(d.x.rows(), 2);
    other << d.x.col(0), d.x.col(3);
    std::vector<std::string> other_names{"(Intercept)", "x9"};
    const auto odd = fit_lmm(d.y, other, other_names, d.groups);
    CHECK_THROWS_AS(likelihood_ratio_test(odd, large), std::invalid_argument);

    // Different response.
    Eigen::VectorXd y2 = d.y;
    y2(0) += 1.0;
    const auto shifted = fit_lmm(y2, small_x, names_for(2), d.groups);
    CHECK_THROWS_AS(likelihood_ratio_test(shifted, large), std::invalid_argument);
}

TEST_CASE("null likelihood ratio statistics follow chi-squared") {
    std::vector<double> cdf;
    for (std::uint64_t seed = 0; seed < 500; ++seed) {
        Rng rng(derive_seed(77, seed));
        auto d = simulate_lmm(rng, 30, 5, Eigen::Vector4d(1.0, 0.5, 0.0, 0.0), 1.0, 1.0);
        const auto small = fit_lmm(d.y, Eigen::MatrixXd(d.x.leftCols(2)), names_for(2), d.groups);
        const auto large = fit_lmm(d.y, d.x, names_for(4), d.groups);
        CHECK(large.loglik >= small.loglik - 1e-6);
        const auto lrt = likelihood_ratio_test(small, large);
        cdf.push_back(1.0 - lrt.p_value);
    }
    CHECK(oracle::ks_pvalue(cdf) > 0.01);
}

TEST_CASE("spearman handles ties, negation and constants") {
    const std::vector<double> a{1, 2, 2, 4};
    const std::vector<double> b{1, 3, 3, 5};
    CHECK(spearman(a, b) == doctest::Approx(1.0));
    const std::vector<double> neg{-1, -2, -2, -4};
    CHECK(spearman(a, neg) == doctest::Approx(-1.0));
    CHECK(spearman(a, a) == doctest::Approx(1.0));
    const auto ranks = average_ranks(a);
    CHECK(ranks == std::vector<double>{1.0, 2.5, 2.5, 4.0});
    const std::vector<double> flat{3, 3, 3, 3};
    CHECK(spearman(a, flat) == 0.0);
}

namespace {

struct FeatureTable {
    std::vector<FeatureVector> rows;
    DemographicsIndex demographics;
};

FeatureTable random_table(Rng& rng, std::size_t participants, std::size_t per) {
    std::normal_distribution<double> z;
    FeatureTable t;
    for (std::size_t j = 0; j < participants; ++j) {
        Demographics demo;
        demo.participant_id = group_name(j);
        demo.age_years = 20.0 + static_cast<double>(j % 40);
        demo.gender = j % 3 == 0 ? Gender::male : Gender::female;
        demo.education_years = 10.0 + static_cast<double>(j % 9);
        t.demographics[demo.participant_id] = demo;
        for (std::size_t k = 0; k < per; ++k) {
            FeatureVector f;
            f.participant_id = demo.participant_id;
            f.date = parse_date("2019-01-01") + std::chrono::days(14 * static_cast<int>(k));
            f.phq8 = std::clamp(static_cast<int>(std::lround(8.0 + 3.0 * z(rng))), 0, 24);
            for (double& v : f.values) v = z(rng);
            t.rows.push_back(f);
        }
    }
    return t;
}

}  // namespace

TEST_CASE("spearman_matrix is symmetric with unit diagonal") {
    Rng rng(21);
    auto t = random_table(rng, 6, 3);
    for (auto& r : t.rows) {
        r.values[1] = -r.values[0];
        r.values[2] = 5.0;
    }
    const auto m = spearman_matrix(t.rows);
    REQUIRE(m.rho.rows() == static_cast<Eigen::Index>(kFeatureCount));
    for (Eigen::Index i = 0; i < m.rho.rows(); ++i) {
        if (!m.constant[static_cast<std::size_t>(i)]) CHECK(m.rho(i, i) == doctest::Approx(1.0));
        for (Eigen::Index j = 0; j < m.rho.cols(); ++j) CHECK(m.rho(i, j) == m.rho(j, i));
    }
    CHECK(m.rho(0, 1) == doctest::Approx(-1.0));
    CHECK(m.constant[2]);
    CHECK(m.rho(0, 2) == 0.0);
    std::span<const FeatureVector> two(t.rows.data(), 2);
    CHECK_THROWS_AS(spearman_matrix(two), std::invalid_argument);
}

TEST_CASE("pairwise associations: z identity, skipped constants, type-I rate") {
    Rng rng(31);
    auto t = random_table(rng, 40, 4);
    for (auto& r : t.rows) r.values[5] = 1.0;
    const auto results = pairwise_associations(t.rows, t.demographics);
    REQUIRE(results.size() == kFeatureCount);
    CHECK(results[5].skipped.has_value());
    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto& r = results[i];
        CHECK(r.feature == feature_names()[i]);
        if (r.skipped) continue;
        CHECK(r.z == r.estimate / r.se);
        CHECK(r.adjusted_p >= r.p_value);
        CHECK(r.adjusted_p <= 1.0);
        CHECK(r.p_value == doctest::Approx(normal_two_sided_p(r.z)));
    }

    std::ostringstream csv;
    write_associations_csv(csv, results);
    std::istringstream in(csv.str());
    const auto back = read_associations_csv(in);
    REQUIRE(back.size() == results.size());
    CHECK(back[0].feature == results[0].feature);
    CHECK(back[0].estimate == doctest::Approx(results[0].estimate).epsilon(1e-12));

    // Outcome independent of the feature: the 0.05 test should reject rarely.
    int rejections = 0;
    const std::vector<std::string> names{"(Intercept)", "feature", "age", "female", "education_years"};
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        Rng r2(derive_seed(99, seed));
        std::normal_distribution<double> z;
        const std::size_t groups = 30;
        const std::size_t per = 4;
        const auto n = static_cast<Eigen::Index>(groups * per);
        Eigen::MatrixXd x(n, 5);
        Eigen::VectorXd y(n);
        std::vector<std::string> g;
        for (std::size_t j = 0; j < groups; ++j) {
            const double b = 2.0 * z(r2);
            const double age = 20.0 + 40.0 * std::uniform_real_distribution<double>(0, 1)(r2);
            const double female = j % 4 == 0 ? 0.0 : 1.0;
            const double edu = 10.0 + static_cast<double>(j % 8);
            for (std::size_t k = 0; k < per; ++k) {
                const auto i = static_cast<Eigen::Index>(j * per + k);
                x.row(i) << 1.0, z(r2), age, female, edu;
                y(i) = 8.0 + b + 3.0 * z(r2);
                g.push_back(group_name(j));
            }
        }
        const auto fit = fit_lmm(y, x, names, g);
        if (normal_two_sided_p(fit.estimate("feature") / fit.std_error("feature")) < 0.05) ++rejections;
    }
    CHECK(rejections <= 20);
}

TEST_CASE("planted effect on Mean_Mean is detected with the right sign") {
    GeneratorSpec spec;
    spec.n_participants = 60;
    spec.seed = 5;
    const auto cohort = generate_cohort(spec);
    const auto assembly = ingest_records(cohort.scans, cohort.phq8, parse_date("2020-02-01"), TimeZone::utc());
    const auto features = extract_all(assembly.intervals);
    const auto demographics = index_demographics(cohort.demographics);
    const auto results = pairwise_associations(features, demographics);
    const auto it = std::find_if(results.begin(), results.end(), [](const auto& r) { return r.feature == "Mean_Mean"; });
    REQUIRE(it != results.end());
    CHECK(it->adjusted_p < kSignificanceLevel);
    CHECK(it->estimate < 0.0);

    const auto nested = nested_model_lrts(features, demographics);
    CHECK(nested.b_vs_a.df == 16);
    CHECK(nested.model_b.loglik >= nested.model_a.loglik - 1e-6);
    CHECK(nested.model_c.loglik >= nested.model_b.loglik - 1e-6);
    CHECK(nested.c_vs_a.chi2 >= 0.0);
    const auto j = lrt_to_json(nested);
    CHECK(j.contains("models"));
}

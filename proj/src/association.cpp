#include "proxiphene/association.hpp"

#include "proxiphene/csv.hpp"
#include "proxiphene/error.hpp"
#include "proxiphene/stats.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace proxiphene {

namespace {

const std::string kIntercept = "(Intercept)";

std::vector<std::string> design_names(std::span<const std::size_t> feature_columns) {
    std::vector<std::string> names = {kIntercept};
    for (const auto f : feature_columns) names.push_back(feature_names()[f]);
    for (const auto& c : covariate_names()) names.push_back(c);
    return names;
}

Eigen::MatrixXd build_design(const CovariateTable& table, std::span<const std::size_t> feature_columns) {
    const auto n = static_cast<Eigen::Index>(table.rows.size());
    const auto p = static_cast<Eigen::Index>(1 + feature_columns.size() + 3);
    Eigen::MatrixXd x(n, p);
    for (Eigen::Index i = 0; i < n; ++i) {
        x(i, 0) = 1.0;
        for (std::size_t k = 0; k < feature_columns.size(); ++k) {
            x(i, 1 + static_cast<Eigen::Index>(k)) = table.rows[i]->values[feature_columns[k]];
        }
        x.block(i, p - 3, 1, 3) = table.covariates.row(i);
    }
    return x;
}

LmmFit fit_nested(const CovariateTable& table, std::span<const std::size_t> feature_columns) {
    const auto names = design_names(feature_columns);
    LmmOptions options;
    options.drop_collinear = true;
    return fit_lmm(table.phq8, build_design(table, feature_columns), names, table.groups, options);
}

std::string fmt_or_empty(double v, bool skipped) { return skipped ? std::string() : format_double(v); }

}  // namespace

std::vector<double> bh_adjust(std::span<const double> pvalues) {
    for (const double p : pvalues) {
        if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("bh_adjust: p-value outside [0, 1]");
    }
    const std::size_t m = pvalues.size();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return pvalues[a] < pvalues[b]; });
    std::vector<double> adjusted(m);
    double running = 1.0;
    for (std::size_t k = m; k-- > 0;) {
        const double rank = static_cast<double>(k + 1);
        const double p = pvalues[order[k]];
        // m / rank >= 1 even after rounding, so the adjusted value never drops below p.
        running = std::min(running, p * (static_cast<double>(m) / rank));
        adjusted[order[k]] = std::min(1.0, running);
    }
    return adjusted;
}

const std::vector<std::string>& covariate_names() {
    static const std::vector<std::string> names = {"age", "female", "education_years"};
    return names;
}

CovariateTable join_covariates(std::span<const FeatureVector> features, const DemographicsIndex& demographics) {
    CovariateTable table;
    for (const auto& row : features) {
        if (demographics.contains(row.participant_id)) table.rows.push_back(&row);
    }
    const auto n = static_cast<Eigen::Index>(table.rows.size());
    table.phq8.resize(n);
    table.covariates.resize(n, 3);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& row = *table.rows[i];
        const auto& demo = demographics.find(row.participant_id)->second;
        table.phq8(i) = row.phq8;
        table.covariates(i, 0) = demo.age_years;
        table.covariates(i, 1) = demo.female_indicator();
        table.covariates(i, 2) = demo.education_years;
        table.groups.push_back(row.participant_id);
    }
    return table;
}

std::vector<AssociationResult> pairwise_associations(std::span<const FeatureVector> features,
                                                     const DemographicsIndex& demographics) {
    const auto table = join_covariates(features, demographics);
    std::vector<AssociationResult> results(kFeatureCount);
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
        auto& res = results[f];
        res.feature = feature_names()[f];
        if (table.rows.empty()) {
            res.skipped = "no rows with demographics";
            continue;
        }
        bool constant = true;
        bool finite = true;
        const double first = table.rows.front()->values[f];
        for (const auto* row : table.rows) {
            const double v = row->values[f];
            finite = finite && std::isfinite(v);
            constant = constant && v == first;
        }
        if (!finite) {
            res.skipped = "non-finite values";
            continue;
        }
        if (constant) {
            res.skipped = "constant feature";
            continue;
        }
        const std::size_t cols[] = {f};
        try {
            const auto fit = fit_nested(table, cols);
            if (std::find(fit.dropped.begin(), fit.dropped.end(), res.feature) != fit.dropped.end()) {
                res.skipped = "collinear with covariates";
                continue;
            }
            res.estimate = fit.estimate(res.feature);
            res.se = fit.std_error(res.feature);
            res.z = res.estimate / res.se;
            res.p_value = normal_two_sided_p(res.z);
        } catch (const std::invalid_argument& e) {
            res.skipped = e.what();
        }
    }
    std::vector<double> tested;
    for (const auto& r : results) {
        if (!r.skipped) tested.push_back(r.p_value);
    }
    const auto adjusted = bh_adjust(tested);
    std::size_t k = 0;
    for (auto& r : results) {
        if (!r.skipped) r.adjusted_p = adjusted[k++];
    }
    return results;
}

NestedModelComparison nested_model_lrts(std::span<const FeatureVector> features, const DemographicsIndex& demographics) {
    const auto table = join_covariates(features, demographics);
    if (table.rows.empty()) throw input_error("likelihood ratio tests: no feature rows with demographics");
    std::vector<std::size_t> statistical(kStatisticalFeatureCount);
    std::iota(statistical.begin(), statistical.end(), 0);
    std::vector<std::size_t> all(kFeatureCount);
    std::iota(all.begin(), all.end(), 0);

    NestedModelComparison out;
    out.model_a = fit_nested(table, {});
    out.model_b = fit_nested(table, statistical);
    out.model_c = fit_nested(table, all);
    out.b_vs_a = likelihood_ratio_test(out.model_a, out.model_b);
    out.c_vs_a = likelihood_ratio_test(out.model_a, out.model_c);
    out.c_vs_b = likelihood_ratio_test(out.model_b, out.model_c);
    return out;
}

SpearmanMatrix spearman_matrix(std::span<const FeatureVector> features) {
    if (features.size() < 3) throw std::invalid_argument("spearman_matrix: need at least three rows");
    SpearmanMatrix out;
    out.names.assign(feature_names().begin(), feature_names().end());
    const auto n = features.size();
    std::vector<std::vector<double>> ranks(kFeatureCount);
    out.constant.assign(kFeatureCount, false);
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
        std::vector<double> column(n);
        for (std::size_t i = 0; i < n; ++i) column[i] = features[i].values[f];
        out.constant[f] = std::all_of(column.begin(), column.end(), [&](double v) { return v == column.front(); });
        ranks[f] = average_ranks(column);
    }
    const auto p = static_cast<Eigen::Index>(kFeatureCount);
    out.rho = Eigen::MatrixXd::Identity(p, p);
    for (Eigen::Index a = 0; a < p; ++a) {
        for (Eigen::Index b = a + 1; b < p; ++b) {
            const double r = (out.constant[a] || out.constant[b]) ? 0.0 : pearson(ranks[a], ranks[b]);
            out.rho(a, b) = r;
            out.rho(b, a) = r;
        }
    }
    return out;
}

void write_associations_csv(std::ostream& out, std::span<const AssociationResult> results,
                            std::span<const std::string> meta_lines) {
    for (const auto& line : meta_lines) out << "# " << line << '\n';
    out << "feature,family,estimate,se,z,p_value,adjusted_p,significant,note\n";
    for (const auto& r : results) {
        const auto idx = feature_index(r.feature);
        const char* family = "";
        if (idx) {
            switch (feature_family(*idx)) {
                case FeatureFamily::statistical: family = "second_order_statistical"; break;
                case FeatureFamily::entropy: family = "multiscale_entropy"; break;
                case FeatureFamily::frequency: family = "frequency_domain"; break;
            }
        }
        const bool skipped = r.skipped.has_value();
        const bool significant = !skipped && r.adjusted_p < kSignificanceLevel;
        write_csv_row(out, {r.feature, family, fmt_or_empty(r.estimate, skipped), fmt_or_empty(r.se, skipped),
                            fmt_or_empty(r.z, skipped), fmt_or_empty(r.p_value, skipped),
                            fmt_or_empty(r.adjusted_p, skipped), significant ? "true" : "false",
                            r.skipped.value_or("")});
    }
}

std::vector<AssociationResult> read_associations_csv(std::istream& in, const std::string& source) {
    const auto table = read_csv(in, source);
    require_header(table, {"feature", "family", "estimate", "se", "z", "p_value", "adjusted_p", "significant", "note"});
    std::vector<AssociationResult> out;
    for (const auto& row : table.rows) {
        AssociationResult r;
        r.feature = row[0];
        if (row[2].empty()) {
            r.skipped = row[8].empty() ? std::string("skipped") : row[8];
        } else {
            r.estimate = parse_double(row[2]);
            r.se = parse_double(row[3]);
            r.z = parse_double(row[4]);
            r.p_value = parse_double(row[5]);
            r.adjusted_p = parse_double(row[6]);
        }
        out.push_back(std::move(r));
    }
    return out;
}

nlohmann::json lrt_to_json(const NestedModelComparison& c) {
    const auto model = [](const char* label, const char* predictors, const LmmFit& fit) {
        return nlohmann::json{{"model", label},
                              {"predictors", predictors},
                              {"n_fixed_effects", fit.names.size()},
                              {"dropped_collinear", fit.dropped},
                              {"loglik", fit.loglik},
                              {"tau2", fit.tau2},
                              {"sigma2", fit.sigma2},
                              {"n_obs", fit.n_obs},
                              {"n_groups", fit.n_groups}};
    };
    const auto test = [](const char* label, const LrtResult& r) {
        return nlohmann::json{{"comparison", label},
                              {"df", r.df},
                              {"chi2", r.chi2},
                              {"p_value", r.p_value},
                              {"critical_0_05", r.df > 0 ? chi_squared_critical(0.05, r.df) : 0.0}};
    };
    return {{"models",
             {model("A", "demographics", c.model_a),
              model("B", "demographics + 16 second-order statistical features", c.model_b),
              model("C", "demographics + all 49 features", c.model_c)}},
            {"tests", {test("B vs A", c.b_vs_a), test("C vs A", c.c_vs_a), test("C vs B", c.c_vs_b)}}};
}

void write_spearman_csv(std::ostream& out, const SpearmanMatrix& m) {
    std::vector<std::string> header = {"feature"};
    header.insert(header.end(), m.names.begin(), m.names.end());
    write_csv_row(out, header);
    for (Eigen::Index a = 0; a < m.rho.rows(); ++a) {
        std::vector<std::string> row = {m.names[a]};
        for (Eigen::Index b = 0; b < m.rho.cols(); ++b) row.push_back(format_double(m.rho(a, b)));
        write_csv_row(out, row);
    }
}

}  // namespace proxiphene

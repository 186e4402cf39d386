#pragma once

#include "proxiphene/domain.hpp"
#include "proxiphene/features.hpp"
#include "proxiphene/lmm.hpp"

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace proxiphene {

/// Benjamini-Hochberg step-up adjustment, returned in input order.
/// Throws std::invalid_argument for values outside [0, 1].
std::vector<double> bh_adjust(std::span<const double> pvalues);

struct AssociationResult {
    std::string feature;
    double estimate = 0.0;
    double se = 0.0;
    double z = 0.0;
    double p_value = 1.0;
    double adjusted_p = 1.0;
    std::optional<std::string> skipped;  // reason the feature was not tested
};

inline constexpr double kSignificanceLevel = 0.05;

/// Names of the covariate columns appended to every association and nested model.
const std::vector<std::string>& covariate_names();

/// Rows joined with demographics; rows of participants without demographics are dropped.
struct CovariateTable {
    std::vector<const FeatureVector*> rows;
    Eigen::VectorXd phq8;
    Eigen::MatrixXd covariates;  // age, female, education_years
    std::vector<std::string> groups;
};

CovariateTable join_covariates(std::span<const FeatureVector> features, const DemographicsIndex& demographics);

/// One random-intercept model per feature (feature + covariates), z-test p-values,
/// BH adjustment across the tested features. Results follow feature_names() order.
std::vector<AssociationResult> pairwise_associations(std::span<const FeatureVector> features,
                                                     const DemographicsIndex& demographics);

struct NestedModelComparison {
    LmmFit model_a;  // covariates
    LmmFit model_b;  // + 16 statistical features
    LmmFit model_c;  // + all 49 features
    LrtResult b_vs_a;
    LrtResult c_vs_a;
    LrtResult c_vs_b;
};

NestedModelComparison nested_model_lrts(std::span<const FeatureVector> features, const DemographicsIndex& demographics);

struct SpearmanMatrix {
    std::vector<std::string> names;
    Eigen::MatrixXd rho;
    std::vector<bool> constant;
};

/// Throws std::invalid_argument with fewer than three rows.
SpearmanMatrix spearman_matrix(std::span<const FeatureVector> features);

void write_associations_csv(std::ostream& out, std::span<const AssociationResult> results,
                            std::span<const std::string> meta_lines = {});
std::vector<AssociationResult> read_associations_csv(std::istream& in, const std::string& source = "associations.csv");

nlohmann::json lrt_to_json(const NestedModelComparison& comparison);
void write_spearman_csv(std::ostream& out, const SpearmanMatrix& matrix);

}  // namespace proxiphene

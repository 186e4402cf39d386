#pragma once

#include "proxiphene/domain.hpp"
#include "proxiphene/features.hpp"
#include "proxiphene/hblr.hpp"
#include "proxiphene/lasso.hpp"
#include "proxiphene/metrics.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace proxiphene {

inline constexpr std::size_t kMinCohortIntervals = 3;
inline constexpr int kMinCohortScoreRange = 5;

/// One PHQ-8 interval usable for prediction (features joined with covariates).
struct CohortRow {
    std::size_t id = 0;
    std::string participant_id;
    Date date;
    double target = 0.0;
    std::array<double, kFeatureCount> features{};
    std::array<double, 3> covariates{};  // age, female, education_years
    std::size_t position = 0;            // 0-based index in the participant's time order
};

/// Rows grouped by participant (sorted labels) and ordered by date within each participant.
struct Cohort {
    std::vector<CohortRow> rows;
    std::vector<std::string> participants;
    std::vector<std::vector<std::size_t>> by_participant;

    [[nodiscard]] std::size_t max_intervals() const;
};

/// Joins features with demographics; rows without demographics are dropped and a second
/// interval on the same date for one participant is discarded.
Cohort build_cohort(std::span<const FeatureVector> features, const DemographicsIndex& demographics);

/// Participants with >= 3 intervals whose PHQ-8 range (max - min) is >= 5, sorted.
std::vector<std::string> select_prediction_cohort(std::span<const FeatureVector> intervals);

/// build_cohort restricted to select_prediction_cohort over the joined rows.
Cohort build_prediction_cohort(std::span<const FeatureVector> features, const DemographicsIndex& demographics);

enum class CvScheme { lao, loo };
std::string_view to_string(CvScheme scheme);
CvScheme parse_scheme(std::string_view text);

struct CvSplit {
    CvScheme scheme = CvScheme::lao;
    std::size_t iteration = 0;  // LAO: k in [2, T]; LOO: participant number 1..J
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// Iteration k tests every participant's k-th interval and trains on all intervals 1..k-1.
std::vector<CvSplit> lao_splits(const Cohort& cohort);
/// One split per participant: its first two intervals plus everyone else's data train,
/// its remaining intervals test.
std::vector<CvSplit> loo_splits(const Cohort& cohort);
std::vector<CvSplit> make_splits(const Cohort& cohort, CvScheme scheme);

/// Empty when the split is sound; otherwise a description of the first violation
/// (overlap, unknown row, or a training interval later than a test interval of the same participant).
std::string split_violation(const Cohort& cohort, const CvSplit& split);

nlohmann::json splits_to_json(const Cohort& cohort, std::span<const CvSplit> splits);

enum class FeatureSet { none, statistical, all };
enum class Estimator { hblr, lasso };

struct ModelSpec {
    std::string name;   // baseline | hblr-stat | hblr | lasso
    std::string label;  // report row label
    Estimator estimator = Estimator::hblr;
    FeatureSet features = FeatureSet::all;
};

/// Throws std::invalid_argument for unknown names.
ModelSpec model_spec(std::string_view name);
const std::vector<std::string>& model_names();

/// Predictor columns: last_phq8, age, female, education_years, then the selected features.
std::vector<std::string> design_columns(FeatureSet features);

/// Standardized train/test matrices for one split. Training statistics only.
struct SplitDesign {
    std::vector<std::string> columns;
    Eigen::MatrixXd train_z;
    Eigen::VectorXd train_y;
    std::vector<std::string> train_groups;
    std::vector<std::size_t> train_ids;
    Eigen::MatrixXd test_z;
    Eigen::VectorXd test_y;
    std::vector<std::string> test_groups;
    std::vector<std::size_t> test_ids;
    Eigen::VectorXd center;
    Eigen::VectorXd scale;  // 0 marks a column constant in training (zeroed in both blocks)
};

/// Last observed score: for a training row, the participant's preceding interval when it is
/// in the training set; for a test row, the participant's latest training interval. Rows with
/// neither use the training-target mean.
SplitDesign make_split_design(const Cohort& cohort, const CvSplit& split, FeatureSet features);

struct CvOptions {
    std::uint64_t seed = 0;
    McmcConfig mcmc;
    HblrPriors priors;
    LassoOptions lasso;
    bool clip_predictions = false;
};

/// Fits on the training block and returns one prediction per test row. Diagnostics (for
/// example non-convergence) may be appended.
using FitPredict =
    std::function<std::vector<double>(const SplitDesign& design, std::uint64_t seed, std::vector<std::string>& diagnostics)>;

FitPredict make_fit_predict(const ModelSpec& spec, const CvOptions& options);

struct PooledPrediction {
    std::size_t row_id = 0;
    std::string participant_id;
    std::size_t iteration = 0;
    double predicted = 0.0;
    double target = 0.0;
};

struct CvResult {
    CvScheme scheme = CvScheme::lao;
    std::string model;
    std::vector<PooledPrediction> predictions;  // sorted by row id
    MetricsReport metrics;
    std::vector<std::string> diagnostics;
};

/// Throws proxiphene::Error (model) naming the split when a fit fails.
CvResult run_cv(const Cohort& cohort, std::span<const CvSplit> splits, FeatureSet features, const FitPredict& model,
                const CvOptions& options, const std::string& model_name = "custom");
CvResult run_cv(const Cohort& cohort, std::span<const CvSplit> splits, const ModelSpec& spec, const CvOptions& options);

}  // namespace proxiphene

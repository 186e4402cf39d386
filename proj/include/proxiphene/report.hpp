#pragma once

#include "proxiphene/association.hpp"
#include "proxiphene/features.hpp"
#include "proxiphene/ingest.hpp"
#include "proxiphene/metrics.hpp"

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace proxiphene {

/// Prediction comparison: rows = models, columns = LAO/LOO R^2 and RMSE.
struct PredictionRow {
    std::string model;
    std::string label;
    std::optional<MetricsReport> lao;
    std::optional<MetricsReport> loo;
    std::vector<std::string> diagnostics;
    bool placeholder = false;  // row kept for layout only, no estimator behind it
};

struct PredictionTable {
    std::vector<PredictionRow> rows;

    /// Inserts or fills the row of `model` (preset order is kept).
    void set(const std::string& model, const std::string& label, const MetricsReport& metrics,
             std::span<const std::string> diagnostics = {});
};

/// Rows for every preset plus the gradient-boosting placeholder, all empty.
PredictionTable empty_prediction_table();

nlohmann::json to_json(const PredictionTable& table);
PredictionTable prediction_table_from_json(const nlohmann::json& j);

/// "R²=0.526, RMSE=3.891" (or "R²=n/a" when undefined).
std::string format_metrics(const MetricsReport& metrics);

struct ReportInputs {
    std::vector<AssociationResult> associations;
    nlohmann::json lrt;
    PredictionTable prediction;
    std::size_t n_intervals = 0;
    std::size_t n_participants = 0;
    nlohmann::json meta;
    std::vector<std::string> plot_files;
};

std::string render_report(const ReportInputs& inputs);

/// Mean MSE profile per PHQ-8 severity band: band,scale,mean,sd,n.
void write_mse_profiles_csv(std::ostream& out, std::span<const FeatureVector> features,
                            std::span<const std::string> meta_lines = {});

/// Power spectra of the lowest- and highest-scoring intervals:
/// example,participant_id,phq8_date,score,frequency,power.
void write_spectra_csv(std::ostream& out, std::span<const NbdcInterval> intervals,
                       std::span<const std::string> meta_lines = {});

}  // namespace proxiphene

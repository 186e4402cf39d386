#include "proxiphene/report.hpp"

#include "proxiphene/csv.hpp"
#include "proxiphene/cv.hpp"
#include "proxiphene/spectrum.hpp"
#include "proxiphene/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

namespace proxiphene {

namespace {

constexpr const char* kPlaceholderModel = "xgboost";

nlohmann::json metrics_json(const std::optional<MetricsReport>& m) {
    if (!m) return nullptr;
    return {{"r2", m->r2 ? nlohmann::json(*m->r2) : nlohmann::json(nullptr)},
            {"rmse", m->rmse},
            {"n_test", m->n_test}};
}

std::optional<MetricsReport> metrics_from_json(const nlohmann::json& j, const std::string& scheme,
                                               const std::string& model) {
    if (j.is_null()) return std::nullopt;
    MetricsReport m;
    if (!j.at("r2").is_null()) m.r2 = j.at("r2").get<double>();
    m.rmse = j.at("rmse").get<double>();
    m.n_test = j.at("n_test").get<std::size_t>();
    m.scheme = scheme;
    m.model = model;
    return m;
}

std::string fixed(double v, int digits = 3) { return fmt::format("{:.{}f}", v, digits); }

std::string format_p(double p) {
    if (p < 0.001) return "<0.001";
    return fixed(p);
}

std::string cell_r2(const std::optional<MetricsReport>& m) {
    if (!m) return "-";
    return m->r2 ? fixed(*m->r2) : "n/a";
}

std::string cell_rmse(const std::optional<MetricsReport>& m) { return m ? fixed(m->rmse) : "-"; }

}  // namespace

void PredictionTable::set(const std::string& model, const std::string& label, const MetricsReport& metrics,
                          std::span<const std::string> diagnostics) {
    auto it = std::find_if(rows.begin(), rows.end(), [&](const auto& r) { return r.model == model; });
    if (it == rows.end()) {
        rows.push_back({model, label, std::nullopt, std::nullopt, {}, false});
        it = rows.end() - 1;
    }
    (metrics.scheme == "loo" ? it->loo : it->lao) = metrics;
    it->diagnostics.insert(it->diagnostics.end(), diagnostics.begin(), diagnostics.end());
}

PredictionTable empty_prediction_table() {
    PredictionTable table;
    for (const auto& name : model_names()) {
        const auto spec = model_spec(name);
        table.rows.push_back({spec.name, spec.label, std::nullopt, std::nullopt, {}, false});
        if (name == "lasso") {
            table.rows.push_back({kPlaceholderModel, "XGBoost (not implemented)", std::nullopt, std::nullopt, {}, true});
        }
    }
    return table;
}

nlohmann::json to_json(const PredictionTable& table) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : table.rows) {
        rows.push_back({{"model", r.model},
                        {"label", r.label},
                        {"placeholder", r.placeholder},
                        {"lao", metrics_json(r.lao)},
                        {"loo", metrics_json(r.loo)},
                        {"diagnostics", r.diagnostics}});
    }
    return {{"columns", {"LAO R2", "LAO RMSE", "LOO R2", "LOO RMSE"}}, {"rows", rows}};
}

PredictionTable prediction_table_from_json(const nlohmann::json& j) {
    PredictionTable table;
    for (const auto& r : j.at("rows")) {
        PredictionRow row;
        row.model = r.at("model").get<std::string>();
        row.label = r.at("label").get<std::string>();
        row.placeholder = r.value("placeholder", false);
        row.lao = metrics_from_json(r.at("lao"), "lao", row.model);
        row.loo = metrics_from_json(r.at("loo"), "loo", row.model);
        if (r.contains("diagnostics")) row.diagnostics = r.at("diagnostics").get<std::vector<std::string>>();
        table.rows.push_back(std::move(row));
    }
    return table;
}

std::string format_metrics(const MetricsReport& m) {
    return fmt::format("R²={}, RMSE={}", m.r2 ? fixed(*m.r2) : "n/a", fixed(m.rmse));
}

std::string render_report(const ReportInputs& in) {
    std::ostringstream md;
    md << "# Bluetooth proximity features and PHQ-8 severity\n\n";
    md << "Intervals analysed: " << in.n_intervals << " from " << in.n_participants << " participants.\n\n";

    md << "## Associations with PHQ-8 (random-intercept models)\n\n";
    std::vector<const AssociationResult*> significant;
    std::size_t tested = 0;
    for (const auto& a : in.associations) {
        if (a.skipped) continue;
        ++tested;
        if (a.adjusted_p < kSignificanceLevel) significant.push_back(&a);
    }
    if (significant.empty()) {
        md << "There were no significant associations (" << tested
           << " features tested, Benjamini-Hochberg adjusted p < 0.05).\n\n";
    } else {
        md << "Features with adjusted p < 0.05 (" << significant.size() << " of " << tested << " tested). "
           << "Models adjust for age, gender and years in education.\n\n";
        md << "| Feature | Estimate | SE | p | Adjusted p |\n|---|---:|---:|---:|---:|\n";
        for (const auto* a : significant) {
            md << "| " << a->feature << " | " << fixed(a->estimate) << " | " << fixed(a->se) << " | "
               << format_p(a->p_value) << " | " << format_p(a->adjusted_p) << " |\n";
        }
        md << '\n';
    }
    std::vector<std::string> skipped;
    for (const auto& a : in.associations) {
        if (a.skipped) skipped.push_back(a.feature + " (" + *a.skipped + ")");
    }
    if (!skipped.empty()) {
        md << "Not tested: ";
        for (std::size_t i = 0; i < skipped.size(); ++i) md << (i ? ", " : "") << skipped[i];
        md << ".\n\n";
    }

    md << "## Nested model comparison (likelihood ratio tests)\n\n";
    if (in.lrt.is_null() || !in.lrt.contains("tests")) {
        md << "Not available.\n\n";
    } else {
        md << "| Model | Predictors | Fixed effects | Log-likelihood |\n|---|---|---:|---:|\n";
        for (const auto& m : in.lrt.at("models")) {
            md << "| " << m.at("model").get<std::string>() << " | " << m.at("predictors").get<std::string>() << " | "
               << m.at("n_fixed_effects").get<std::size_t>() << " | " << fixed(m.at("loglik").get<double>()) << " |\n";
        }
        md << "\n| Comparison | Diff. of parameters (df) | χ² | χ²0.05(df) | p |\n|---|---:|---:|---:|---:|\n";
        for (const auto& t : in.lrt.at("tests")) {
            md << "| " << t.at("comparison").get<std::string>() << " | " << t.at("df").get<int>() << " | "
               << fixed(t.at("chi2").get<double>(), 2) << " | " << fixed(t.at("critical_0_05").get<double>()) << " | "
               << format_p(t.at("p_value").get<double>()) << " |\n";
        }
        md << '\n';
    }

    md << "## Prediction performance\n\n";
    md << "| Model | LAO R² | LAO RMSE | LOO R² | LOO RMSE |\n|---|---:|---:|---:|---:|\n";
    for (const auto& r : in.prediction.rows) {
        md << "| " << r.label << " | " << cell_r2(r.lao) << " | " << cell_rmse(r.lao) << " | " << cell_r2(r.loo)
           << " | " << cell_rmse(r.loo) << " |\n";
    }
    md << '\n';
    for (const auto& r : in.prediction.rows) {
        if (r.lao) md << "- " << r.label << ", " << format_metrics(*r.lao) << " (LAO)\n";
        if (r.loo) md << "- " << r.label << ", " << format_metrics(*r.loo) << " (LOO)\n";
    }
    for (const auto& r : in.prediction.rows) {
        for (const auto& d : r.diagnostics) md << "- Warning (" << r.model << "): " << d << "\n";
    }
    md << '\n';

    if (!in.plot_files.empty()) {
        md << "## Plot data\n\n";
        for (const auto& f : in.plot_files) md << "- `" << f << "`\n";
        md << '\n';
    }
    if (!in.meta.is_null()) {
        md << "## Provenance\n\n```json\n" << in.meta.dump(2) << "\n```\n";
    }
    return md.str();
}

void write_mse_profiles_csv(std::ostream& out, std::span<const FeatureVector> features,
                            std::span<const std::string> meta_lines) {
    for (const auto& line : meta_lines) out << "# " << line << '\n';
    write_csv_row(out, {"band", "scale", "mean", "sd", "n"});
    const auto first_mse = *feature_index("MSE_1");
    std::map<int, std::vector<const FeatureVector*>> by_band;
    for (const auto& fv : features) by_band[static_cast<int>(severity_band(fv.phq8))].push_back(&fv);
    for (const auto& [band, rows] : by_band) {
        for (std::size_t s = 0; s < kEntropyFeatureCount; ++s) {
            std::vector<double> v;
            for (const auto* fv : rows) {
                const double x = fv->values[first_mse + s];
                if (std::isfinite(x)) v.push_back(x);
            }
            const double m = v.empty() ? 0.0 : mean(v);
            const double sd = v.size() > 1 ? sample_sd(v) : 0.0;
            write_csv_row(out, {std::string(to_string(static_cast<SeverityBand>(band))), std::to_string(s + 1),
                                format_double(m), format_double(sd), std::to_string(v.size())});
        }
    }
}

void write_spectra_csv(std::ostream& out, std::span<const NbdcInterval> intervals,
                       std::span<const std::string> meta_lines) {
    for (const auto& line : meta_lines) out << "# " << line << '\n';
    write_csv_row(out, {"example", "participant_id", "phq8_date", "score", "frequency", "power"});
    if (intervals.empty()) return;
    const auto score_less = [](const NbdcInterval& a, const NbdcInterval& b) { return a.phq8.score < b.phq8.score; };
    const auto lowest = std::min_element(intervals.begin(), intervals.end(), score_less);
    const auto highest = std::max_element(intervals.begin(), intervals.end(), score_less);
    for (const auto& [name, it] : {std::pair{"lowest_score", lowest}, std::pair{"highest_score", highest}}) {
        if (it->sequence.size() < kMinSpectrumLength) continue;
        const auto grid = power_spectrum(it->sequence);
        for (std::size_t k = 0; k < grid.power.size(); ++k) {
            write_csv_row(out, {name, it->participant_id, format_date(it->phq8.completion_date),
                                std::to_string(it->phq8.score), format_double(grid.frequencies[k]),
                                format_double(grid.power[k])});
        }
    }
}

}  // namespace proxiphene

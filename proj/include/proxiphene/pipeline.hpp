#pragma once

#include "proxiphene/cv.hpp"
#include "proxiphene/domain.hpp"
#include "proxiphene/features.hpp"
#include "proxiphene/ingest.hpp"
#include "proxiphene/report.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace proxiphene {

/// Everything a subcommand needs. Echoed into the metadata of every output.
struct RunConfig {
    std::string subcommand;
    std::filesystem::path scans;
    std::filesystem::path phq8;
    std::filesystem::path demographics;
    std::filesystem::path intervals;
    std::filesystem::path features;
    std::filesystem::path associations;
    std::filesystem::path lrt;
    std::filesystem::path metrics;
    std::filesystem::path spec;
    std::filesystem::path out;
    std::filesystem::path out_dir;
    std::string cutoff = "2020-02-01";
    std::string timezone = "UTC";
    MseParams mse;
    BandDefinition bands;
    std::string model = "hblr";
    std::string scheme = "lao";
    std::uint64_t seed = 42;
    int verbosity = 1;
    bool clip_predictions = false;
    McmcConfig mcmc;

    [[nodiscard]] nlohmann::json to_json() const;
    [[nodiscard]] FeatureConfig feature_config() const { return {mse, bands}; }
    [[nodiscard]] CvOptions cv_options() const;
};

struct LoadedDataset {
    std::vector<ScanRecord> scans;
    std::vector<Phq8Record> phq8;
    std::vector<Demographics> demographics;
    ValidationReport validation;
};

/// Reads and validates the input tables (demographics optional). Throws proxiphene::Error
/// (input) listing every fatal issue.
LoadedDataset load_dataset(const std::filesystem::path& scans, const std::filesystem::path& phq8,
                           const std::filesystem::path& demographics = {});
DemographicsIndex load_demographics(const std::filesystem::path& path);
std::vector<FeatureVector> load_features(const std::filesystem::path& path);
std::vector<NbdcInterval> load_intervals(const std::filesystem::path& path);

IntervalAssembly ingest_records(std::span<const ScanRecord> scans, std::span<const Phq8Record> phq8s, Date cutoff,
                                const TimeZone& zone);
/// Feature vectors in interval order; intervals are processed in parallel.
std::vector<FeatureVector> extract_all(std::span<const NbdcInterval> intervals, const FeatureConfig& config = {});

/// Fills the prediction table for the given models and schemes.
PredictionTable run_prediction(const Cohort& cohort, std::span<const std::string> models,
                               std::span<const CvScheme> schemes, const CvOptions& options);

// File-level steps. Each reads its inputs from `config`, writes its outputs and logs to `log`.
void run_ingest(const RunConfig& config, std::ostream& log);
void run_extract(const RunConfig& config, std::ostream& log);
void run_associate(const RunConfig& config, std::ostream& log);
void run_lrt(const RunConfig& config, std::ostream& log);
void run_predict(const RunConfig& config, std::ostream& log);
void run_cv_audit(const RunConfig& config, std::ostream& log);
void run_simulate(const RunConfig& config, std::ostream& log);
void run_report(const RunConfig& config, std::ostream& log);
/// Simulates a cohort into out_dir/synthetic when no scans are given, then runs every step
/// into out_dir.
void run_all(const RunConfig& config, std::ostream& log);

}  // namespace proxiphene

#pragma once

#include "proxiphene/domain.hpp"
#include "proxiphene/ingest.hpp"
#include "proxiphene/random.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace proxiphene {

/// Latent severity: s_k = u_p + persistence * (s_{k-1} - u_p) + noise, with u_p ~ N(mean, between_sd^2).
struct SeverityProcessSpec {
    double mean = 0.0;
    double between_sd = 1.0;
    double persistence = 0.3;
    double noise_sd = 1.0;
};

/// Hourly count = max(0, round(level + day_offset + amplitude * sin(2 pi h / 24 + phase)
///                              + weekly_amplitude * sin(2 pi d / 7) + noise)).
struct TraceSpec {
    double base_level = 12.0;
    double base_level_sd = 2.0;
    double amplitude = 6.0;
    double weekly_amplitude = 1.5;
    double noise_sd = 2.0;
    double day_sd = 2.0;
    double missing_rate = 0.05;      // per hour
    double day_missing_rate = 0.0;   // whole days without any scan
};

/// Per unit of latent severity. level is additive (counts); the others scale their
/// parameter multiplicatively as max(0.05, 1 + coefficient * s).
struct LinkageSpec {
    double level = -1.5;
    double amplitude = -0.25;
    double irregularity = 0.35;
    double variance = -0.2;
};

/// PHQ-8 = clip(round(intercept + slope * s + noise), 0, 24); slope >= 0.
struct PhqSpec {
    double intercept = 10.0;
    double slope = 4.0;
    double noise_sd = 2.0;
};

struct GeneratorSpec {
    int n_participants = 100;
    int min_intervals = 6;
    int max_intervals = 10;
    int interval_days = 14;
    std::string start_date = "2018-06-01";
    int start_jitter_days = 120;
    double female_rate = 0.74;
    SeverityProcessSpec severity;
    TraceSpec trace;
    LinkageSpec linkage;
    PhqSpec phq;
    std::uint64_t seed = 42;
};

/// Missing keys keep their defaults; unknown keys are rejected. Throws proxiphene::Error (input).
GeneratorSpec generator_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const GeneratorSpec& spec);
void validate_generator_spec(const GeneratorSpec& spec);

/// Trace parameters at one severity level.
struct TraceParams {
    double level = 0.0;
    double amplitude = 0.0;
    double noise_sd = 0.0;
    double day_sd = 0.0;
    double phase = 0.0;
    double weekly_amplitude = 0.0;
};

TraceParams trace_params(const GeneratorSpec& spec, double base_level, double phase, double severity);
double expected_phq8(const PhqSpec& phq, double severity);

/// One day of hourly counts (before missingness). `day_number` drives the weekly term.
std::array<double, 24> simulate_day(const TraceParams& params, long day_number, Rng& rng);

struct SyntheticCohort {
    std::vector<ScanRecord> scans;  // ordered by participant then time
    std::vector<Phq8Record> phq8;
    std::vector<Demographics> demographics;
    nlohmann::json ground_truth;
};

SyntheticCohort generate_cohort(const GeneratorSpec& spec);

/// Writes scans.csv, phq8.csv, demographics.csv and ground_truth.json into `dir`.
void write_cohort(const SyntheticCohort& cohort, const std::filesystem::path& dir);

/// A mild (regular, high-amplitude) and a moderately severe (irregular, low-amplitude)
/// 14-day trace with no missing hours.
std::pair<NbdcInterval, NbdcInterval> figure2_pair(std::uint64_t seed);

}  // namespace proxiphene

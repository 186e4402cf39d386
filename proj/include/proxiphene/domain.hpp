#pragma once

#include "proxiphene/civil_time.hpp"
#include "proxiphene/csv.hpp"

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace proxiphene {

inline constexpr int kPhq8Min = 0;
inline constexpr int kPhq8Max = 24;

/// PHQ-8 severity levels; left-closed bands with thresholds 5, 10, 15, 20.
enum class SeverityBand {
    asymptomatic,
    mild,
    moderate,
    moderately_severe,
    severe,
};

/// Throws std::out_of_range for scores outside 0-24.
SeverityBand severity_band(int score);
std::string_view to_string(SeverityBand band);

enum class Gender { female, male, other };

Gender parse_gender(std::string_view text);
std::string_view to_string(Gender gender);

/// One hourly scan. `line` is the source row (0 when constructed in code).
struct ScanRecord {
    std::string participant_id;
    Instant timestamp;
    std::int64_t device_count = 0;
    std::size_t line = 0;
};

struct Phq8Record {
    std::string participant_id;
    Date completion_date;
    int score = 0;
    std::size_t line = 0;
};

struct Demographics {
    std::string participant_id;
    double age_years = 0.0;
    Gender gender = Gender::other;
    double education_years = 0.0;
    std::size_t line = 0;

    /// Regression coding: female = 1, everything else 0.
    [[nodiscard]] double female_indicator() const { return gender == Gender::female ? 1.0 : 0.0; }
};

using DemographicsIndex = std::map<std::string, Demographics, std::less<>>;

struct Issue {
    std::string table;
    std::size_t line = 0;
    std::string message;
};

struct ValidationReport {
    std::vector<Issue> fatal;
    std::vector<Issue> warnings;

    [[nodiscard]] bool accepted() const { return fatal.empty(); }
    void merge(const ValidationReport& other);
    [[nodiscard]] std::string summary() const;
};

// Row parsers. Rows that cannot be parsed are reported as fatal issues and skipped;
// range violations are left for validate_dataset.
std::vector<ScanRecord> parse_scans(const CsvTable& table, ValidationReport& report);
std::vector<Phq8Record> parse_phq8(const CsvTable& table, ValidationReport& report);
std::vector<Demographics> parse_demographics(const CsvTable& table, ValidationReport& report);

/// Fatal: out-of-range scores, negative counts, duplicate demographics rows.
/// Warning: scans or PHQ-8 rows whose participant has no demographics (rows retained);
/// skipped when `check_orphans` is false.
ValidationReport validate_dataset(std::span<const ScanRecord> scans, std::span<const Phq8Record> phq8s,
                                  std::span<const Demographics> demographics, bool check_orphans = true);

/// Requires unique participant ids (check validate_dataset first).
DemographicsIndex index_demographics(std::span<const Demographics> demographics);

void write_scans_csv(std::ostream& out, std::span<const ScanRecord> scans);
void write_phq8_csv(std::ostream& out, std::span<const Phq8Record> phq8s);
void write_demographics_csv(std::ostream& out, std::span<const Demographics> demographics);

}  // namespace proxiphene
